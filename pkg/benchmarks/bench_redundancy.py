"""Benchmark the pairwise-redundancy kernel: compiled extension vs pure Python.

The kernel scans TF-IDF rows in order and marks every row whose cosine
similarity to an earlier row reaches the threshold -- O(n^2) dot products
over sparse rows, the hot loop of `redundancy_avoidance` on large runs.

Usage:
    python3 benchmarks/bench_redundancy.py [--sizes 200,1000,3000] [--repeat 5]
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from needlegauge.kernels import KERNEL_BACKEND, available_backends
from needlegauge.vectorize import fit_corpus, to_csr

WORDS = [f"word{i}" for i in range(400)]


def synthetic_corpus(n_rows: int, seed: int = 0) -> tuple:
    """TF-IDF CSR arrays for n_rows short texts with a 20% duplicate rate."""
    rng = random.Random(seed)
    texts: list[str] = []
    for _ in range(n_rows):
        if texts and rng.random() < 0.2:
            texts.append(rng.choice(texts))  # near-certain redundancy hit
        else:
            texts.append(" ".join(rng.choice(WORDS) for _ in range(rng.randint(5, 30))))
    model, vectors = fit_corpus(texts)
    return to_csr(vectors, model.vocabulary)


def time_backend(kernel, csr, threshold: float, repeat: int) -> tuple[float, np.ndarray]:
    indptr, indices, data = csr
    best = float("inf")
    mask = None
    for _ in range(repeat):
        started = time.perf_counter()
        mask = kernel(indptr, indices, data, threshold)
        best = min(best, time.perf_counter() - started)
    return best, np.asarray(mask)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="200,1000,3000")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--threshold", type=float, default=0.2)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    backends = available_backends()
    print(f"selected backend at import: {KERNEL_BACKEND}")
    print(f"available: {', '.join(backends)}\n")
    header = f"{'rows':>6}  " + "".join(f"{name:>12}  " for name in backends) + "speedup"
    print(header)
    print("-" * len(header))

    for size in sizes:
        csr = synthetic_corpus(size)
        timings = {}
        masks = {}
        for name, kernel in backends.items():
            timings[name], masks[name] = time_backend(kernel, csr, args.threshold, args.repeat)
        reference = next(iter(masks.values()))
        for name, mask in masks.items():
            assert np.array_equal(mask, reference), f"backend {name} disagrees"
        cells = "".join(f"{timings[name] * 1000:>10.2f}ms  " for name in backends)
        if "compiled" in timings and "python" in timings:
            speedup = f"{timings['python'] / timings['compiled']:.1f}x"
        else:
            speedup = "n/a"
        print(f"{size:>6}  {cells}{speedup}")


if __name__ == "__main__":
    main()
