#!/usr/bin/env python3
"""Independent oracle for the blended semantic-similarity score.

Reimplements the score with dense numpy arrays end to end (raw-count tf,
idf = ln((1+N)/(1+df)) + 1, cosine of the first two columns, plus the
rank-min(50, N-1) latent-space cosine from an SVD of the term-document
matrix; negative components clamp to zero, and the blend is the mean of
the two). Shares no code with the library. Freezes the results as
tests/fixtures/semantic_pairs.json. Run from the repo root:

    python3 scripts/semantic_similarity_oracle.py
"""

import json
import re
from pathlib import Path

import numpy as np

WORD = re.compile(r"[0-9a-z]+")


def words(text):
    return WORD.findall(text.lower())


def tfidf_matrix(texts):
    docs = [words(t) for t in texts]
    vocab = sorted({w for doc in docs for w in doc})
    index = {w: i for i, w in enumerate(vocab)}
    tf = np.zeros((len(vocab), len(texts)))
    for j, doc in enumerate(docs):
        for w in doc:
            tf[index[w], j] += 1.0
    df = (tf > 0).sum(axis=1)
    idf = np.log((1.0 + len(texts)) / (1.0 + df)) + 1.0
    return tf * idf[:, None]


def col_cosine(matrix, i, j):
    a, b = matrix[:, i], matrix[:, j]
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))


def blended(texts):
    matrix = tfidf_matrix(texts)
    direct = col_cosine(matrix, 0, 1)
    _, s, vt = np.linalg.svd(matrix, full_matrices=False)
    rank = min(max(1, min(50, len(texts) - 1)), vt.shape[0])
    coords = (s[:rank, None] * vt[:rank, :]).T
    na, nb = np.linalg.norm(coords[0]), np.linalg.norm(coords[1])
    latent = 0.0 if na == 0.0 or nb == 0.0 else float(coords[0] @ coords[1] / (na * nb))
    value = (max(0.0, direct) + max(0.0, latent)) / 2.0
    return min(1.0, max(0.0, value))


CASES = [
    ["the cat sat on the mat", "the cat sat on the mat"],
    ["alpha beta gamma", "delta epsilon zeta"],
    ["the cat sat", "the cat"],
    ["solar panels convert sunlight", "panels convert sunlight into power"],
    ["a b c d", "c d e f"],
    # with context documents enriching the latent space
    [
        "machine learning models extract entities",
        "entity extraction with learned models",
        "statistical models of language",
        "databases store structured entities",
        "gardening tips for spring",
    ],
    [
        "the committee approved the budget",
        "budget approval by the committee",
        "the committee met on tuesday",
        "weather was mild in october",
    ],
    [
        "copper ore mining in the north",
        "northern copper extraction",
        "iron ore shipping routes",
        "copper wire manufacturing",
        "a history of mining towns",
        "ore processing plants",
    ],
    ["one two three", "four five six", "one four", "two five", "three six"],
    ["word", "word", "word word word"],
    [
        "deep networks memorize long contexts poorly",
        "long context recall degrades in the middle",
        "retrieval augmented generation",
    ],
    ["x y z", "z y x"],
]


def main():
    out = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "semantic_pairs.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    rows = [{"texts": texts, "expected": blended(texts)} for texts in CASES]
    out.write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(rows)} cases to {out}")


if __name__ == "__main__":
    main()
