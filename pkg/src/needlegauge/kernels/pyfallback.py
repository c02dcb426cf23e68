"""Pure-Python redundancy kernel, algorithmically identical to the compiled one.

Kept operation-for-operation in sync with _redundancy.pyx (same merge order,
same accumulation order) so both backends produce bit-identical masks.
"""

from __future__ import annotations

import numpy as np

# Comparison slack so exact duplicates (self-dot = 1 - ulp after
# normalization) still trip an inclusive threshold of 1.0.
COSINE_EPS = 1e-12


def mask_first_redundant(indptr, indices, data, threshold: float):
    """Mark rows whose cosine with any earlier row reaches the threshold.

    Rows are CSR-encoded, index-sorted, L2-normalized sparse vectors; the
    dot product of two rows is then their cosine. Row 0 is never marked.
    """
    n = len(indptr) - 1
    out = np.zeros(n, dtype=np.uint8)
    for i in range(1, n):
        for j in range(i):
            ai, aend = indptr[i], indptr[i + 1]
            bi, bend = indptr[j], indptr[j + 1]
            dot = 0.0
            while ai < aend and bi < bend:
                ka = indices[ai]
                kb = indices[bi]
                if ka == kb:
                    dot += data[ai] * data[bi]
                    ai += 1
                    bi += 1
                elif ka < kb:
                    ai += 1
                else:
                    bi += 1
            if dot >= threshold - COSINE_EPS:
                out[i] = 1
                break
    return out
