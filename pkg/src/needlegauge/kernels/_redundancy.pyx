"""Compiled redundancy kernel: first-match cosine marking over sparse rows.

Mirrors kernels/pyfallback.py exactly; keep the two in sync.
"""

import numpy as np

# Comparison slack so exact duplicates (self-dot = 1 - ulp after
# normalization) still trip an inclusive threshold of 1.0.
cdef double COSINE_EPS = 1e-12


def mask_first_redundant(const int[::1] indptr, const int[::1] indices,
                         const double[::1] data, double threshold):
    """Mark rows whose cosine with any earlier row reaches the threshold.

    Rows are CSR-encoded, index-sorted, L2-normalized sparse vectors; the
    dot product of two rows is then their cosine. Row 0 is never marked.
    """
    cdef Py_ssize_t n = indptr.shape[0] - 1
    out_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef int ai, aend, bi, bend, ka, kb
    cdef double dot
    for i in range(1, n):
        for j in range(i):
            ai = indptr[i]
            aend = indptr[i + 1]
            bi = indptr[j]
            bend = indptr[j + 1]
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
    return out_arr
