"""TF-IDF term vectors over a run-local corpus.

The corpus is always whatever texts take part in one score computation
(document, pieces, serialized entities) -- never an external collection.
A smoothed IDF keeps every present term at positive weight, so identical
non-empty texts always have cosine 1.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Sequence

import numpy as np

from .textnorm import tokenize


class TfidfModel:
    """Term weights fitted on a fixed small corpus.

    tf = raw term count; idf = ln((1 + N) / (1 + df)) + 1.
    """

    def __init__(self, corpus_tokens: Sequence[Sequence[str]]):
        self.n_docs = len(corpus_tokens)
        df: Counter[str] = Counter()
        for tokens in corpus_tokens:
            df.update(set(tokens))
        self.idf = {
            term: math.log((1 + self.n_docs) / (1 + count)) + 1.0 for term, count in df.items()
        }
        self.vocabulary = {term: i for i, term in enumerate(sorted(self.idf))}

    def vector(self, tokens: Sequence[str]) -> dict[str, float]:
        """Sparse term -> tf*idf mapping; terms outside the corpus are ignored."""
        counts = Counter(t for t in tokens if t in self.idf)
        return {term: count * self.idf[term] for term, count in counts.items()}


def fit_corpus(texts: Sequence[str]) -> tuple[TfidfModel, list[dict[str, float]]]:
    """Tokenize and vectorize a corpus; returns the model and one vector per text."""
    corpus_tokens = [tokenize(t) for t in texts]
    model = TfidfModel(corpus_tokens)
    return model, [model.vector(toks) for toks in corpus_tokens]


def l2_normalize(vec: dict[str, float]) -> dict[str, float]:
    norm = math.sqrt(sum(w * w for w in vec.values()))
    if norm == 0.0:
        return {}
    return {term: w / norm for term, w in vec.items()}


def cosine(a: dict[str, float], b: dict[str, float]) -> float:
    """Cosine similarity of sparse vectors; 0 when either is empty/zero."""
    na = math.sqrt(sum(w * w for w in a.values()))
    nb = math.sqrt(sum(w * w for w in b.values()))
    if na == 0.0 or nb == 0.0:
        return 0.0
    if len(b) < len(a):
        a, b = b, a
    dot = sum(w * b[t] for t, w in a.items() if t in b)
    return max(-1.0, min(1.0, dot / (na * nb)))


def to_csr(
    vectors: Sequence[dict[str, float]], vocabulary: dict[str, int]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row-normalized CSR arrays (indptr, indices, data) for the kernels.

    Rows with zero norm stay empty, so they never match anything.
    """
    indptr = np.zeros(len(vectors) + 1, dtype=np.int32)
    index_chunks: list[np.ndarray] = []
    data_chunks: list[np.ndarray] = []
    nnz = 0
    for row, vec in enumerate(vectors):
        normalized = l2_normalize(vec)
        pairs = sorted((vocabulary[t], w) for t, w in normalized.items() if t in vocabulary)
        nnz += len(pairs)
        indptr[row + 1] = nnz
        if pairs:
            index_chunks.append(np.fromiter((p[0] for p in pairs), dtype=np.int32, count=len(pairs)))
            data_chunks.append(np.fromiter((p[1] for p in pairs), dtype=np.float64, count=len(pairs)))
    indices = np.concatenate(index_chunks) if index_chunks else np.zeros(0, dtype=np.int32)
    data = np.concatenate(data_chunks) if data_chunks else np.zeros(0, dtype=np.float64)
    return indptr, indices, data


def term_document_matrix(
    vectors: Sequence[dict[str, float]], vocabulary: dict[str, int]
) -> np.ndarray:
    """Dense terms-by-documents matrix (column j = vector of text j)."""
    matrix = np.zeros((len(vocabulary), len(vectors)))
    for col, vec in enumerate(vectors):
        for term, weight in vec.items():
            row = vocabulary.get(term)
            if row is not None:
                matrix[row, col] = weight
    return matrix
