"""Reference-free quality scores for an extraction viewed as a summary.

The family: semantic similarity (TF-IDF cosine blended with a latent-space
cosine), relevance (METEOR-style unigram F-mean without the fragmentation
penalty), relevance spread across pieces, redundancy avoidance at a cosine
threshold (whole entities or a single pivotal property), bias avoidance
(fraction of extracted entities grounded in the source text), and the
incompleteness ratio. Every score is a pure function of its inputs.
"""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import EmptyEntityList, EmptyInput, ZeroMean
from .extraction import ExtractionRun
from .kernels import mask_first_redundant
from .schema import Entity, Schema, entities_to_text, entity_to_text, validate_entity
from .textnorm import is_unfilled, normalize, tokenize
from .vectorize import TfidfModel, cosine, fit_corpus, term_document_matrix, to_csr

log = logging.getLogger(__name__)

LATENT_RANK_CAP = 50

DEFAULT_REDUNDANCY_THRESHOLDS = (0.1, 0.2)
DEFAULT_KEYED_THRESHOLDS = ((0.5, "name"),)


def _latent_coordinates(matrix: np.ndarray, rank: int) -> np.ndarray:
    """Document coordinates in the truncated latent space (docs x rank)."""
    _, singular, vt = np.linalg.svd(matrix, full_matrices=False)
    rank = min(rank, vt.shape[0])
    return (singular[:rank, None] * vt[:rank, :]).T


def _cosine_rows(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def semantic_similarity(document: str, extraction: str, context: Sequence[str] = ()) -> float:
    """Blend of TF-IDF cosine and latent-space cosine between two texts.

    Both components are computed over the run-local corpus (the two texts
    plus optional context documents, e.g. the pieces of the source). The
    latent space is a rank-min(50, docs-1) truncation of the term-document
    matrix; a negative latent cosine counts as zero similarity. Symmetric,
    and exactly 1.0 for identical texts.
    """
    if not document.strip() or not extraction.strip():
        raise EmptyInput("semantic_similarity needs two non-empty texts")
    texts = [document, extraction, *context]
    model, vectors = fit_corpus(texts)
    direct = cosine(vectors[0], vectors[1])
    matrix = term_document_matrix(vectors, model.vocabulary)
    rank = max(1, min(LATENT_RANK_CAP, len(texts) - 1))
    coords = _latent_coordinates(matrix, rank)
    latent = _cosine_rows(coords[0], coords[1])
    blended = (max(0.0, direct) + max(0.0, latent)) / 2.0
    return min(1.0, max(0.0, blended))


def relevance(reference: str, candidate: str) -> float:
    """Unigram F-mean 10PR / (R + 9P) over exact token matches.

    P and R are unigram precision and recall with clipped (multiset)
    counts. No stemming, no synonym matching, no fragmentation penalty.
    Zero when there is no overlap or the candidate is empty; 1.0 when the
    candidate equals the reference.
    """
    ref_tokens = tokenize(reference)
    cand_tokens = tokenize(candidate)
    if not ref_tokens or not cand_tokens:
        return 0.0
    ref_counts = Counter(ref_tokens)
    cand_counts = Counter(cand_tokens)
    matched = sum(min(count, ref_counts[token]) for token, count in cand_counts.items())
    if matched == 0:
        return 0.0
    precision = matched / len(cand_tokens)
    recall = matched / len(ref_tokens)
    return 10.0 * precision * recall / (recall + 9.0 * precision)


def relevance_spread(per_piece_relevance: Sequence[float]) -> float:
    """Population standard deviation over the mean of per-piece relevances.

    Values above 1 are possible for very unbalanced extractions and are
    reported as-is.
    """
    if len(per_piece_relevance) == 0:
        raise EmptyInput("relevance_spread needs at least one value")
    values = np.asarray(per_piece_relevance, dtype=float)
    mean = float(values.mean())
    if mean == 0.0:
        raise ZeroMean("all per-piece relevance values are zero")
    return float(values.std() / mean)


def _entity_key_text(entity: Entity, key: str) -> str:
    value = entity.properties.get(key)
    if value is None:
        return ""
    if isinstance(value, list):
        return ", ".join(str(v) for v in value)
    return str(value)


def redundancy_avoidance(
    entities: Sequence[Entity], threshold: float, key: str | None = None
) -> float:
    """Share of entities that are not near-duplicates of an earlier one.

    Entity i counts as redundant when some earlier entity j < i has TF-IDF
    cosine similarity >= threshold, computed over the full serialized
    entity, or over the `key` property only when given. Returns
    1 - redundant/total.
    """
    if not entities:
        raise EmptyEntityList("redundancy_avoidance needs at least one entity")
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must be in (0, 1]")
    if key is None:
        texts = [entity_to_text(e) for e in entities]
    else:
        texts = [_entity_key_text(e, key) for e in entities]
    model, vectors = fit_corpus(texts)
    indptr, indices, data = to_csr(vectors, model.vocabulary)
    mask = mask_first_redundant(indptr, indices, data, threshold)
    redundant = int(np.asarray(mask).sum())
    return (len(entities) - redundant) / len(entities)


def redundancy(
    entities_a: Sequence[Entity], entities_b: Sequence[Entity], key: str = "name"
) -> float:
    """Fraction of entities_b whose `key` value already occurs in entities_a.

    Values are compared by normalized string equality; entities with an
    unfilled key never match.
    """
    if not entities_b:
        raise EmptyEntityList("redundancy needs a non-empty second entity list")
    known = set()
    for entity in entities_a:
        value = _entity_key_text(entity, key)
        if not is_unfilled(value):
            known.add(normalize(value))
    if not known:
        return 0.0
    hits = 0
    for entity in entities_b:
        value = _entity_key_text(entity, key)
        if not is_unfilled(value) and normalize(value) in known:
            hits += 1
    return hits / len(entities_b)


def bias_avoidance(document: str, entities: Sequence[Entity]) -> float:
    """Fraction of extracted entities grounded in the source text.

    An entity is grounded when its normalized name occurs as a substring
    of the normalized document; the denominator is the number of extracted
    entities, so low values signal likely hallucination.
    """
    if not entities:
        raise EmptyEntityList("bias_avoidance is undefined for zero entities")
    doc_norm = normalize(document)
    grounded = 0
    for entity in entities:
        name = entity.name
        if name is None:
            continue
        name_norm = normalize(name)
        if name_norm and name_norm in doc_norm:
            grounded += 1
    return grounded / len(entities)


def incompleteness(entities: Sequence[Entity], schema: Schema) -> float:
    """Proportion of entities with at least one required property unfilled."""
    if not entities:
        raise EmptyEntityList("incompleteness is undefined for zero entities")
    incomplete = sum(
        1 for e in entities if validate_entity(e, schema).missing_required
    )
    return incomplete / len(entities)


@dataclass(frozen=True)
class ScoreVector:
    """All summary-quality scores for one extraction run."""

    semantic_similarity: float
    relevance: float
    relevance_spread: float
    redundancy_avoidance: dict[float, float]
    redundancy_avoidance_keyed: dict[tuple[float, str], float]
    bias_avoidance: float
    incompleteness: float

    def to_flat_json(self) -> dict[str, float | bool]:
        flat: dict[str, float | bool] = {
            "semantic_similarity": self.semantic_similarity,
            "relevance": self.relevance,
            "relevance_spread": self.relevance_spread,
        }
        for threshold, value in sorted(self.redundancy_avoidance.items()):
            flat[f"redundancy_avoidance@{threshold:g}"] = value
        for (threshold, key), value in sorted(self.redundancy_avoidance_keyed.items()):
            flat[f"redundancy_avoidance@{threshold:g}:{key}"] = value
        flat["bias_avoidance"] = self.bias_avoidance
        flat["incompleteness"] = self.incompleteness
        if self.relevance_spread > 1.0:
            flat["relevance_spread_gt_1"] = True
        return flat

    @staticmethod
    def row_names(
        redundancy_thresholds: Sequence[float] = DEFAULT_REDUNDANCY_THRESHOLDS,
        keyed_thresholds: Sequence[tuple[float, str]] = DEFAULT_KEYED_THRESHOLDS,
    ) -> list[str]:
        names = ["semantic_similarity", "relevance", "relevance_spread"]
        names += [f"redundancy_avoidance@{t:g}" for t in sorted(redundancy_thresholds)]
        names += [f"redundancy_avoidance@{t:g}:{k}" for t, k in sorted(keyed_thresholds)]
        names += ["bias_avoidance", "incompleteness"]
        return names


def score_vector(
    document: str,
    pieces: Sequence,
    run: ExtractionRun,
    schema: Schema,
    redundancy_thresholds: Sequence[float] = DEFAULT_REDUNDANCY_THRESHOLDS,
    keyed_thresholds: Sequence[tuple[float, str]] = DEFAULT_KEYED_THRESHOLDS,
) -> ScoreVector:
    """Assemble the full score family for one extraction run.

    Per-piece relevance uses the entities extracted from that piece (by
    provenance) when the run carries provenance, otherwise the whole
    serialized extraction against each piece.
    """
    entities = list(run.entities)
    if not entities:
        raise EmptyEntityList("cannot score an empty extraction run")
    extraction_text = entities_to_text(entities)
    piece_texts = [p.text for p in pieces]

    has_provenance = any(e.provenance is not None for e in entities)
    per_piece = []
    for i, piece_text in enumerate(piece_texts):
        if has_provenance:
            piece_entities = [e for e in entities if e.provenance and e.provenance.piece == i]
            candidate = entities_to_text(piece_entities) if piece_entities else ""
        else:
            candidate = extraction_text
        per_piece.append(relevance(piece_text, candidate))

    spread = relevance_spread(per_piece) if per_piece else 0.0
    if spread > 1.0:
        log.warning("relevance_spread %.4f exceeds 1; extraction is very unbalanced", spread)

    return ScoreVector(
        semantic_similarity=semantic_similarity(document, extraction_text, context=piece_texts),
        relevance=relevance(document, extraction_text),
        relevance_spread=spread,
        redundancy_avoidance={
            t: redundancy_avoidance(entities, t) for t in redundancy_thresholds
        },
        redundancy_avoidance_keyed={
            (t, k): redundancy_avoidance(entities, t, key=k) for t, k in keyed_thresholds
        },
        bias_avoidance=bias_avoidance(document, entities),
        incompleteness=incompleteness(entities, schema),
    )
