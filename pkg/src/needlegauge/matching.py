"""Needle identification criteria and MINEA aggregation.

Four criteria decide whether an infused needle was recovered by extraction:
`n` (exact name match), `ns` (needle name appears anywhere in the
serialized run), `k(t)` (a fraction >= t of the needle's keywords matches
one entity's keywords), and `llm` (a strict yes/no verdict from the model).
Per-type MINEA is the maximum criterion success ratio for that type; the
overall score is the count-weighted mean of the per-type values.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

from .errors import FingerprintMismatch, MissingPairError, UnparseableVerdict
from .extraction import ExtractionRun
from .forge import Needle
from .gateway import ChatMessage, Gateway, Thread
from .schema import Entity, entities_to_text
from .textnorm import normalize

DEFAULT_CRITERIA = ("n", "ns", "k0.5", "k0.6", "k0.7", "llm")

MATCH_LLM_PROMPT = """\
Decide whether the entity described below appears among the extracted \
entities. The match does not need to be verbatim: the same real-world \
entity under a slightly different name still counts.

Reply with exactly one word: yes or no.

ENTITY:
name: {name}
description: {description}
keywords: {keywords}

EXTRACTED ENTITIES:
{entities}"""


def k_label(threshold: float) -> str:
    return f"k{threshold:g}"


@dataclass(frozen=True)
class CriterionResult:
    """Outcome of one identification criterion for one needle."""

    needle_id: str
    criterion: str
    satisfied: bool
    evidence: tuple[str, ...] = ()


def match_n(needle: Needle, entities: Sequence[Entity]) -> CriterionResult:
    """Exact (normalized) equality between needle name and an entity name."""
    target = normalize(needle.name)
    if not target:
        return CriterionResult(needle.id, "n", False)
    for entity in entities:
        name = entity.name
        if name is not None and normalize(name) == target:
            return CriterionResult(needle.id, "n", True, (name,))
    return CriterionResult(needle.id, "n", False)


def match_ns(needle: Needle, run: ExtractionRun) -> CriterionResult:
    """Needle name found anywhere in the serialized extraction."""
    serialized = normalize(entities_to_text(run.entities))
    target = normalize(needle.name)
    satisfied = bool(target) and target in serialized
    return CriterionResult(needle.id, "ns", satisfied)


def _entity_keywords(entity: Entity) -> set[str]:
    value = entity.properties.get("keywords")
    if value is None:
        return set()
    items = value if isinstance(value, list) else str(value).split(",")
    return {normalize(str(item)) for item in items if normalize(str(item))}


def match_k(
    needle: Needle, entities: Sequence[Entity], threshold: float
) -> CriterionResult:
    """Some entity shares at least `threshold` of the needle's keywords.

    Keyword comparison is normalized string equality against the entity's
    own `keywords` property.
    """
    if not needle.keywords:
        raise ValueError("match_k needs a needle with at least one keyword")
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must be in (0, 1]")
    label = k_label(threshold)
    best: tuple[str, ...] = ()
    for entity in entities:
        entity_kw = _entity_keywords(entity)
        if not entity_kw:
            continue
        matched = tuple(kw for kw in needle.keywords if normalize(kw) in entity_kw)
        if len(matched) / len(needle.keywords) >= threshold:
            return CriterionResult(needle.id, label, True, matched)
        if len(matched) > len(best):
            best = matched
    return CriterionResult(needle.id, label, False, best)


def parse_verdict(reply: str) -> bool:
    token = reply.strip().lower().rstrip(".!")
    if token == "yes":
        return True
    if token == "no":
        return False
    raise UnparseableVerdict(f"expected a yes/no verdict, got {reply!r}")


def match_llm(
    gateway: Gateway, needle: Needle, entities: Sequence[Entity]
) -> CriterionResult:
    """Ask the model whether any extracted entity matches the needle."""
    prompt = MATCH_LLM_PROMPT.format(
        name=needle.name,
        description=needle.description,
        keywords=", ".join(needle.keywords),
        entities=entities_to_text(entities) if entities else "(none)",
    )
    reply, _ = gateway.send(Thread.empty(), ChatMessage(role="user", content=prompt))
    return CriterionResult(needle.id, "llm", parse_verdict(reply.content), (reply.content.strip(),))


@dataclass(frozen=True)
class MineaReport:
    """Per-type criterion ratios, per-type MINEA, and the weighted overall."""

    ratios: dict[str, dict[str, float]]
    counts: dict[str, int]
    per_type: dict[str, float]
    overall: float
    criteria: tuple[str, ...]
    model_label: str = ""
    fingerprint: str = ""

    def to_json(self) -> dict:
        return {
            "model": self.model_label,
            "criteria": list(self.criteria),
            "types": {
                t: {
                    "count": self.counts[t],
                    "ratios": dict(sorted(self.ratios[t].items())),
                    "minea": self.per_type[t],
                }
                for t in sorted(self.ratios)
            },
            "overall": self.overall,
            "fingerprint": self.fingerprint,
        }

    def to_csv_rows(self) -> list[dict]:
        """One row per (type, criterion); `is_max` marks the per-type winner."""
        rows = []
        for entity_type in sorted(self.ratios):
            winner = self.per_type[entity_type]
            for criterion in self.criteria:
                if criterion not in self.ratios[entity_type]:
                    continue
                ratio = self.ratios[entity_type][criterion]
                rows.append(
                    {
                        "type": entity_type,
                        "criterion": criterion,
                        "ratio": ratio,
                        "is_max": ratio == winner,
                    }
                )
        return rows


def weighted_overall(per_type: Mapping[str, float], counts: Mapping[str, int]) -> float:
    total = sum(counts[t] for t in per_type)
    if total == 0:
        raise ValueError("needle counts sum to zero")
    return sum(per_type[t] * counts[t] for t in per_type) / total


def aggregate_minea(
    ratios: Mapping[str, Mapping[str, float]],
    counts: Mapping[str, int],
    model_label: str = "",
    fingerprint: str = "",
) -> MineaReport:
    """Build a report from already-computed per-(type, criterion) ratios.

    Useful for re-aggregating published ratio tables as well as internally
    by minea().
    """
    if not ratios:
        raise ValueError("ratios must cover at least one entity type")
    criteria_seen: list[str] = []
    for entity_type, row in ratios.items():
        if entity_type not in counts:
            raise ValueError(f"no needle count for type {entity_type!r}")
        if not row:
            raise ValueError(f"type {entity_type!r} has no criterion ratios")
        for criterion, ratio in row.items():
            if not 0.0 <= ratio <= 1.0:
                raise ValueError(
                    f"ratio {ratio} for ({entity_type}, {criterion}) outside [0, 1]"
                )
            if criterion not in criteria_seen:
                criteria_seen.append(criterion)
    per_type = {t: max(row.values()) for t, row in ratios.items()}
    return MineaReport(
        ratios={t: dict(row) for t, row in ratios.items()},
        counts={t: counts[t] for t in ratios},
        per_type=per_type,
        overall=weighted_overall(per_type, {t: counts[t] for t in ratios}),
        criteria=tuple(criteria_seen),
        model_label=model_label,
        fingerprint=fingerprint,
    )


def minea(
    results: Iterable[CriterionResult],
    needles: Sequence[Needle],
    criteria: Sequence[str] = DEFAULT_CRITERIA,
    model_label: str = "",
    fingerprint: str = "",
) -> MineaReport:
    """Aggregate criterion results into per-type and overall MINEA.

    Every (needle, criterion) pair must be present exactly once.
    """
    type_of = {n.id: n.entity_type for n in needles}
    indexed: dict[tuple[str, str], CriterionResult] = {}
    for result in results:
        key = (result.needle_id, result.criterion)
        if key in indexed:
            raise MissingPairError(f"duplicate result for {key}")
        if result.needle_id not in type_of:
            raise MissingPairError(f"result for unknown needle {result.needle_id}")
        if result.criterion not in criteria:
            raise MissingPairError(f"result for unknown criterion {result.criterion!r}")
        indexed[key] = result

    missing = [
        (n.id, c) for n in needles for c in criteria if (n.id, c) not in indexed
    ]
    if missing:
        raise MissingPairError(f"missing {len(missing)} results, first: {missing[0]}")

    counts: dict[str, int] = {}
    satisfied: dict[str, dict[str, int]] = {}
    for needle in needles:
        counts[needle.entity_type] = counts.get(needle.entity_type, 0) + 1
        row = satisfied.setdefault(needle.entity_type, {c: 0 for c in criteria})
        for criterion in criteria:
            if indexed[(needle.id, criterion)].satisfied:
                row[criterion] += 1

    ratios = {
        t: {c: row[c] / counts[t] for c in criteria} for t, row in satisfied.items()
    }
    return aggregate_minea(ratios, counts, model_label=model_label, fingerprint=fingerprint)


def compare_models(reports: Sequence[MineaReport]) -> list[dict]:
    """Rank labeled reports by overall MINEA, best first; ties keep input order.

    All reports must stem from the same infusion (equal fingerprints).
    """
    if len(reports) < 2:
        raise ValueError("compare_models needs at least two reports")
    fingerprints = {r.fingerprint for r in reports}
    if len(fingerprints) > 1:
        raise FingerprintMismatch(
            f"reports stem from different infusions: {sorted(fingerprints)}"
        )
    ranked = sorted(reports, key=lambda r: -r.overall)
    return [{"model": r.model_label, "minea": r.overall} for r in ranked]
