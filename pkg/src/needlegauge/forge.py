"""Needle generation, annotation, and seeded infusion into host documents.

A needle is a short synthetic paragraph introducing an entity that does not
occur in the host document but plausibly could. Needles are generated and
annotated by the LLM, then spliced into the document at natural boundaries
by a seeded RNG so the enriched text is reproducible and exactly
reversible.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

from .chunking import paragraph_boundaries, sentence_boundaries
from .errors import (
    CorruptionError,
    EmptyDocument,
    FillRatioInfeasible,
    InfusionError,
    NoveltyFailure,
    ResponseValidationError,
)
from .extraction import find_json_payload
from .gateway import ChatMessage, Gateway, Thread
from .textnorm import normalize

log = logging.getLogger(__name__)

FILL_FLOOR = 0.10
FILL_CEILING = 0.30
MIN_KEYWORDS = 3

GENERATE_NEEDLES_PROMPT = """\
You are preparing a retrieval stress test. Read the document below, then \
invent {count} new entities of type "{entity_type}". Each entity must NOT \
appear in the document, but must be plausible within the document's scope.

Reply with a JSON array of exactly {count} objects, each of the form
{{"name": "...", "paragraph": "..."}}, where "paragraph" is a short \
self-contained paragraph (2-4 sentences) introducing the entity.{avoid}

DOCUMENT:
{document}"""

ANNOTATE_NEEDLE_PROMPT = """\
The paragraph below introduces one entity of type "{entity_type}". Reply \
with a JSON object of the form
{{"name": "...", "description": "...", "keywords": ["...", "..."]}}
giving the entity's name, a one-sentence description, and at least \
{min_keywords} distinctive keywords.

PARAGRAPH:
{paragraph}"""


def _content_id(entity_type: str, name: str, paragraph: str) -> str:
    digest = hashlib.sha256(
        "\x1f".join((entity_type, name, paragraph)).encode("utf-8")
    ).hexdigest()
    return f"ndl-{digest[:16]}"


@dataclass(frozen=True)
class Needle:
    """One synthetic entity paragraph, optionally annotated."""

    entity_type: str
    paragraph: str
    name: str = ""
    description: str = ""
    keywords: tuple[str, ...] = ()
    insertion_offset: int | None = None
    id: str = field(init=False)

    def __post_init__(self) -> None:
        if not self.paragraph.strip():
            raise ValueError("needle paragraph must be non-empty")
        object.__setattr__(
            self, "id", _content_id(self.entity_type, self.name, self.paragraph)
        )

    @property
    def annotated(self) -> bool:
        return bool(self.name) and len(self.keywords) >= MIN_KEYWORDS


@dataclass(frozen=True)
class Placement:
    """Where one needle sits inside the enriched text."""

    needle_id: str
    offset: int
    length: int


@dataclass(frozen=True)
class InfusedDocument:
    """An enriched document plus everything needed to undo the infusion."""

    enriched_text: str
    placements: tuple[Placement, ...]
    fill_ratio: float
    seed: int
    original_ref: str
    below_floor: bool = False
    needles: tuple[Needle, ...] = ()

    @property
    def fingerprint(self) -> str:
        payload = json.dumps(
            {
                "original_ref": self.original_ref,
                "seed": self.seed,
                "placements": [
                    [p.needle_id, p.offset, p.length] for p in self.placements
                ],
            },
            sort_keys=True,
        )
        return "sha256:" + hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def to_json(self) -> dict:
        return {
            "original_ref": self.original_ref,
            "enriched_text": self.enriched_text,
            "placements": [
                {"id": p.needle_id, "offset": p.offset, "length": p.length}
                for p in self.placements
            ],
            "fill_ratio": self.fill_ratio,
            "seed": self.seed,
            "below_floor": self.below_floor,
        }

    @classmethod
    def from_json(cls, payload: dict) -> InfusedDocument:
        return cls(
            enriched_text=payload["enriched_text"],
            placements=tuple(
                Placement(p["id"], int(p["offset"]), int(p["length"]))
                for p in payload["placements"]
            ),
            fill_ratio=float(payload["fill_ratio"]),
            seed=int(payload["seed"]),
            original_ref=payload["original_ref"],
            below_floor=bool(payload.get("below_floor", False)),
        )


def _sha_ref(text: str) -> str:
    return "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()


def _parse_generated(reply: str, count: int) -> list[dict]:
    items = find_json_payload(reply)
    if not isinstance(items, list):
        raise ResponseValidationError("needle generation reply must be a JSON array")
    cleaned = []
    for item in items:
        if not isinstance(item, dict):
            continue
        name = str(item.get("name", "")).strip()
        paragraph = str(item.get("paragraph", "")).strip()
        if name and paragraph:
            cleaned.append({"name": name, "paragraph": paragraph})
    if len(cleaned) != count:
        raise ResponseValidationError(
            f"expected {count} generated needles, got {len(cleaned)}"
        )
    return cleaned


def _is_novel(name: str, document_norm: str) -> bool:
    name_norm = normalize(name)
    return bool(name_norm) and name_norm not in document_norm


def generate_needles(
    gateway: Gateway, document: str, entity_type: str, count: int
) -> list[Needle]:
    """Ask the LLM for `count` novel entity paragraphs of one type.

    Every generated subject name is checked against the document; names that
    already occur are regenerated once, and a second failure raises
    NoveltyFailure.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if not document.strip():
        raise EmptyDocument("cannot generate needles for an empty document")

    document_norm = normalize(document)
    prompt = GENERATE_NEEDLES_PROMPT.format(
        count=count, entity_type=entity_type, document=document, avoid=""
    )
    reply, _ = gateway.send(Thread.empty(), ChatMessage(role="user", content=prompt))
    items = _parse_generated(reply.content, count)

    accepted = [it for it in items if _is_novel(it["name"], document_norm)]
    rejected = [it for it in items if not _is_novel(it["name"], document_norm)]
    if rejected:
        names = sorted({it["name"] for it in rejected} | {it["name"] for it in accepted})
        avoid = "\nDo not use any of these names: " + "; ".join(names) + "."
        retry_prompt = GENERATE_NEEDLES_PROMPT.format(
            count=len(rejected), entity_type=entity_type, document=document, avoid=avoid
        )
        reply, _ = gateway.send(Thread.empty(), ChatMessage(role="user", content=retry_prompt))
        retries = _parse_generated(reply.content, len(rejected))
        still_stale = [it["name"] for it in retries if not _is_novel(it["name"], document_norm)]
        if still_stale:
            raise NoveltyFailure(
                "generated needle names still occur in the document after one "
                f"retry: {', '.join(still_stale)}"
            )
        accepted.extend(retries)

    return [
        Needle(entity_type=entity_type, paragraph=it["paragraph"], name=it["name"])
        for it in accepted
    ]


def annotate_needle(gateway: Gateway, needle: Needle) -> Needle:
    """Assign name, description, and keywords via the LLM.

    A no-op when the needle is already annotated.
    """
    if needle.annotated:
        return needle
    prompt = ANNOTATE_NEEDLE_PROMPT.format(
        entity_type=needle.entity_type,
        min_keywords=MIN_KEYWORDS,
        paragraph=needle.paragraph,
    )
    reply, _ = gateway.send(Thread.empty(), ChatMessage(role="user", content=prompt))
    data = find_json_payload(reply.content)
    if not isinstance(data, dict):
        raise ResponseValidationError("annotation reply must be a JSON object")
    name = str(data.get("name", "")).strip()
    description = str(data.get("description", "")).strip()
    raw_keywords = data.get("keywords", [])
    keywords = tuple(
        str(k).strip() for k in raw_keywords if isinstance(k, (str, int, float)) and str(k).strip()
    ) if isinstance(raw_keywords, list) else ()
    if not name:
        raise ResponseValidationError("annotation reply lacks a name")
    if len(keywords) < MIN_KEYWORDS:
        raise ResponseValidationError(
            f"annotation reply carries {len(keywords)} keywords; need >= {MIN_KEYWORDS}"
        )
    return replace(needle, name=name, description=description, keywords=keywords)


def _insertion_positions(document: str) -> list[int]:
    """Candidate insertion points: paragraph starts, or sentence starts
    when the document has fewer than three paragraphs."""
    para = paragraph_boundaries(document)
    if len(para) - 1 >= 3:
        return para
    return sentence_boundaries(document)


def infuse(
    document: str,
    needles: Sequence[Needle],
    fill_range: tuple[float, float] = (FILL_FLOOR, FILL_CEILING),
    seed: int = 0,
) -> InfusedDocument:
    """Splice annotated needles into the document at seeded random boundaries.

    Boundaries are drawn without replacement, so no two needles share an
    insertion point. The fill ratio (inserted chars / enriched chars) is
    fixed by the inputs: ratios above the ceiling raise FillRatioInfeasible,
    ratios below the floor are allowed but flagged `below_floor`.
    """
    if not document.strip():
        raise EmptyDocument("cannot infuse an empty document")
    floor, ceiling = fill_range
    if not 0.0 <= floor <= ceiling <= 1.0:
        raise ValueError("fill_range must satisfy 0 <= floor <= ceiling <= 1")
    for needle in needles:
        if not needle.annotated:
            raise InfusionError(f"needle {needle.id} is not annotated")

    original_ref = _sha_ref(document)
    if not needles:
        return InfusedDocument(
            enriched_text=document,
            placements=(),
            fill_ratio=0.0,
            seed=seed,
            original_ref=original_ref,
            below_floor=True,
        )

    positions = _insertion_positions(document)
    if len(positions) < len(needles):
        raise InfusionError(
            f"document offers {len(positions)} insertion points for "
            f"{len(needles)} needles; use fewer needles"
        )
    rng = random.Random(seed)
    chosen = rng.sample(positions, len(needles))

    parts: list[str] = []
    placements: list[Placement] = []
    placed: list[Needle] = []
    cursor = 0
    shift = 0
    for pos, needle in sorted(zip(chosen, needles), key=lambda pair: pair[0]):
        inserted = (
            needle.paragraph + "\n\n" if pos < len(document) else "\n\n" + needle.paragraph
        )
        parts.append(document[cursor:pos])
        parts.append(inserted)
        placements.append(Placement(needle.id, pos + shift, len(inserted)))
        placed.append(replace(needle, insertion_offset=pos + shift))
        shift += len(inserted)
        cursor = pos
    parts.append(document[cursor:])
    enriched = "".join(parts)

    fill_ratio = shift / len(enriched)
    if fill_ratio > ceiling:
        raise FillRatioInfeasible(
            f"needles fill {fill_ratio:.3f} of the enriched text, above the "
            f"{ceiling:.2f} ceiling; use fewer or shorter needles"
        )
    below_floor = fill_ratio < floor
    if below_floor:
        log.warning(
            "fill ratio %.3f is below the %.2f floor; recording the true ratio",
            fill_ratio,
            floor,
        )
    return InfusedDocument(
        enriched_text=enriched,
        placements=tuple(placements),
        fill_ratio=fill_ratio,
        seed=seed,
        original_ref=original_ref,
        below_floor=below_floor,
        needles=tuple(placed),
    )


def strip_needles(infused: InfusedDocument) -> str:
    """Remove every placed span and return the original text, byte-exact.

    The recovered text is verified against the recorded content hash, so
    tampered offsets or edited enriched text raise CorruptionError.
    """
    enriched = infused.enriched_text
    ordered = sorted(infused.placements, key=lambda p: p.offset)
    parts = []
    cursor = 0
    for placement in ordered:
        if placement.offset < cursor or placement.offset + placement.length > len(enriched):
            raise CorruptionError(
                f"placement {placement.needle_id} has offsets outside the enriched text"
            )
        parts.append(enriched[cursor : placement.offset])
        cursor = placement.offset + placement.length
    parts.append(enriched[cursor:])
    original = "".join(parts)
    if _sha_ref(original) != infused.original_ref:
        raise CorruptionError("recovered text does not match the recorded original hash")
    return original


def needles_to_json(needles: Sequence[Needle]) -> list[dict]:
    return [
        {
            "id": n.id,
            "type": n.entity_type,
            "paragraph": n.paragraph,
            "name": n.name,
            "description": n.description,
            "keywords": list(n.keywords),
        }
        for n in needles
    ]


def needles_from_json(payload: list) -> list[Needle]:
    needles = []
    for item in payload:
        needle = Needle(
            entity_type=item["type"],
            paragraph=item["paragraph"],
            name=item.get("name", ""),
            description=item.get("description", ""),
            keywords=tuple(item.get("keywords", [])),
        )
        stored = item.get("id")
        if stored and stored != needle.id:
            log.warning("needle id %s does not match its content hash %s", stored, needle.id)
        needles.append(needle)
    return needles


def save_needles(needles: Sequence[Needle], path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(needles_to_json(needles), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def load_needles(path: str | Path) -> list[Needle]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(payload, list):
        raise ResponseValidationError("needle file must be a JSON array")
    return needles_from_json(payload)
