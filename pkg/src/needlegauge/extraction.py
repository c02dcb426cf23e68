"""Schema-driven iterated extraction with shared history and epoch restarts.

Each piece is extracted by 1 + iterations_per_piece LLM calls on a shared
thread, so the model sees everything extracted so far. When the projected
thread would no longer fit the context window, a fresh thread starts (a new
epoch) and extraction continues independently. Duplicates are never
suppressed at merge time -- observed redundancy is a measured phenomenon.
"""

from __future__ import annotations

import json
import logging
import re
from collections.abc import Sequence
from dataclasses import dataclass, field

from .chunking import DEFAULT_MAX_PIECE_TOKENS, Piece, split_document
from .errors import BudgetExceeded
from .gateway import ChatMessage, Gateway, Thread
from .prompts import get_prompt_set, schema_block
from .schema import Entity, Provenance, Schema

log = logging.getLogger(__name__)

DEFAULT_ITERATIONS_PER_PIECE = 3


@dataclass(frozen=True)
class ExtractionConfig:
    """Knobs for one extraction run."""

    schema: Schema
    iterations_per_piece: int = DEFAULT_ITERATIONS_PER_PIECE
    max_piece_tokens: int = DEFAULT_MAX_PIECE_TOKENS
    context_window_tokens: int = 128000
    prompts: str = "default"
    # Fraction of the window above which prior-piece history is restated as
    # a compact name+type recap instead of kept verbatim. 1.0 disables.
    history_compaction_fraction: float = 0.25

    def __post_init__(self):
        if self.iterations_per_piece < 0:
            raise ValueError("iterations_per_piece must be >= 0")
        if not 0.0 < self.history_compaction_fraction <= 1.0:
            raise ValueError("history_compaction_fraction must be in (0, 1]")


@dataclass
class ExtractionRun:
    """Ordered entities with provenance, plus epoch count and the final thread."""

    entities: list[Entity] = field(default_factory=list)
    epochs: int = 1
    final_thread: Thread | None = field(default=None, repr=False, compare=False)

    def to_json(self) -> dict:
        return {
            "entities": [
                {
                    "type": e.entity_type,
                    "properties": {k: v for k, v in e.properties.items()},
                    "provenance": (
                        {
                            "piece": e.provenance.piece,
                            "iteration": e.provenance.iteration,
                            "epoch": e.provenance.epoch,
                        }
                        if e.provenance
                        else None
                    ),
                }
                for e in self.entities
            ],
            "epochs": self.epochs,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "ExtractionRun":
        entities = []
        for raw in payload.get("entities", []):
            prov = raw.get("provenance")
            entities.append(
                Entity(
                    entity_type=raw["type"],
                    properties=raw.get("properties", {}),
                    provenance=(
                        Provenance(piece=prov["piece"], iteration=prov["iteration"], epoch=prov["epoch"])
                        if prov
                        else None
                    ),
                )
            )
        return cls(entities=entities, epochs=payload.get("epochs", 1))


# --- reply parsing ----------------------------------------------------------

_FENCE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)
_BLOCK_SPLIT = re.compile(r"\n\s*\n")
_TYPE_LINE = re.compile(r"^\s*-?\s*type\s*:\s*(.+)$", re.IGNORECASE)


def find_json_payload(text: str):
    """Best-effort extraction of a JSON value from an LLM reply.

    Tries the whole reply, then fenced blocks, then the outermost
    bracketed span. Returns None when nothing parses.
    """
    candidates = [text.strip()]
    candidates += [m.strip() for m in _FENCE.findall(text)]
    for opener, closer in ("[]", "{}"):
        start, end = text.find(opener), text.rfind(closer)
        if 0 <= start < end:
            candidates.append(text[start : end + 1])
    for candidate in candidates:
        if not candidate:
            continue
        try:
            return json.loads(candidate)
        except json.JSONDecodeError:
            continue
    return None


def _coerce_value(value) -> str | list[str] | None:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return str(value)
    if value is None:
        return ""
    if isinstance(value, list):
        items = [_coerce_value(v) for v in value]
        return [i for i in items if isinstance(i, str)]
    if isinstance(value, dict):
        # nested entity: keep the reference by name when one exists
        name = value.get("name")
        return name if isinstance(name, str) else None
    return None


def _entity_from_mapping(raw: dict) -> Entity | None:
    type_name = raw.get("type") or raw.get("entity_type")
    if not isinstance(type_name, str) or not type_name.strip():
        return None
    props_raw = raw.get("properties")
    if not isinstance(props_raw, dict):
        props_raw = {k: v for k, v in raw.items() if k not in ("type", "entity_type")}
    properties: dict[str, str | list[str]] = {}
    for key, value in props_raw.items():
        coerced = _coerce_value(value)
        if coerced is None:
            log.debug("dropping unrepresentable property %r of %r", key, type_name)
            continue
        properties[str(key)] = coerced
    return Entity(entity_type=type_name.strip(), properties=properties)


def _entities_from_blocks(text: str) -> list[Entity]:
    """Parse the indented 'Type: X / key: value' block style."""
    entities = []
    for block in _BLOCK_SPLIT.split(text):
        lines = [ln for ln in block.splitlines() if ln.strip()]
        if not lines:
            continue
        type_match = _TYPE_LINE.match(lines[0])
        if not type_match:
            continue
        properties: dict[str, str | list[str]] = {}
        last_key = None
        for line in lines[1:]:
            key, sep, value = line.partition(":")
            if sep and key.strip() and " " not in key.strip():
                key = key.strip().lstrip("-").strip()
                value = value.strip()
                if key in properties:
                    existing = properties[key]
                    items = existing if isinstance(existing, list) else [existing]
                    properties[key] = items + [value]
                else:
                    properties[key] = value
                last_key = key
            elif last_key is not None:
                prev = properties[last_key]
                if isinstance(prev, str):
                    properties[last_key] = (prev + " " + line.strip()).strip()
        try:
            entities.append(Entity(entity_type=type_match.group(1).strip(), properties=properties))
        except ValueError:
            log.debug("skipping malformed block: %r", block[:80])
    return entities


def parse_entities(reply_text: str) -> list[Entity]:
    """Parse entities out of an LLM reply; unparseable segments are dropped.

    Accepts a JSON array of {"type", "properties": {...}} objects (property
    keys may also sit inline next to "type") and the readable key-value
    block style. Never raises; parse failures are logged and skipped.
    """
    if not reply_text or not reply_text.strip():
        return []
    payload = find_json_payload(reply_text)
    if isinstance(payload, list):
        entities = []
        for raw in payload:
            if isinstance(raw, dict):
                entity = _entity_from_mapping(raw)
                if entity is not None:
                    entities.append(entity)
                    continue
            log.warning("skipping malformed entity element: %r", str(raw)[:120])
        return entities
    if isinstance(payload, dict):
        entity = _entity_from_mapping(payload)
        return [entity] if entity is not None else []
    return _entities_from_blocks(reply_text)


# --- engine -----------------------------------------------------------------


def _history_recap(entities: Sequence[Entity]) -> str:
    seen = []
    for entity in entities:
        name = entity.name or "?"
        seen.append(f"{entity.entity_type}: {name}")
    return "; ".join(seen)


class _EpochState:
    def __init__(self, gateway: Gateway, cfg: ExtractionConfig, system_text: str):
        self.gateway = gateway
        self.cfg = cfg
        self.system_text = system_text
        self.epoch = 0
        self.thread = Thread.empty().append(
            ChatMessage(role="system", content=system_text), gateway.estimator
        )

    def projected(self, content: str) -> int:
        return (
            self.thread.token_estimate
            + self.gateway.estimator(content)
            + self.gateway.cfg.max_output_tokens
        )

    def fits(self, content: str) -> bool:
        return self.projected(content) <= self.cfg.context_window_tokens

    def _fresh_thread(self) -> Thread:
        return Thread.empty().append(
            ChatMessage(role="system", content=self.system_text), self.gateway.estimator
        )

    def restart(self) -> None:
        """Start a new independent epoch: fresh thread, no carried history."""
        self.epoch += 1
        self.thread = self._fresh_thread()

    def compact(self) -> None:
        """Drop the verbatim exchange; the caller restates history in the next prompt."""
        self.thread = self._fresh_thread()

    def send(self, content: str) -> str:
        reply, self.thread = self.gateway.send(
            self.thread, ChatMessage(role="user", content=content)
        )
        return reply.content


def extract_pieces(
    gateway: Gateway, pieces: Sequence[Piece], cfg: ExtractionConfig
) -> ExtractionRun:
    """Run the iterated extraction over pre-split pieces."""
    prompts = get_prompt_set(cfg.prompts)
    system_text = prompts.system_template.format(schema_block=schema_block(cfg.schema))
    state = _EpochState(gateway, cfg, system_text)
    entities: list[Entity] = []

    window = cfg.context_window_tokens
    for piece in pieces:
        recap = ""
        if entities and state.thread.token_estimate > cfg.history_compaction_fraction * window:
            recap = prompts.recap_template.format(history=_history_recap(entities))
            state.compact()
        piece_prompt = prompts.piece_template.format(index=piece.index + 1, recap=recap, text=piece.text)
        if not state.fits(piece_prompt):
            state.restart()
            if not state.fits(piece_prompt):
                raise BudgetExceeded(state.projected(piece_prompt), window)
        for iteration in range(1 + cfg.iterations_per_piece):
            content = piece_prompt if iteration == 0 else prompts.continue_template
            if not state.fits(content):
                # mid-piece overflow: restart and re-anchor on the piece text
                state.restart()
                content = piece_prompt
                if not state.fits(content):
                    raise BudgetExceeded(state.projected(content), window)
            reply_text = state.send(content)
            for entity in parse_entities(reply_text):
                entities.append(
                    Entity(
                        entity_type=entity.entity_type,
                        properties=entity.properties,
                        provenance=Provenance(piece=piece.index, iteration=iteration, epoch=state.epoch),
                    )
                )

    return ExtractionRun(entities=entities, epochs=state.epoch + 1, final_thread=state.thread)


def extract_document(gateway: Gateway, document: str, cfg: ExtractionConfig) -> ExtractionRun:
    """Split a document and extract it piece by piece (see `extract_pieces`)."""
    pieces = split_document(document, cfg.max_piece_tokens, gateway.estimator)
    return extract_pieces(gateway, pieces, cfg)


def continue_extraction(gateway: Gateway, thread: Thread, cfg: ExtractionConfig) -> tuple[list[Entity], Thread]:
    """One more continuation call on an existing extraction thread.

    Returns only the entities parsed from the new reply (possibly none).
    """
    if not any(m.role == "assistant" for m in thread.messages):
        raise ValueError("thread has no prior extraction exchange to continue")
    prompts = get_prompt_set(cfg.prompts)
    reply, new_thread = gateway.send(thread, ChatMessage(role="user", content=prompts.continue_template))
    return parse_entities(reply.content), new_thread
