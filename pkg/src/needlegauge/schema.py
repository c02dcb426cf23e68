"""Entity/property vocabulary: schema loading, entity validation, schema discovery.

A schema is a flat, user-declared set of entity types; each type carries an
ordered list of named properties. Extracted entities are plain key-value
records and are never rejected for having a type outside the schema -- the
mismatch is reported, not forbidden.
"""

from __future__ import annotations

import json
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .errors import EmptyInput, ResponseValidationError, SchemaParseError, SchemaValidationError
from .textnorm import is_unfilled

if TYPE_CHECKING:
    from .gateway import Gateway


@dataclass(frozen=True)
class PropertySpec:
    """One named property of an entity type."""

    name: str
    required: bool = True

    def __post_init__(self):
        if not self.name:
            raise SchemaValidationError("property name must be non-empty")


@dataclass(frozen=True)
class Schema:
    """Named set of entity types, each with an ordered property list."""

    name: str
    types: Mapping[str, tuple[PropertySpec, ...]]

    def __post_init__(self):
        if not self.name:
            raise SchemaValidationError("schema name must be non-empty")
        if not self.types:
            raise SchemaValidationError("schema must declare at least one type")
        for type_name, props in self.types.items():
            if not type_name:
                raise SchemaValidationError("type names must be non-empty")
            if not props:
                raise SchemaValidationError(f"type {type_name!r} must declare at least one property")
            names = [p.name for p in props]
            if len(set(names)) != len(names):
                raise SchemaValidationError(f"duplicate property names in type {type_name!r}")

    def type_names(self) -> list[str]:
        return list(self.types.keys())

    def required_properties(self, type_name: str) -> list[str]:
        return [p.name for p in self.types.get(type_name, ()) if p.required]


@dataclass(frozen=True)
class Provenance:
    """Where in the extraction an entity was produced."""

    piece: int
    iteration: int
    epoch: int

    def __post_init__(self):
        if min(self.piece, self.iteration, self.epoch) < 0:
            raise ValueError("provenance indices must be >= 0")


@dataclass(frozen=True)
class Entity:
    """One extracted record: type name plus property -> value mapping.

    Values are strings or lists of strings; empty/missing values are
    allowed (their absence is measured, not forbidden).
    """

    entity_type: str
    properties: Mapping[str, str | list[str]] = field(default_factory=dict)
    provenance: Provenance | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.entity_type:
            raise ValueError("entity_type must be non-empty")

    @property
    def name(self) -> str | None:
        """Value of the property literally named 'name', if present."""
        value = self.properties.get("name")
        if value is None:
            return None
        if isinstance(value, list):
            return value[0] if value else None
        return value


@dataclass(frozen=True)
class ValidationResult:
    conforms: bool
    unknown_type: bool
    missing_required: list[str]


@dataclass(frozen=True)
class SchemaSuggestion:
    """One entity type proposed for a document, with LLM-assigned relevance."""

    type_name: str
    relevance: float
    reasoning: str = ""

    def __post_init__(self):
        if not 0.0 <= self.relevance <= 1.0:
            raise ResponseValidationError(f"relevance {self.relevance} outside [0, 1]")


# --- schema file I/O --------------------------------------------------------


def _reject_duplicate_keys(pairs):
    seen = set()
    for key, _ in pairs:
        if key in seen:
            raise SchemaValidationError(f"duplicate key {key!r} in schema file")
        seen.add(key)
    return dict(pairs)


def parse_schema(source: str) -> Schema:
    """Parse and validate a schema document (see `serialize_schema` for the format)."""
    try:
        raw = json.loads(source, object_pairs_hook=_reject_duplicate_keys)
    except SchemaValidationError:
        raise
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SchemaParseError(f"schema file is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise SchemaParseError("schema file must hold a JSON object")
    name = raw.get("name")
    types_raw = raw.get("types")
    if not isinstance(name, str) or not isinstance(types_raw, dict):
        raise SchemaParseError('schema file must have string "name" and object "types"')
    types: dict[str, tuple[PropertySpec, ...]] = {}
    for type_name, props_raw in types_raw.items():
        if not isinstance(props_raw, list):
            raise SchemaParseError(f"properties of {type_name!r} must be a list")
        props = []
        for entry in props_raw:
            if isinstance(entry, str):
                props.append(PropertySpec(name=entry))
            elif isinstance(entry, dict) and isinstance(entry.get("name"), str):
                props.append(PropertySpec(name=entry["name"], required=bool(entry.get("required", True))))
            else:
                raise SchemaParseError(f"bad property entry {entry!r} in type {type_name!r}")
        types[type_name] = tuple(props)
    return Schema(name=name, types=types)


def load_schema(path) -> Schema:
    """Load a schema from a UTF-8 JSON file."""
    with open(path, encoding="utf-8") as fh:
        return parse_schema(fh.read())


def serialize_schema(schema: Schema) -> str:
    """Schema as canonical JSON: {"name": ..., "types": {type: [{"name","required"}]}}."""
    payload = {
        "name": schema.name,
        "types": {
            type_name: [{"name": p.name, "required": p.required} for p in props]
            for type_name, props in schema.types.items()
        },
    }
    return json.dumps(payload, ensure_ascii=False, indent=2)


# --- entity validation -------------------------------------------------------


def validate_entity(entity: Entity, schema: Schema) -> ValidationResult:
    """Check an entity against the schema without rejecting anything.

    Unknown types are flagged, never errors. A required property counts as
    missing when it is absent, empty, or an explicit unknown marker.
    """
    unknown_type = entity.entity_type not in schema.types
    missing = []
    if not unknown_type:
        for prop in schema.required_properties(entity.entity_type):
            if is_unfilled(entity.properties.get(prop)):
                missing.append(prop)
    return ValidationResult(
        conforms=not unknown_type and not missing,
        unknown_type=unknown_type,
        missing_required=missing,
    )


# --- entity serialization ----------------------------------------------------


def entity_to_text(entity: Entity) -> str:
    """Readable key-value block for an entity (the package-wide canonical form)."""
    lines = [f"Type: {entity.entity_type}"]
    for key, value in entity.properties.items():
        if isinstance(value, list):
            rendered = ", ".join(str(v) for v in value)
        else:
            rendered = str(value)
        lines.append(f"{key}: {rendered}")
    return "\n".join(lines)


def entities_to_text(entities: Sequence[Entity]) -> str:
    """Serialized form of a whole extraction: blocks separated by blank lines."""
    return "\n\n".join(entity_to_text(e) for e in entities)


# --- schema discovery ---------------------------------------------------------

SUGGEST_SCHEMA_PROMPT = (
    "Identify which entity types from the schema.org vocabulary (or close custom "
    "extensions of it) describe the content of the following document. Reply with a "
    "JSON array where each element is an object with keys \"type\" (the type name), "
    "\"relevance\" (a number between 0 and 1) and \"reasoning\" (one sentence). "
    "Reply with the JSON array only.\n\nDOCUMENT:\n{document}"
)


def suggest_schema(gateway: "Gateway", document: str) -> list[SchemaSuggestion]:
    """Ask the LLM for candidate entity types, sorted by relevance descending."""
    if not document.strip():
        raise EmptyInput("document is empty")
    from .gateway import ChatMessage, Thread  # local import to avoid a cycle

    prompt = SUGGEST_SCHEMA_PROMPT.format(document=document)
    reply, _ = gateway.send(Thread.empty(), ChatMessage(role="user", content=prompt))
    suggestions = _parse_suggestions(reply.content)
    return sorted(suggestions, key=lambda s: s.relevance, reverse=True)


def _parse_suggestions(reply_text: str) -> list[SchemaSuggestion]:
    from .extraction import find_json_payload

    payload = find_json_payload(reply_text)
    if not isinstance(payload, list):
        raise ResponseValidationError("schema suggestion reply must be a JSON array")
    suggestions = []
    for item in payload:
        if not isinstance(item, dict):
            raise ResponseValidationError(f"bad suggestion entry: {item!r}")
        type_name = item.get("type") or item.get("type_name")
        relevance = item.get("relevance")
        if not isinstance(type_name, str) or not isinstance(relevance, (int, float)):
            raise ResponseValidationError(f"bad suggestion entry: {item!r}")
        suggestions.append(
            SchemaSuggestion(
                type_name=type_name,
                relevance=float(relevance),
                reasoning=str(item.get("reasoning", "")),
            )
        )
    return suggestions
