"""Default prompt templates for extraction and needle workflows.

Templates are user-overridable: register a PromptSet under a name and
point ExtractionConfig.prompts at it. No test or score depends on the
exact wording here.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class PromptSet:
    system_template: str
    piece_template: str
    continue_template: str
    recap_template: str


DEFAULT_PROMPTS = PromptSet(
    system_template=(
        "You are an information extraction engine. Identify entities in the text the "
        "user provides and return them as structured records.\n"
        "Entity types and their properties:\n{schema_block}\n"
        "Rules: reply with a JSON array only; each element is an object "
        '{{"type": "<type name>", "properties": {{"<property>": "<value>", ...}}}}. '
        "Property values are strings or arrays of strings. Be attentive to nested "
        "entities: refer to a related entity by its name in a property value. Keep "
        "extracted entities consistent and unique; never repeat an entity already "
        "extracted earlier in this conversation. You may include an entity whose type "
        "is not listed when it clearly matters. Reply with [] when nothing new is found."
    ),
    piece_template=(
        "Extract all entities from the following text (part {index}).{recap}\n\nTEXT:\n{text}"
    ),
    continue_template=(
        "Continue the extraction you already started on the same text. List additional "
        "entities that were not extracted yet. Reply with [] if there are none."
    ),
    recap_template="\nEntities already extracted (do not repeat them): {history}.",
)

_REGISTRY: dict[str, PromptSet] = {"default": DEFAULT_PROMPTS}


def register_prompt_set(name: str, prompts: PromptSet) -> None:
    _REGISTRY[name] = prompts


def get_prompt_set(name: str) -> PromptSet:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown prompt set {name!r}; registered: {sorted(_REGISTRY)}") from None


def schema_block(schema) -> str:
    """Render a schema as 'Type: prop, prop, ...' lines for the system prompt."""
    lines = []
    for type_name, props in schema.types.items():
        lines.append(f"- {type_name}: " + ", ".join(p.name for p in props))
    return "\n".join(lines)
