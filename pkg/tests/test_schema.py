import json

import pytest

from needlegauge import (
    Entity,
    PropertySpec,
    Schema,
    load_schema,
    parse_schema,
    serialize_schema,
    suggest_schema,
    validate_entity,
)
from needlegauge.errors import (
    EmptyInput,
    ResponseValidationError,
    SchemaParseError,
    SchemaValidationError,
)
from needlegauge.schema import entities_to_text, entity_to_text

VALID = json.dumps(
    {
        "name": "demo",
        "types": {
            "Person": ["name", {"name": "birthDate", "required": False}],
            "Event": ["name"],
        },
    }
)


def test_parse_schema_valid():
    schema = parse_schema(VALID)
    assert schema.type_names() == ["Person", "Event"]
    assert schema.required_properties("Person") == ["name"]
    assert schema.types["Person"][1] == PropertySpec("birthDate", required=False)


def test_parse_schema_rejects_duplicate_type_keys():
    text = '{"name": "d", "types": {"Person": ["name"], "Person": ["alias"]}}'
    with pytest.raises(SchemaValidationError):
        parse_schema(text)


def test_parse_schema_rejects_bad_json():
    with pytest.raises(SchemaParseError):
        parse_schema("{not json")


def test_parse_schema_rejects_non_object():
    with pytest.raises(SchemaParseError):
        parse_schema("[1, 2]")


def test_parse_schema_rejects_bad_property_entry():
    with pytest.raises(SchemaParseError):
        parse_schema('{"name": "d", "types": {"Person": [42]}}')


def test_schema_invariants():
    with pytest.raises(SchemaValidationError):
        Schema(name="", types={"T": (PropertySpec("name"),)})
    with pytest.raises(SchemaValidationError):
        Schema(name="x", types={})
    with pytest.raises(SchemaValidationError):
        Schema(name="x", types={"T": ()})
    with pytest.raises(SchemaValidationError):
        Schema(name="x", types={"T": (PropertySpec("a"), PropertySpec("a"))})


def test_serialize_parse_roundtrip():
    schema = parse_schema(VALID)
    assert parse_schema(serialize_schema(schema)) == schema


def test_load_schema(tmp_path):
    path = tmp_path / "schema.json"
    path.write_text(VALID, encoding="utf-8")
    assert load_schema(path) == parse_schema(VALID)


def test_validate_entity_conforming():
    schema = parse_schema(VALID)
    result = validate_entity(Entity("Person", {"name": "Ada"}), schema)
    assert result.conforms and not result.unknown_type and not result.missing_required


def test_validate_entity_missing_and_unfilled():
    schema = parse_schema(VALID)
    assert validate_entity(Entity("Person", {}), schema).missing_required == ["name"]
    assert validate_entity(Entity("Person", {"name": "unknown"}), schema).missing_required == ["name"]
    assert validate_entity(Entity("Person", {"name": "  "}), schema).missing_required == ["name"]


def test_validate_entity_unknown_type_flagged_not_rejected():
    schema = parse_schema(VALID)
    result = validate_entity(Entity("Spaceship", {"name": "x"}), schema)
    assert result.unknown_type and not result.conforms


def test_entity_name_property():
    assert Entity("Person", {"name": "Ada"}).name == "Ada"
    assert Entity("Person", {"name": ["Ada", "Countess"]}).name == "Ada"
    assert Entity("Person", {}).name is None


def test_entity_to_text_layout():
    entity = Entity("Person", {"name": "Ada", "fields": ["math", "computing"]})
    assert entity_to_text(entity) == "Type: Person\nname: Ada\nfields: math, computing"


def test_entities_to_text_blank_line_separated():
    a = Entity("Person", {"name": "Ada"})
    b = Entity("Person", {"name": "Bob"})
    assert entities_to_text([a, b]).count("\n\n") == 1


def test_suggest_schema_sorted_descending(gateway_factory):
    reply = json.dumps(
        [
            {"type": "Event", "relevance": 0.4, "reasoning": "meetings"},
            {"type": "Person", "relevance": 0.9, "reasoning": "names"},
        ]
    )
    gateway = gateway_factory([reply])
    suggestions = suggest_schema(gateway, "Alice met Bob at the kickoff.")
    assert [s.type_name for s in suggestions] == ["Person", "Event"]


def test_suggest_schema_rejects_out_of_range_relevance(gateway_factory):
    gateway = gateway_factory([json.dumps([{"type": "Person", "relevance": 1.7}])])
    with pytest.raises(ResponseValidationError):
        suggest_schema(gateway, "text")


def test_suggest_schema_rejects_non_array_reply(gateway_factory):
    gateway = gateway_factory(["no json here"])
    with pytest.raises(ResponseValidationError):
        suggest_schema(gateway, "text")


def test_suggest_schema_empty_document(gateway_factory):
    with pytest.raises(EmptyInput):
        suggest_schema(gateway_factory([]), "   ")
