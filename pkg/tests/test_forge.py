"""Tests for needle generation, annotation, and seeded infusion."""

from __future__ import annotations

import dataclasses
import json
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from needlegauge import (
    CorruptionError,
    EmptyDocument,
    FillRatioInfeasible,
    InfusedDocument,
    InfusionError,
    Needle,
    NoveltyFailure,
    ResponseValidationError,
    annotate_needle,
    generate_needles,
    infuse,
    load_needles,
    needles_from_json,
    needles_to_json,
    save_needles,
    strip_needles,
)

HOST_DOC = "\n\n".join(
    f"Paragraph {i} of the host document describes topic number {i} at length."
    for i in range(6)
)


def annotated_needle(name="Quiet Harbor", paragraph=None, **kwargs):
    return Needle(
        entity_type="Place",
        paragraph=paragraph or f"{name} is a sheltered cove known for fog and seals.",
        name=name,
        keywords=("cove", "fog", "seals"),
        **kwargs,
    )


# --- needle identity -----------------------------------------------------------


def test_needle_id_is_stable_content_hash():
    a = Needle(entity_type="Place", paragraph="The cove.", name="Cove")
    b = Needle(entity_type="Place", paragraph="The cove.", name="Cove")
    c = Needle(entity_type="Place", paragraph="The other cove.", name="Cove")
    assert a.id == b.id
    assert a.id != c.id
    assert re.fullmatch(r"ndl-[0-9a-f]{16}", a.id)


def test_needle_rejects_empty_paragraph():
    with pytest.raises(ValueError):
        Needle(entity_type="Place", paragraph="   ")


def test_annotated_requires_name_and_three_keywords():
    bare = Needle(entity_type="Place", paragraph="A cove.")
    assert not bare.annotated
    assert not dataclasses.replace(bare, name="Cove", keywords=("a", "b")).annotated
    assert dataclasses.replace(bare, name="Cove", keywords=("a", "b", "c")).annotated


# --- annotation -----------------------------------------------------------------


def test_annotate_fills_fields_from_reply(gateway_factory):
    gateway = gateway_factory(
        ['{"name": "Quiet Harbor", "description": "A cove.", "keywords": ["cove", "fog", "seals"]}']
    )
    needle = Needle(entity_type="Place", paragraph="Quiet Harbor is a cove.")
    out = annotate_needle(gateway, needle)
    assert out.name == "Quiet Harbor"
    assert out.description == "A cove."
    assert out.keywords == ("cove", "fog", "seals")
    assert out.annotated
    assert out.id != needle.id  # the name participates in the content hash


def test_annotate_is_noop_when_already_annotated(gateway_factory):
    gateway = gateway_factory([])
    needle = annotated_needle()
    assert annotate_needle(gateway, needle) is needle
    assert gateway.call_count == 0


def test_annotate_rejects_bad_replies(gateway_factory):
    needle = Needle(entity_type="Place", paragraph="A cove.")
    with pytest.raises(ResponseValidationError):
        annotate_needle(gateway_factory(['{"description": "no name", "keywords": ["a","b","c"]}']), needle)
    with pytest.raises(ResponseValidationError):
        annotate_needle(gateway_factory(['{"name": "Cove", "keywords": ["a", "b"]}']), needle)
    with pytest.raises(ResponseValidationError):
        annotate_needle(gateway_factory(["not json at all"]), needle)


# --- generation ------------------------------------------------------------------


def generation_reply(*names):
    return json.dumps(
        [{"name": n, "paragraph": f"{n} is introduced here in two sentences. It matters."} for n in names]
    )


def test_generate_returns_novel_needles(gateway_factory):
    gateway = gateway_factory([generation_reply("Quiet Harbor", "Iron Ridge")])
    needles = generate_needles(gateway, HOST_DOC, "Place", 2)
    assert [n.name for n in needles] == ["Quiet Harbor", "Iron Ridge"]
    assert all(n.entity_type == "Place" for n in needles)
    assert gateway.call_count == 1


def test_generate_retries_stale_names_once(gateway_factory):
    # "Paragraph 3" occurs in the host document, so the first batch is stale
    gateway = gateway_factory(
        [generation_reply("Paragraph 3", "Iron Ridge"), generation_reply("Quiet Harbor")]
    )
    needles = generate_needles(gateway, HOST_DOC, "Place", 2)
    assert sorted(n.name for n in needles) == ["Iron Ridge", "Quiet Harbor"]
    assert gateway.call_count == 2
    retry_request = gateway.transcript[1].request[-1].content
    assert "Do not use any of these names" in retry_request
    assert "Paragraph 3" in retry_request


def test_generate_gives_up_after_one_retry(gateway_factory):
    gateway = gateway_factory(
        [generation_reply("Paragraph 3"), generation_reply("Paragraph 4")]
    )
    with pytest.raises(NoveltyFailure):
        generate_needles(gateway, HOST_DOC, "Place", 1)


def test_generate_validates_reply_shape(gateway_factory):
    with pytest.raises(ResponseValidationError):
        generate_needles(gateway_factory(['{"name": "not an array"}']), HOST_DOC, "Place", 1)
    with pytest.raises(ResponseValidationError):
        generate_needles(gateway_factory([generation_reply("Only One")]), HOST_DOC, "Place", 2)
    with pytest.raises(ValueError):
        generate_needles(gateway_factory([]), HOST_DOC, "Place", 0)
    with pytest.raises(EmptyDocument):
        generate_needles(gateway_factory([]), "   ", "Place", 1)


# --- infusion ---------------------------------------------------------------------


def test_infusion_is_deterministic_per_seed():
    needles = [annotated_needle("Quiet Harbor"), annotated_needle("Iron Ridge")]
    first = infuse(HOST_DOC, needles, seed=7)
    second = infuse(HOST_DOC, needles, seed=7)
    assert first.enriched_text == second.enriched_text
    assert first.placements == second.placements
    assert first.fingerprint == second.fingerprint


def test_different_seeds_place_differently():
    needles = [annotated_needle("Quiet Harbor"), annotated_needle("Iron Ridge")]
    a = infuse(HOST_DOC, needles, seed=0)
    b = infuse(HOST_DOC, needles, seed=1)
    assert a.placements != b.placements
    assert a.fingerprint != b.fingerprint


def test_placement_spans_cover_the_needle_paragraphs():
    needles = [annotated_needle("Quiet Harbor"), annotated_needle("Iron Ridge")]
    infused = infuse(HOST_DOC, needles, seed=3)
    by_id = {n.id: n for n in needles}
    offsets = [p.offset for p in infused.placements]
    assert offsets == sorted(offsets)
    for placement in infused.placements:
        span = infused.enriched_text[placement.offset : placement.offset + placement.length]
        assert by_id[placement.needle_id].paragraph in span
        assert "\n\n" in span
    for needle in needles:
        assert infused.enriched_text.count(needle.paragraph) == 1


def test_strip_recovers_original_text_byte_exact():
    needles = [annotated_needle("Quiet Harbor"), annotated_needle("Iron Ridge")]
    for seed in range(5):
        infused = infuse(HOST_DOC, needles, seed=seed)
        assert strip_needles(infused) == HOST_DOC


def test_fill_ratio_accounting():
    needles = [annotated_needle("Quiet Harbor")]
    infused = infuse(HOST_DOC, needles, fill_range=(0.0, 1.0), seed=0)
    inserted = sum(p.length for p in infused.placements)
    assert infused.fill_ratio == pytest.approx(inserted / len(infused.enriched_text))


def test_fill_ceiling_raises():
    long_needle = annotated_needle(
        "Quiet Harbor", paragraph="Quiet Harbor. " + "Fog rolls in every single evening. " * 30
    )
    with pytest.raises(FillRatioInfeasible):
        infuse(HOST_DOC, [long_needle], fill_range=(0.0, 0.1), seed=0)


def test_fill_floor_is_flagged_not_fatal():
    tiny = annotated_needle("Quiet Harbor", paragraph="Quiet Harbor.")
    infused = infuse(HOST_DOC, [tiny], fill_range=(0.5, 1.0), seed=0)
    assert infused.below_floor
    assert infused.fill_ratio < 0.5


def test_zero_needles_is_identity():
    infused = infuse(HOST_DOC, [], seed=9)
    assert infused.enriched_text == HOST_DOC
    assert infused.placements == ()
    assert infused.fill_ratio == 0.0
    assert infused.below_floor
    assert strip_needles(infused) == HOST_DOC


def test_infuse_rejects_bad_inputs():
    with pytest.raises(EmptyDocument):
        infuse("  ", [annotated_needle()])
    with pytest.raises(InfusionError):
        infuse(HOST_DOC, [Needle(entity_type="Place", paragraph="Unannotated.")])
    too_many = [annotated_needle(f"Place {i}") for i in range(50)]
    with pytest.raises(InfusionError):
        infuse(HOST_DOC, too_many, fill_range=(0.0, 1.0))
    with pytest.raises(ValueError):
        infuse(HOST_DOC, [annotated_needle()], fill_range=(0.5, 0.2))


def test_tampered_enriched_text_is_detected():
    infused = infuse(HOST_DOC, [annotated_needle("Quiet Harbor")], seed=0)
    # flip a byte that lies outside every needle span, so it survives stripping
    covered = {
        i for p in infused.placements for i in range(p.offset, p.offset + p.length)
    }
    pos = next(i for i in range(len(infused.enriched_text)) if i not in covered)
    text = infused.enriched_text
    tampered = dataclasses.replace(
        infused, enriched_text=text[:pos] + ("X" if text[pos] != "X" else "Y") + text[pos + 1 :]
    )
    with pytest.raises(CorruptionError):
        strip_needles(tampered)


def test_out_of_bounds_placement_is_detected():
    infused = infuse(HOST_DOC, [annotated_needle("Quiet Harbor")], seed=0)
    (placement,) = infused.placements
    bad = dataclasses.replace(
        infused, placements=(dataclasses.replace(placement, offset=len(infused.enriched_text)),)
    )
    with pytest.raises(CorruptionError):
        strip_needles(bad)


# --- serialization ----------------------------------------------------------------


def test_infused_json_roundtrip_preserves_fingerprint():
    infused = infuse(HOST_DOC, [annotated_needle("Quiet Harbor")], seed=4)
    clone = InfusedDocument.from_json(infused.to_json())
    assert clone.fingerprint == infused.fingerprint
    assert strip_needles(clone) == HOST_DOC
    payload = infused.to_json()
    assert set(payload) == {
        "original_ref", "enriched_text", "placements", "fill_ratio", "seed", "below_floor",
    }
    assert payload["original_ref"].startswith("sha256:")


def test_needle_file_roundtrip(tmp_path):
    needles = [annotated_needle("Quiet Harbor"), annotated_needle("Iron Ridge")]
    path = tmp_path / "needles.json"
    save_needles(needles, path)
    payload = json.loads(path.read_text())
    assert isinstance(payload, list)
    assert set(payload[0]) == {"id", "type", "paragraph", "name", "description", "keywords"}
    assert load_needles(path) == needles


def test_needles_from_json_warns_on_id_mismatch(caplog):
    payload = needles_to_json([annotated_needle("Quiet Harbor")])
    payload[0]["id"] = "ndl-0000000000000000"
    with caplog.at_level("WARNING", logger="needlegauge.forge"):
        needles = needles_from_json(payload)
    assert needles[0].name == "Quiet Harbor"
    assert any("does not match" in rec.message for rec in caplog.records)


# --- reversibility property ---------------------------------------------------------

words = st.lists(
    st.sampled_from(["alpha", "beta", "gamma", "delta", "rain", "stone", "river"]),
    min_size=3,
    max_size=12,
)
paragraphs = words.map(lambda ws: " ".join(ws).capitalize() + ".")
documents = st.lists(paragraphs, min_size=1, max_size=8).map("\n\n".join)
needle_sets = st.lists(paragraphs, min_size=0, max_size=2).map(
    lambda ps: [
        Needle(
            entity_type="Thing",
            paragraph=f"Needle item {i} says: {p}",
            name=f"Needle Item {i}",
            keywords=("one", "two", "three"),
        )
        for i, p in enumerate(ps)
    ]
)


@settings(max_examples=200, deadline=None)
@given(documents, needle_sets, st.integers(min_value=0, max_value=2**32 - 1))
def test_infusion_reverses_exactly(document, needles, seed):
    try:
        infused = infuse(document, needles, fill_range=(0.0, 1.0), seed=seed)
    except InfusionError:
        return  # more needles than insertion points: legitimately rejected
    assert strip_needles(infused) == document
    assert 0.0 <= infused.fill_ratio < 1.0
    ends = 0
    for placement in infused.placements:
        assert placement.offset >= ends
        ends = placement.offset + placement.length
