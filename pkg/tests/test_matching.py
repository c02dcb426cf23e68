"""Tests for identification criteria and MINEA aggregation."""

from __future__ import annotations

import pytest

from needlegauge import (
    CriterionResult,
    Entity,
    ExtractionRun,
    FingerprintMismatch,
    MissingPairError,
    Needle,
    UnparseableVerdict,
    aggregate_minea,
    compare_models,
    match_k,
    match_llm,
    match_n,
    match_ns,
    minea,
)
from needlegauge.matching import DEFAULT_CRITERIA, k_label, parse_verdict


def needle(name, entity_type="Event", keywords=("one", "two", "three")):
    return Needle(
        entity_type=entity_type,
        paragraph=f"{name} appears in this paragraph.",
        name=name,
        keywords=tuple(keywords),
    )


def entity(name, entity_type="Event", **props):
    return Entity(entity_type=entity_type, properties={"name": name, **props})


# --- individual criteria --------------------------------------------------------


def test_match_n_uses_normalized_equality():
    ndl = needle("Ada Lovelace")
    hit = match_n(ndl, [entity("ada  LOVELACE!")])
    assert hit.satisfied
    assert hit.criterion == "n"
    assert hit.evidence == ("ada  LOVELACE!",)
    assert not match_n(ndl, [entity("Ada"), entity("Lovelace")]).satisfied


def test_match_ns_searches_the_serialized_run():
    ndl = needle("AI Clan Meeting")
    run = ExtractionRun(
        entities=[entity("AI Meeting", description="Held at the AI Clan Meeting venue.")]
    )
    assert match_ns(ndl, run).satisfied
    assert not match_ns(ndl, ExtractionRun(entities=[entity("Other")])).satisfied


def test_match_k_threshold_boundary_is_inclusive():
    ndl = needle("X", keywords=("a", "b", "c", "d", "e", "f"))
    half = entity("Y", keywords=["a", "b", "c"])
    assert match_k(ndl, [half], 0.5).satisfied  # 3/6 == 0.5 exactly
    assert not match_k(ndl, [half], 0.6).satisfied


def test_match_k_keywords_accept_comma_strings_and_normalization():
    ndl = needle("X", keywords=("Graph", "Index", "Latency"))
    ent = entity("Y", keywords="graph, index")
    result = match_k(ndl, [ent], 0.6)
    assert result.satisfied
    assert result.evidence == ("Graph", "Index")


def test_match_k_skips_entities_without_keywords_and_keeps_best_evidence():
    ndl = needle("X", keywords=("a", "b", "c", "d"))
    ents = [entity("P"), entity("Q", keywords=["a"]), entity("R", keywords=["a", "b"])]
    result = match_k(ndl, ents, 0.75)
    assert not result.satisfied
    assert result.evidence == ("a", "b")


def test_match_k_validates_inputs():
    with pytest.raises(ValueError):
        match_k(needle("X", keywords=()), [entity("Y")], 0.5)
    with pytest.raises(ValueError):
        match_k(needle("X"), [entity("Y")], 0.0)
    with pytest.raises(ValueError):
        match_k(needle("X"), [entity("Y")], 1.2)


def test_k_label_formatting():
    assert k_label(0.5) == "k0.5"
    assert k_label(0.60) == "k0.6"
    assert k_label(0.75) == "k0.75"


def test_parse_verdict_is_strict():
    assert parse_verdict("yes") is True
    assert parse_verdict(" Yes. ") is True
    assert parse_verdict("NO!") is False
    for bad in ("maybe", "yes please", "", "the answer is yes"):
        with pytest.raises(UnparseableVerdict):
            parse_verdict(bad)


def test_match_llm_round_trip(gateway_factory):
    ndl = needle("AI Clan Meeting")
    ents = [entity("AI Meeting")]
    gateway = gateway_factory(["yes"])
    result = match_llm(gateway, ndl, ents)
    assert result.satisfied
    assert result.criterion == "llm"
    prompt = gateway.transcript[0].request[-1].content
    assert "AI Clan Meeting" in prompt
    assert "AI Meeting" in prompt
    assert "exactly one word" in prompt
    with pytest.raises(UnparseableVerdict):
        match_llm(gateway_factory(["I think so"]), ndl, ents)


# --- toy fixture: the full criterion matrix ---------------------------------------


@pytest.fixture
def toy_needles():
    event = Needle(
        entity_type="Event",
        paragraph=(
            "The AI Clan Meeting is an annual gathering of machine learning "
            "enthusiasts held each spring."
        ),
        name="AI Clan Meeting",
        keywords=("ai", "clan", "meeting", "enthusiasts", "gathering", "annual"),
    )
    product = Needle(
        entity_type="Product",
        paragraph=(
            "Graph Index is a storage layout that answers graph retrieval "
            "queries with low latency."
        ),
        name="Graph Index",
        keywords=("graph", "retrieval", "index", "latency", "storage", "query"),
    )
    return event, product


@pytest.fixture
def toy_run():
    return ExtractionRun(
        entities=[
            Entity(
                entity_type="Event",
                properties={
                    "name": "AI Meeting",
                    "keywords": ["ai", "meeting", "gathering"],
                    "description": "Also known as the AI Clan Meeting.",
                },
            ),
            Entity(
                entity_type="Product",
                properties={
                    "name": "GRIX",
                    "keywords": ["graph", "retrieval", "latency", "storage"],
                },
            ),
        ]
    )


def test_toy_matrix(toy_needles, toy_run, gateway_factory):
    event, product = toy_needles
    gateway = gateway_factory(["yes", "yes"])
    expected = {
        ("Event", "n"): False,
        ("Event", "ns"): True,
        ("Event", "k0.5"): True,
        ("Event", "k0.6"): False,
        ("Event", "k0.7"): False,
        ("Event", "llm"): True,
        ("Product", "n"): False,
        ("Product", "ns"): False,
        ("Product", "k0.5"): True,
        ("Product", "k0.6"): True,
        ("Product", "k0.7"): False,
        ("Product", "llm"): True,
    }
    for ndl in (event, product):
        results = {
            "n": match_n(ndl, toy_run.entities),
            "ns": match_ns(ndl, toy_run),
            "k0.5": match_k(ndl, toy_run.entities, 0.5),
            "k0.6": match_k(ndl, toy_run.entities, 0.6),
            "k0.7": match_k(ndl, toy_run.entities, 0.7),
            "llm": match_llm(gateway, ndl, toy_run.entities),
        }
        for criterion, result in results.items():
            assert result.satisfied == expected[(ndl.entity_type, criterion)], (
                ndl.entity_type,
                criterion,
            )


# --- minea aggregation --------------------------------------------------------------


def results_for(needles, run, verdicts, gateway_factory):
    gateway = gateway_factory(list(verdicts))
    out = []
    for ndl in needles:
        out.append(match_n(ndl, run.entities))
        out.append(match_ns(ndl, run))
        for t in (0.5, 0.6, 0.7):
            out.append(match_k(ndl, run.entities, t))
        out.append(match_llm(gateway, ndl, run.entities))
    return out


def test_minea_per_type_max_and_weighted_overall(toy_needles, toy_run, gateway_factory):
    needles = list(toy_needles)
    results = results_for(needles, toy_run, ["yes", "yes"], gateway_factory)
    report = minea(results, needles, fingerprint="sha256:abc", model_label="mock")
    assert report.ratios["Event"] == {
        "n": 0.0, "ns": 1.0, "k0.5": 1.0, "k0.6": 0.0, "k0.7": 0.0, "llm": 1.0,
    }
    assert report.ratios["Product"] == {
        "n": 0.0, "ns": 0.0, "k0.5": 1.0, "k0.6": 1.0, "k0.7": 0.0, "llm": 1.0,
    }
    assert report.per_type == {"Event": 1.0, "Product": 1.0}
    assert report.overall == 1.0
    assert report.counts == {"Event": 1, "Product": 1}
    assert report.criteria == DEFAULT_CRITERIA


def test_minea_requires_every_pair_exactly_once(toy_needles, toy_run, gateway_factory):
    needles = list(toy_needles)
    results = results_for(needles, toy_run, ["yes", "yes"], gateway_factory)
    with pytest.raises(MissingPairError):
        minea(results[:-1], needles)  # one missing
    with pytest.raises(MissingPairError):
        minea(results + [results[0]], needles)  # one duplicated
    stranger = CriterionResult("ndl-ffffffffffffffff", "n", True)
    with pytest.raises(MissingPairError):
        minea(results + [stranger], needles)
    off_menu = CriterionResult(needles[0].id, "k0.9", True)
    with pytest.raises(MissingPairError):
        minea(results + [off_menu], needles)


def test_aggregate_minea_weighted_mean():
    report = aggregate_minea(
        {"A": {"n": 0.8, "ns": 0.6}, "B": {"n": 0.2, "ns": 0.4}},
        {"A": 3, "B": 1},
    )
    assert report.per_type == {"A": 0.8, "B": 0.4}
    assert report.overall == pytest.approx((0.8 * 3 + 0.4 * 1) / 4)


def test_aggregate_minea_validation():
    with pytest.raises(ValueError):
        aggregate_minea({}, {})
    with pytest.raises(ValueError):
        aggregate_minea({"A": {"n": 0.5}}, {})
    with pytest.raises(ValueError):
        aggregate_minea({"A": {}}, {"A": 1})
    with pytest.raises(ValueError):
        aggregate_minea({"A": {"n": 1.2}}, {"A": 1})


def test_report_json_and_csv_rows():
    report = aggregate_minea(
        {"A": {"n": 0.8, "ns": 0.6}}, {"A": 5}, model_label="m", fingerprint="sha256:x"
    )
    payload = report.to_json()
    assert payload["model"] == "m"
    assert payload["types"]["A"] == {"count": 5, "ratios": {"n": 0.8, "ns": 0.6}, "minea": 0.8}
    assert payload["overall"] == 0.8
    assert payload["fingerprint"] == "sha256:x"
    rows = report.to_csv_rows()
    assert [(r["criterion"], r["is_max"]) for r in rows] == [("n", True), ("ns", False)]


def test_compare_models_orders_and_guards():
    a = aggregate_minea({"T": {"n": 0.9}}, {"T": 1}, model_label="a", fingerprint="f")
    b = aggregate_minea({"T": {"n": 0.5}}, {"T": 1}, model_label="b", fingerprint="f")
    tie = aggregate_minea({"T": {"n": 0.9}}, {"T": 1}, model_label="z", fingerprint="f")
    ranking = compare_models([b, a, tie])
    assert [r["model"] for r in ranking] == ["a", "z", "b"]
    assert ranking[0]["minea"] == 0.9
    with pytest.raises(ValueError):
        compare_models([a])
    other = aggregate_minea({"T": {"n": 0.5}}, {"T": 1}, model_label="c", fingerprint="g")
    with pytest.raises(FingerprintMismatch):
        compare_models([a, other])
