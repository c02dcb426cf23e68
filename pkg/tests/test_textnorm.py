import pytest
from hypothesis import given
from hypothesis import strategies as st

from needlegauge.textnorm import is_unfilled, normalize, tokenize


def test_tokenize_lowercases_and_strips_edge_punctuation():
    assert tokenize("The Cat, sat!") == ["the", "cat", "sat"]


def test_tokenize_keeps_interior_punctuation():
    assert tokenize("state-of-the-art n/a") == ["state-of-the-art", "n/a"]


def test_tokenize_drops_pure_punctuation_tokens():
    assert tokenize("wait - what ?") == ["wait", "what"]


def test_normalize_collapses_whitespace():
    assert normalize("  a\t b\n\nc ") == "a b c"


def test_normalize_unicode_nfc():
    # 'e' + combining acute composes to the same form as the precomposed char
    assert normalize("café") == normalize("café")


@given(st.text())
def test_normalize_is_idempotent(text):
    once = normalize(text)
    assert normalize(once) == once


@pytest.mark.parametrize(
    "value",
    [None, "", "   ", "unknown", "N/A", "none", "NULL", "-", "?", [], ["", "n/a"]],
)
def test_is_unfilled_true(value):
    assert is_unfilled(value)


@pytest.mark.parametrize("value", ["Alice", "0", ["", "Alice"], "none given"])
def test_is_unfilled_false(value):
    assert not is_unfilled(value)
