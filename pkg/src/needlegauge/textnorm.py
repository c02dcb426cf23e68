"""Canonical text normalization shared by matching and similarity scoring.

Every string comparison in the package (name equality, substring search,
keyword matching, term vectors) goes through the same canonical form:
Unicode NFC, lowercase, punctuation stripped at token edges, whitespace
collapsed to single spaces.
"""

from __future__ import annotations

import unicodedata

# Values that count as "not filled in" for completeness purposes.
UNFILLED_MARKERS = frozenset({"", "unknown", "n/a", "na", "none", "null", "nil", "-", "?"})


def _is_edge_punct(ch: str) -> bool:
    cat = unicodedata.category(ch)
    return cat.startswith("P") or cat.startswith("S")


def _strip_token(token: str) -> str:
    start, end = 0, len(token)
    while start < end and _is_edge_punct(token[start]):
        start += 1
    while end > start and _is_edge_punct(token[end - 1]):
        end -= 1
    return token[start:end]


def tokenize(text: str) -> list[str]:
    """Split into canonical tokens; edge punctuation is stripped, interior kept."""
    nfc = unicodedata.normalize("NFC", text).lower()
    tokens = []
    for raw in nfc.split():
        tok = _strip_token(raw)
        if tok:
            tokens.append(tok)
    return tokens


def normalize(text: str) -> str:
    """Canonical form of a text: normalized tokens joined by single spaces."""
    return " ".join(tokenize(text))


def is_unfilled(value: object) -> bool:
    """True when a property value counts as missing/unfilled.

    Covers absent values (None), empty or whitespace strings, explicit
    unknown markers such as "unknown" or "n/a", and lists whose items are
    all unfilled.
    """
    if value is None:
        return True
    if isinstance(value, str):
        return normalize(value) in UNFILLED_MARKERS
    if isinstance(value, (list, tuple)):
        return all(is_unfilled(item) for item in value)
    return False
