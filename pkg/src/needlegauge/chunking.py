"""Token-budgeted document splitting that respects natural text units.

Pieces are contiguous, non-overlapping spans whose in-order concatenation
reproduces the source text byte for byte. Boundary preference: blank-line
paragraph breaks, then sentence ends; a single sentence larger than the
budget becomes its own piece and is flagged oversized.
"""

from __future__ import annotations

import re
from collections.abc import Callable
from dataclasses import dataclass

from .errors import EmptyDocument, SplitInfeasible
from .gateway import estimate_tokens

DEFAULT_MAX_PIECE_TOKENS = 3000

_PARAGRAPH_BREAK = re.compile(r"\n[ \t]*\n\s*")
_SENTENCE_END = re.compile(r"[.!?]+[)\"'”’]*\s+")


@dataclass(frozen=True)
class Piece:
    """One extraction unit: text plus its span in the source document."""

    index: int
    text: str
    token_estimate: int
    char_span: tuple[int, int]
    oversized: bool = False


def paragraph_boundaries(text: str) -> list[int]:
    """Offsets of paragraph starts: 0, after each blank-line break, len(text)."""
    offsets = {0, len(text)}
    for match in _PARAGRAPH_BREAK.finditer(text):
        offsets.add(match.end())
    return sorted(offsets)


def sentence_boundaries(text: str) -> list[int]:
    """Offsets after each sentence terminator (plus 0 and len(text)).

    Strictly increasing; the empty string collapses to [0].
    """
    offsets = {0, len(text)}
    for match in _SENTENCE_END.finditer(text):
        offsets.add(match.end())
    for match in _PARAGRAPH_BREAK.finditer(text):
        offsets.add(match.end())
    return sorted(offsets)


def _pack_units(
    text: str,
    cuts: list[int],
    max_piece_tokens: int,
    estimator: Callable[[str], int],
) -> list[tuple[int, int, bool]]:
    """Greedily merge [cut, next_cut) units into spans within the token budget.

    Returns (start, end, oversized) span triples. A single unit above the
    budget becomes its own oversized span.
    """
    spans: list[tuple[int, int, bool]] = []
    start = cuts[0]
    cursor = start
    for nxt in cuts[1:]:
        unit = text[cursor:nxt]
        candidate = text[start:nxt]
        if estimator(candidate) <= max_piece_tokens:
            cursor = nxt
            continue
        if cursor > start:
            spans.append((start, cursor, False))
            start = cursor
        if estimator(text[start:nxt]) > max_piece_tokens:
            # single unit exceeds the budget on its own
            spans.append((start, nxt, True))
            start = nxt
        cursor = nxt
    if cursor > start:
        spans.append((start, cursor, False))
    return spans


def split_document(
    text: str,
    max_piece_tokens: int = DEFAULT_MAX_PIECE_TOKENS,
    estimator: Callable[[str], int] = estimate_tokens,
) -> list[Piece]:
    """Split a document into pieces of at most `max_piece_tokens` each.

    Paragraph-sized units are preferred; paragraphs that alone exceed the
    budget are re-split at sentence ends. Joining the piece texts in order
    always reproduces the input exactly.
    """
    if max_piece_tokens <= 0:
        raise ValueError("max_piece_tokens must be > 0")
    if not text.strip():
        raise EmptyDocument("cannot split an empty or whitespace-only document")

    spans: list[tuple[int, int, bool]] = []
    para_spans = _pack_units(text, paragraph_boundaries(text), max_piece_tokens, estimator)
    for start, end, oversized in para_spans:
        if not oversized:
            spans.append((start, end, False))
            continue
        chunk = text[start:end]
        cuts = [start + off for off in sentence_boundaries(chunk)]
        spans.extend(_pack_units(text, cuts, max_piece_tokens, estimator))

    pieces = []
    for index, (start, end, oversized) in enumerate(spans):
        piece_text = text[start:end]
        pieces.append(
            Piece(
                index=index,
                text=piece_text,
                token_estimate=estimator(piece_text),
                char_span=(start, end),
                oversized=oversized,
            )
        )
    return pieces


def split_into(
    text: str,
    n_pieces: int,
    estimator: Callable[[str], int] = estimate_tokens,
) -> list[Piece]:
    """Split into exactly `n_pieces` pieces at sentence boundaries.

    Cut points are the sentence boundaries closest to equal character
    shares. Raises SplitInfeasible when the text has fewer natural units
    than requested.
    """
    if n_pieces < 1:
        raise ValueError("n_pieces must be >= 1")
    if not text.strip():
        raise EmptyDocument("cannot split an empty or whitespace-only document")
    boundaries = sentence_boundaries(text)
    interior = [b for b in boundaries if 0 < b < len(text)]
    if len(interior) < n_pieces - 1:
        raise SplitInfeasible(
            f"need {n_pieces - 1} interior sentence boundaries, found {len(interior)}"
        )
    cuts = [0]
    remaining = list(interior)
    for k in range(1, n_pieces):
        target = round(len(text) * k / n_pieces)
        usable = [b for b in remaining if b > cuts[-1]]
        if not usable or len(usable) < n_pieces - k:
            raise SplitInfeasible("sentence boundaries too unevenly placed to split")
        # keep enough boundaries to the right for the remaining cuts
        limit = len(usable) - (n_pieces - k - 1)
        best = min(usable[:limit], key=lambda b: abs(b - target))
        cuts.append(best)
        remaining = [b for b in remaining if b > best]
    cuts.append(len(text))

    pieces = []
    for index in range(n_pieces):
        start, end = cuts[index], cuts[index + 1]
        piece_text = text[start:end]
        pieces.append(
            Piece(
                index=index,
                text=piece_text,
                token_estimate=estimator(piece_text),
                char_span=(start, end),
            )
        )
    return pieces
