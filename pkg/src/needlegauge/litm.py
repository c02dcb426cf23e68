"""Lost-in-the-middle probe for extraction-with-history pipelines.

After extracting an N-piece document, the probe appends an exact duplicate
of one piece and extracts it in the same thread. A model with full recall
of its own history reports nothing new; re-extracted entities show up as
name-keyed redundancy. Sweeping the duplicated position over 1..N yields a
per-position profile — flat for an attentive model, humped in the middle
for one that loses mid-context content.
"""

from __future__ import annotations

import csv
import io
from collections.abc import Sequence
from dataclasses import dataclass, replace

from .chunking import split_into
from .extraction import ExtractionConfig, extract_pieces
from .gateway import Gateway
from .metrics import redundancy


@dataclass(frozen=True)
class LitmResult:
    """Per-position redundancy profile for one document."""

    label: str
    n_pieces: int
    values: dict[int, float]  # 1-based duplicated position -> redundancy

    def __post_init__(self) -> None:
        for position, value in self.values.items():
            if not 1 <= position <= self.n_pieces:
                raise ValueError(f"position {position} outside 1..{self.n_pieces}")
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"redundancy {value} at position {position} outside [0, 1]")

    @property
    def complete(self) -> bool:
        return len(self.values) == self.n_pieces


def probe(
    gateway: Gateway,
    document: str,
    n_pieces: int,
    cfg: ExtractionConfig,
    label: str = "",
    positions: Sequence[int] | None = None,
) -> LitmResult:
    """Measure per-position redundancy for one document.

    For each probed position p the document is extracted as its N pieces
    plus a duplicate of piece p appended silently as an extra piece in the
    same thread; the score is the name-keyed redundancy of the duplicate's
    entities against what piece p itself produced (0.0 when the duplicate
    yields nothing). `positions` restricts the sweep (1-based); default is
    all of 1..N.
    """
    pieces = split_into(document, n_pieces)
    if positions is None:
        positions = range(1, n_pieces + 1)
    else:
        bad = [p for p in positions if not 1 <= p <= n_pieces]
        if bad:
            raise ValueError(f"positions {bad} outside 1..{n_pieces}")

    values: dict[int, float] = {}
    for position in positions:
        duplicate = replace(pieces[position - 1], index=n_pieces)
        run = extract_pieces(gateway, [*pieces, duplicate], cfg)
        prior = [
            e for e in run.entities
            if e.provenance and e.provenance.piece == position - 1
        ]
        fresh = [
            e for e in run.entities
            if e.provenance and e.provenance.piece == n_pieces
        ]
        values[position] = redundancy(prior, fresh, key="name") if fresh else 0.0
    return LitmResult(label=label, n_pieces=n_pieces, values=values)


def aggregate_probes(results: Sequence[LitmResult]) -> dict[int, float]:
    """Arithmetic mean per position across documents sharing the same N."""
    if not results:
        raise ValueError("aggregate_probes needs at least one result")
    sizes = {r.n_pieces for r in results}
    if len(sizes) > 1:
        raise ValueError(f"results disagree on piece count: {sorted(sizes)}")
    n_pieces = sizes.pop()
    means: dict[int, float] = {}
    for position in range(1, n_pieces + 1):
        values = [r.values[position] for r in results if position in r.values]
        if values:
            means[position] = sum(values) / len(values)
    return means


def litm_csv(results: Sequence[LitmResult], include_mean: bool = True) -> str:
    """Render results as CSV: columns are positions, one row per document,
    plus a final mean row."""
    if not results:
        raise ValueError("litm_csv needs at least one result")
    n_pieces = results[0].n_pieces
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["document", *range(1, n_pieces + 1)])

    def fmt(values: dict[int, float]) -> list[str]:
        return [
            f"{values[p]:.4f}" if p in values else ""
            for p in range(1, n_pieces + 1)
        ]

    for result in results:
        writer.writerow([result.label, *fmt(result.values)])
    if include_mean:
        writer.writerow(["mean", *fmt(aggregate_probes(results))])
    return buffer.getvalue()
