#!/usr/bin/env python3
"""Independent oracle for the unigram F-mean relevance score.

Computes Fmean = 10PR / (R + 9P) with clipped unigram counts using plain
counting loops, deliberately sharing no code with the library, and freezes
the results as tests/fixtures/meteor_pairs.json. Run from the repo root:

    python3 scripts/meteor_oracle.py
"""

import json
import re
from fractions import Fraction
from pathlib import Path

WORD = re.compile(r"[0-9a-z]+")


def words(text):
    return WORD.findall(text.lower())


def fmean(reference, candidate):
    ref = words(reference)
    cand = words(candidate)
    if not ref or not cand:
        return 0.0
    matched = 0
    budget = {}
    for w in ref:
        budget[w] = budget.get(w, 0) + 1
    for w in cand:
        if budget.get(w, 0) > 0:
            budget[w] -= 1
            matched += 1
    if matched == 0:
        return 0.0
    p = Fraction(matched, len(cand))
    r = Fraction(matched, len(ref))
    return float(10 * p * r / (r + 9 * p))


PAIRS = [
    # identity / emptiness / disjoint
    ("the cat sat on the mat", "the cat sat on the mat"),
    ("alpha beta gamma", "alpha beta gamma"),
    ("alpha beta", "delta epsilon"),
    ("some reference text", ""),
    ("", "some candidate text"),
    # classic partial overlaps, both directions
    ("the cat", "the cat sat"),
    ("the cat sat", "the cat"),
    ("a quick brown fox jumps over a lazy dog", "a brown fox"),
    ("a brown fox", "a quick brown fox jumps over a lazy dog"),
    # clipped multiplicities
    ("buffalo buffalo buffalo", "buffalo"),
    ("buffalo", "buffalo buffalo buffalo"),
    ("one two two three three three", "three three two"),
    ("repeat repeat repeat repeat", "repeat repeat"),
    # punctuation and case folding
    ("The Cat Sat.", "the cat sat"),
    ("Numbers 42 and 7 appear.", "numbers 42 appear"),
    ("Hello, world!", "hello world"),
    # longer realistic summaries
    (
        "the committee approved the annual budget after a long debate",
        "the committee approved the budget",
    ),
    (
        "solar panels convert sunlight into electricity using photovoltaic cells",
        "panels convert sunlight into electricity",
    ),
    (
        "researchers measured the impact of caffeine on reaction time",
        "caffeine impact on reaction time was measured by researchers",
    ),
    ("miners extracted copper ore from the northern pit", "copper ore extracted"),
    ("every word here is unique", "word here"),
    ("north south east west", "west east south north"),
    ("tiny", "tiny"),
    ("tiny", "huge"),
]


def main():
    out = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "meteor_pairs.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    rows = [
        {"reference": ref, "candidate": cand, "expected": fmean(ref, cand)}
        for ref, cand in PAIRS
    ]
    out.write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(rows)} pairs to {out}")


if __name__ == "__main__":
    main()
