"""Per-chain binned secondary-structure summaries (the Stage I schema fields)."""

from __future__ import annotations

import itertools
from typing import Sequence

from .pairs import bin_label

LENGTH_BINS = ((50, 100, 200, 300, 500, 800),
               ("0-50", "50-100", "100-200", "200-300", "300-500", "500-800", ">800"))
LONGEST_RUN_BINS = ((1, 5, 9, 16, 31), ("0", "1-4", "5-8", "9-15", "16-30", ">30"))
SEGMENT_COUNT_BINS = ((1, 2, 3, 6), ("0", "1", "2", "3-5", ">5"))
SS_ORDER = ("H", "E", "C")   # also the tie-break order for the major class
SEGMENT_CLASSES = ("H", "E")


def length_bin(n: int) -> str:
    return bin_label(n, *LENGTH_BINS)


def fraction_bin(count: int, total: int) -> str:
    """Decile label of ``count / total`` computed in integers; 100% falls in "90-100"."""
    if total <= 0:
        return "0-10"
    k = min(count * 10 // total, 9)
    return f"{10 * k}-{10 * k + 10}"


def runs(labels: Sequence[str]) -> list[tuple[str, int]]:
    return [(lab, len(list(grp))) for lab, grp in itertools.groupby(labels)]


def longest_run_bin(n: int) -> str:
    return bin_label(n, *LONGEST_RUN_BINS)


def segment_count_bin(n: int) -> str:
    return bin_label(n, *SEGMENT_COUNT_BINS)


def chain_summary_from_ss(chain_id: str, ss3: Sequence[str]) -> dict:
    """Schema record for one chain from its per-residue H/E/C/NA labels.

    Fractions use the full chain length as denominator, so NA residues count
    against every class; NA also breaks runs and segments.
    """
    n = len(ss3)
    counts = {c: sum(1 for s in ss3 if s == c) for c in SS_ORDER}
    rl = runs(ss3)
    longest = {c: max((k for lab, k in rl if lab == c), default=0) for c in SS_ORDER}
    segments = {c: sum(1 for lab, _ in rl if lab == c) for c in SEGMENT_CLASSES}
    major = max(SS_ORDER, key=lambda c: (counts[c], -SS_ORDER.index(c)))
    return {
        "chain_id": chain_id,
        "length_bin": length_bin(n),
        "secondary_structure_fraction_bins": {c: fraction_bin(counts[c], n) for c in SS_ORDER},
        "major_secondary_structure": major,
        "secondary_structure_longest_run_bins": {c: longest_run_bin(longest[c]) for c in SS_ORDER},
        "secondary_structure_segment_count_bins": {c: segment_count_bin(segments[c]) for c in SEGMENT_CLASSES},
    }
