"""Residue-pair geometry under the C-beta rule (C-alpha for glycine)."""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import MissingReferenceAtom
from ..structure.model import Complex, ResidueKey

CONTACT_CUTOFF = 8.0
SHORT_RANGE_MAX_SEP = 6

# (edges, labels): label k covers [edges[k-1], edges[k]) with open ends
PAIR_BINS: dict[str, tuple[tuple[float, ...], tuple[str, ...]]] = {
    "cross_chain": ((4.0, 6.0, 8.0, 10.0, 14.0), ("<4", "4-6", "6-8", "8-10", "10-14", ">14")),
    "long": ((6.0, 8.0, 10.0, 12.0, 16.0), ("<6", "6-8", "8-10", "10-12", "12-16", ">16")),
    "short": ((3.5, 5.0, 7.0, 9.0, 12.0), ("<3.5", "3.5-5", "5-7", "7-9", "9-12", ">12")),
}


def bin_label(value: float, edges, labels) -> str:
    """Left-closed, right-open binning: a value equal to an edge goes to the upper bin."""
    return labels[bisect.bisect_right(edges, value)]


def pair_class(i: ResidueKey, j: ResidueKey, short_max: int = SHORT_RANGE_MAX_SEP) -> str:
    if i[0] != j[0]:
        return "cross_chain"
    return "short" if abs(i[1] - j[1]) <= short_max else "long"


def dist_bin(distance: float, cls: str) -> str:
    edges, labels = PAIR_BINS[cls]
    return bin_label(distance, edges, labels)


@dataclass(frozen=True)
class PairGeometry:
    distance: float
    contact: bool
    pair_class: str
    dist_bin: str


def reference_coord(cx: Complex, key: ResidueKey) -> np.ndarray:
    res = cx.residue(*key)
    xyz = res.reference_atom()
    if xyz is None:
        atom = "CA" if res.aa == "G" else "CB"
        raise MissingReferenceAtom(f"residue {key} ({res.aa}) has no {atom}")
    return xyz


def pair_geometry(cx: Complex, i: ResidueKey, j: ResidueKey, cutoff: float = CONTACT_CUTOFF) -> PairGeometry:
    # sort the endpoints so the float result is bitwise symmetric
    a, b = sorted([tuple(i), tuple(j)])
    d = float(np.linalg.norm(reference_coord(cx, a) - reference_coord(cx, b)))
    cls = pair_class(a, b)
    return PairGeometry(distance=d, contact=d < cutoff, pair_class=cls, dist_bin=dist_bin(d, cls))


def reference_array(cx: Complex) -> np.ndarray:
    """(n_residues, 3) reference coordinates with NaN rows where the atom is missing."""
    out = np.full((len(cx.residues), 3), np.nan)
    for k, res in enumerate(cx.residues):
        xyz = res.reference_atom()
        if xyz is not None:
            out[k] = xyz
    return out


def contact_pairs(cx: Complex, cutoff: float = CONTACT_CUTOFF, refs: Optional[np.ndarray] = None) -> np.ndarray:
    """(m, 2) global residue-index pairs (i < j) with reference distance below ``cutoff``."""
    from scipy.spatial import cKDTree

    refs = reference_array(cx) if refs is None else refs
    ok = np.flatnonzero(~np.isnan(refs[:, 0]))
    if len(ok) < 2:
        return np.zeros((0, 2), dtype=int)
    pairs = cKDTree(refs[ok]).query_pairs(cutoff, output_type="ndarray")
    if len(pairs) == 0:
        return np.zeros((0, 2), dtype=int)
    pairs = ok[pairs]
    d = np.linalg.norm(refs[pairs[:, 0]] - refs[pairs[:, 1]], axis=1)
    pairs = pairs[d < cutoff]
    pairs.sort(axis=1)
    return pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
