"""Geometry-side design metrics: C-alpha RMSD after superposition, C-alpha clashes and dihedral JSD."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import jensenshannon

from ..constants import CLASH_CUTOFF
from ..errors import InsufficientBackbone, MetricError, TooFewPoints

N_ANGLE_BINS = 36
ANGLE_EDGES = np.linspace(-180.0, 180.0, N_ANGLE_BINS + 1)
MIN_SUPERPOSE = 2


@dataclass(frozen=True)
class StructurePair:
    """Reference and generated coordinates over a shared residue alignment.

    Row ``i`` of every array describes the same residue on both sides.
    ``*_backbone`` arrays hold N, CA, C per residue with NaN where an atom is
    missing.
    """

    ref_ca: np.ndarray
    gen_ca: np.ndarray
    designed: np.ndarray
    chain_ids: np.ndarray
    positions: np.ndarray
    ref_backbone: Optional[np.ndarray] = None
    gen_backbone: Optional[np.ndarray] = None

    def __post_init__(self):
        n = len(self.ref_ca)
        for name in ("ref_ca", "gen_ca"):
            a = np.asarray(getattr(self, name), dtype=float).reshape(-1, 3)
            object.__setattr__(self, name, a)
            if len(a) != n:
                raise ValueError("reference and generated lists differ in length")
            if not np.isfinite(a).all():
                raise ValueError(f"{name} has non-finite coordinates")
        object.__setattr__(self, "designed", np.asarray(self.designed, dtype=bool).reshape(-1))
        object.__setattr__(self, "chain_ids", np.asarray(self.chain_ids, dtype=object).reshape(-1))
        object.__setattr__(self, "positions", np.asarray(self.positions, dtype=int).reshape(-1))
        for name in ("designed", "chain_ids", "positions"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length != {n}")
        for name in ("ref_backbone", "gen_backbone"):
            bb = getattr(self, name)
            if bb is not None:
                bb = np.asarray(bb, dtype=float).reshape(-1, 3, 3)
                if len(bb) != n:
                    raise ValueError(f"{name} length != {n}")
                object.__setattr__(self, name, bb)

    def __len__(self):
        return len(self.ref_ca)

    @property
    def designed_index(self) -> np.ndarray:
        return np.flatnonzero(self.designed)

    @classmethod
    def from_complexes(cls, reference, generated, designed_keys: Iterable) -> "StructurePair":
        """Align two complexes on (chain, position) keys that carry CA on both sides, in reference order."""
        designed_keys = set(designed_keys)
        rows = []
        for r in reference:
            if not generated.has_residue(r.chain_id, r.pos):
                continue
            g = generated.residue(r.chain_id, r.pos)
            if r.coord("CA") is None or g.coord("CA") is None:
                continue
            rows.append((r, g))
        if not rows:
            raise MetricError(f"{reference.id}: no residue with CA on both sides")

        def bb(res):
            return [res.coord(a) if res.coord(a) is not None else np.full(3, np.nan) for a in ("N", "CA", "C")]

        return cls(
            ref_ca=np.array([r.coord("CA") for r, _ in rows]),
            gen_ca=np.array([g.coord("CA") for _, g in rows]),
            designed=np.array([r.key in designed_keys for r, _ in rows]),
            chain_ids=np.array([r.chain_id for r, _ in rows], dtype=object),
            positions=np.array([r.pos for r, _ in rows]),
            ref_backbone=np.array([bb(r) for r, _ in rows]),
            gen_backbone=np.array([bb(g) for _, g in rows]),
        )


def kabsch(mobile: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Proper rotation ``R`` and translation ``t`` minimizing ``|mobile @ R.T + t - target|``.

    The determinant correction keeps ``det(R) = +1``, so mirror images are
    never superposed onto each other.
    """
    mobile = np.asarray(mobile, dtype=float)
    target = np.asarray(target, dtype=float)
    if len(mobile) < MIN_SUPERPOSE:
        raise TooFewPoints(f"superposition needs >= {MIN_SUPERPOSE} points, got {len(mobile)}")
    mc, tc = mobile.mean(axis=0), target.mean(axis=0)
    h = (mobile - mc).T @ (target - tc)
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T)) or 1.0
    rot = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    return rot, tc - mc @ rot.T


def rmsd_ca(pair: StructurePair, region: Optional[Iterable[int]] = None, mode: str = "region") -> float:
    """C-alpha RMSD over ``region`` after optimal rigid superposition of the generated side.

    Parameters
    ----------
    region
        Row indices; defaults to the designed rows, or all rows if none are designed.
    mode
        ``"region"`` fits the superposition on the region itself (loop-aligned);
        ``"global"`` fits on every aligned row (complex-aligned).

    Raises
    ------
    TooFewPoints
        Fewer than two rows to superpose, or an empty region.
    """
    if region is None:
        idx = pair.designed_index if pair.designed.any() else np.arange(len(pair))
    else:
        idx = np.asarray(sorted(set(int(i) for i in region)), dtype=int)
    if len(idx) == 0:
        raise TooFewPoints("empty region")
    if mode == "region":
        fit = idx
    elif mode == "global":
        fit = np.arange(len(pair))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    rot, t = kabsch(pair.gen_ca[fit], pair.ref_ca[fit])
    moved = pair.gen_ca[idx] @ rot.T + t
    return float(np.sqrt(np.mean(np.sum((moved - pair.ref_ca[idx]) ** 2, axis=1))))


def _adjacent(chain_ids, positions, i, j) -> np.ndarray:
    return (chain_ids[i] == chain_ids[j]) & (np.abs(positions[i] - positions[j]) <= 1)


def count_clashes(coords: np.ndarray, designed: np.ndarray, chain_ids: Sequence, positions: Sequence,
                  cutoff: float = CLASH_CUTOFF) -> dict:
    """C-alpha pairs closer than ``cutoff`` among designed rows and between designed and context rows.

    Designed pairs that are sequence neighbours (same chain, ``|i - j| <= 1``)
    are neither counted nor part of the denominator.
    """
    coords = np.asarray(coords, dtype=float).reshape(-1, 3)
    designed = np.asarray(designed, dtype=bool)
    chain_ids = np.asarray(chain_ids, dtype=object)
    positions = np.asarray(positions, dtype=int)
    d_idx = np.flatnonzero(designed)
    nd, nc = len(d_idx), len(coords) - len(d_idx)

    # denominator for designed pairs: all pairs minus sequence neighbours
    if nd > 1:
        ii, jj = np.triu_indices(nd, k=1)
        adj_pairs = int(_adjacent(chain_ids, positions, d_idx[ii], d_idx[jj]).sum())
    else:
        adj_pairs = 0
    pairs_in = nd * (nd - 1) // 2 - adj_pairs
    pairs_out = nd * nc

    n_in = n_out = 0
    if nd and len(coords) > 1:
        close = cKDTree(coords).query_pairs(cutoff, output_type="ndarray")
        if len(close):
            a, b = close[:, 0], close[:, 1]
            dist = np.linalg.norm(coords[a] - coords[b], axis=1)
            keep = dist < cutoff
            a, b = a[keep], b[keep]
            both = designed[a] & designed[b]
            one = designed[a] ^ designed[b]
            n_in = int((both & ~_adjacent(chain_ids, positions, a, b)).sum())
            n_out = int(one.sum())
    return {
        "clash_in": n_in / pairs_in if pairs_in else 0.0,
        "clash_out": n_out / pairs_out if pairs_out else 0.0,
        "n_clash_in": n_in,
        "n_clash_out": n_out,
        "pairs_in": pairs_in,
        "pairs_out": pairs_out,
    }


def clash_counts(pair: StructurePair, cutoff: float = CLASH_CUTOFF) -> dict:
    """Clash fractions (and raw counts) on the generated side of ``pair``."""
    return count_clashes(pair.gen_ca, pair.designed, pair.chain_ids, pair.positions, cutoff)


def dihedral(p0, p1, p2, p3) -> np.ndarray:
    """Signed dihedral angles in degrees, vectorised over leading axes."""
    b0 = np.asarray(p0) - np.asarray(p1)
    b1 = np.asarray(p2) - np.asarray(p1)
    b2 = np.asarray(p3) - np.asarray(p2)
    b1n = b1 / np.linalg.norm(b1, axis=-1, keepdims=True)
    v = b0 - np.sum(b0 * b1n, axis=-1, keepdims=True) * b1n
    w = b2 - np.sum(b2 * b1n, axis=-1, keepdims=True) * b1n
    x = np.sum(v * w, axis=-1)
    y = np.sum(np.cross(b1n, v) * w, axis=-1)
    return np.degrees(np.arctan2(y, x))


def backbone_dihedrals(backbone: np.ndarray, chain_ids, positions, rows=None) -> tuple[np.ndarray, np.ndarray]:
    """phi and psi (degrees) for ``rows`` where the neighbouring residue and all atoms are present."""
    bb = np.asarray(backbone, dtype=float)
    chain_ids = np.asarray(chain_ids, dtype=object)
    positions = np.asarray(positions, dtype=int)
    n = len(bb)
    rows = np.arange(n) if rows is None else np.asarray(rows, dtype=int)
    phi, psi = [], []
    for i in rows:
        if i > 0 and chain_ids[i - 1] == chain_ids[i] and positions[i] - positions[i - 1] == 1:
            pts = (bb[i - 1, 2], bb[i, 0], bb[i, 1], bb[i, 2])
            if all(np.isfinite(p).all() for p in pts):
                phi.append(float(dihedral(*pts)))
        if i + 1 < n and chain_ids[i + 1] == chain_ids[i] and positions[i + 1] - positions[i] == 1:
            pts = (bb[i, 0], bb[i, 1], bb[i, 2], bb[i + 1, 0])
            if all(np.isfinite(p).all() for p in pts):
                psi.append(float(dihedral(*pts)))
    return np.array(phi), np.array(psi)


def angle_histogram(angles) -> np.ndarray:
    """Counts in 36 ten-degree bins over [-180, 180); 180 wraps to -180."""
    a = np.asarray(angles, dtype=float)
    a = (a + 180.0) % 360.0 - 180.0
    counts, _ = np.histogram(a, bins=ANGLE_EDGES)
    return counts.astype(float)


def jsd(p, q) -> float:
    """Base-2 Jensen-Shannon divergence of two histograms (normalised here), in [0, 1]."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape or p.sum() <= 0 or q.sum() <= 0:
        raise MetricError("histograms must share a shape and have positive mass")
    # scipy returns the distance, i.e. the square root of the divergence
    value = float(jensenshannon(p / p.sum(), q / q.sum(), base=2.0)) ** 2
    return min(max(value, 0.0), 1.0)


def _angle_sets(pair: StructurePair):
    if pair.ref_backbone is None or pair.gen_backbone is None:
        raise InsufficientBackbone("pair has no backbone coordinates")
    rows = pair.designed_index if pair.designed.any() else None
    ref = backbone_dihedrals(pair.ref_backbone, pair.chain_ids, pair.positions, rows)
    gen = backbone_dihedrals(pair.gen_backbone, pair.chain_ids, pair.positions, rows)
    for side, (phi, psi) in (("reference", ref), ("generated", gen)):
        if len(phi) == 0 or len(psi) == 0:
            raise InsufficientBackbone(f"{side}: not enough consecutive backbone for phi and psi")
    return ref, gen


def jsd_backbone_parts(pair: StructurePair) -> dict:
    """phi and psi divergences over the designed rows (all rows when none are designed) and their mean."""
    (rphi, rpsi), (gphi, gpsi) = _angle_sets(pair)
    j_phi = jsd(angle_histogram(gphi), angle_histogram(rphi))
    j_psi = jsd(angle_histogram(gpsi), angle_histogram(rpsi))
    return {"jsd_phi": j_phi, "jsd_psi": j_psi, "jsd_bb": (j_phi + j_psi) / 2.0}


def jsd_backbone(pair: StructurePair) -> float:
    """Mean of the phi and psi histogram divergences between generated and reference backbones.

    Raises
    ------
    InsufficientBackbone
        Either side lacks a computable phi or psi angle in the evaluated rows.
    """
    return jsd_backbone_parts(pair)["jsd_bb"]


def pooled_jsd_backbone(pairs: Sequence[StructurePair]) -> float:
    """Corpus-level variant: pool every complex's angles into one histogram per side before comparing."""
    acc = {k: [] for k in ("rphi", "rpsi", "gphi", "gpsi")}
    for pair in pairs:
        (rphi, rpsi), (gphi, gpsi) = _angle_sets(pair)
        for k, v in zip(acc, (rphi, rpsi, gphi, gpsi)):
            acc[k].append(v)
    if not pairs:
        raise InsufficientBackbone("no structure pairs")
    cat = {k: np.concatenate(v) for k, v in acc.items()}
    j_phi = jsd(angle_histogram(cat["gphi"]), angle_histogram(cat["rphi"]))
    j_psi = jsd(angle_histogram(cat["gpsi"]), angle_histogram(cat["rpsi"]))
    return (j_phi + j_psi) / 2.0
