"""Secondary-structure assignment from backbone hydrogen bonds.

Follows the classic Kabsch-Sander scheme as implemented by mkdssp 2.x:
electrostatic H-bond energy, n-turns, minimal helices, bridges, ladders
with bulge merging. Only the states that survive the 8 -> 3 reduction are
tracked (H/G/I -> H, E/B -> E, everything else -> C).

Residues lacking any of N, CA, C, O are excluded from the calculation, act
as chain breaks and are labeled ``NA``.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from ..structure.model import Complex

COUPLING = -27.888  # -0.084 * 332 kcal/mol
MIN_HBOND_ENERGY = -9.9
MAX_HBOND_ENERGY = -0.5
MIN_CA_DISTANCE = 9.0
PEPTIDE_BOND_MAX = 2.5

_REDUCE = {"H": "H", "G": "H", "I": "H", "E": "E", "B": "E"}
_HUGE = 1 << 30


def _u(x: int) -> int:
    # emulate unsigned wrap-around of the reference implementation's index arithmetic
    return x if x >= 0 else _HUGE


class _Backbone:
    def __init__(self, cx: Complex):
        valid = [k for k, r in enumerate(cx.residues) if r.complete_backbone]
        self.global_index = np.array(valid, dtype=int)
        res = [cx.residues[k] for k in valid]
        self.n = len(res)
        self.aa = [r.aa for r in res]
        chain_idx = cx.residue_chain_index[valid] if valid else np.zeros(0, dtype=int)
        self.chain = chain_idx
        coords = np.array([[r.atom_map[a].pos for a in ("N", "CA", "C", "O")] for r in res]).reshape(-1, 4, 3)
        self.N, self.CA, self.C, self.O = (coords[:, k] for k in range(4))
        # segment ids: new segment at chain change, skipped residue, or long C-N gap
        seg = np.zeros(self.n, dtype=int)
        for k in range(1, self.n):
            brk = (
                chain_idx[k] != chain_idx[k - 1]
                or valid[k] != valid[k - 1] + 1
                or np.linalg.norm(self.C[k - 1] - self.N[k]) > PEPTIDE_BOND_MAX
            )
            seg[k] = seg[k - 1] + (1 if brk else 0)
        self.segment = seg
        self.H = np.full((self.n, 3), np.nan)
        for k in range(1, self.n):
            if seg[k] == seg[k - 1]:
                v = self.C[k - 1] - self.O[k - 1]
                self.H[k] = self.N[k] + v / np.linalg.norm(v)

    def same_segment(self, a: int, b: int) -> bool:
        return 0 <= a < self.n and 0 <= b < self.n and self.segment[a] == self.segment[b]


def hbond_energy(n, h, c, o) -> np.ndarray:
    """Kabsch-Sander electrostatic energy (kcal/mol) for donor N-H and acceptor C=O.

    Vectorized over leading dimensions; values are clamped at -9.9 and rounded
    to 1e-3 like the reference implementation.
    """
    d_ho = np.linalg.norm(h - o, axis=-1)
    d_hc = np.linalg.norm(h - c, axis=-1)
    d_nc = np.linalg.norm(n - c, axis=-1)
    d_no = np.linalg.norm(n - o, axis=-1)
    with np.errstate(divide="ignore"):
        e = COUPLING / d_ho - COUPLING / d_hc + COUPLING / d_nc - COUPLING / d_no
    close = (d_ho < 0.5) | (d_hc < 0.5) | (d_nc < 0.5) | (d_no < 0.5)
    e = np.where(close, MIN_HBOND_ENERGY, e)
    e = np.round(e * 1000.0) / 1000.0
    return np.maximum(e, MIN_HBOND_ENERGY)


def _hbonds(bb: _Backbone) -> set[tuple[int, int]]:
    """Set of (donor, acceptor) pairs: N-H of donor bonded to C=O of acceptor."""
    if bb.n < 2:
        return set()
    pairs = cKDTree(bb.CA).query_pairs(MIN_CA_DISTANCE, output_type="ndarray")
    if len(pairs) == 0:
        return set()
    i, j = pairs[:, 0], pairs[:, 1]
    # both directions, except donor i+1 -> acceptor i
    donors = np.concatenate([i, j])
    acceptors = np.concatenate([j, i])
    keep = ~((donors == acceptors + 1))
    donors, acceptors = donors[keep], acceptors[keep]
    ok = ~np.isnan(bb.H[donors, 0]) & np.array([bb.aa[d] != "P" for d in donors], dtype=bool)
    donors, acceptors = donors[ok], acceptors[ok]
    energy = hbond_energy(bb.N[donors], bb.H[donors], bb.C[acceptors], bb.O[acceptors])
    # per donor keep the two lowest energies, ties to the lower acceptor index
    order = np.lexsort((acceptors, energy, donors))
    bonded = set()
    count: dict[int, int] = {}
    for k in order:
        d = int(donors[k])
        c = count.get(d, 0)
        if c >= 2:
            continue
        count[d] = c + 1
        if energy[k] < MAX_HBOND_ENERGY:
            bonded.add((d, int(acceptors[k])))
    return bonded


def _assign8(bb: _Backbone) -> list[str]:
    n = bb.n
    ss = [" "] * n
    bonds = _hbonds(bb)

    def test_bond(a: int, b: int) -> bool:
        return (a, b) in bonds

    def no_break(a: int, b: int) -> bool:
        return bb.same_segment(a, b)

    # -- bridges and ladders
    donors_of: dict[int, list[int]] = {}
    acceptors_of: dict[int, list[int]] = {}
    for d, a in bonds:
        acceptors_of.setdefault(d, []).append(a)
        donors_of.setdefault(a, []).append(d)
    ladders: list[dict] = []
    for i in range(1, n - 4):
        if not no_break(i - 1, i + 1):
            continue
        cand = set()
        for a in acceptors_of.get(i + 1, ()):
            cand.update((a, a + 1))
        for d in donors_of.get(i, ()):
            cand.update((d, d - 1))
        for a in acceptors_of.get(i, ()):
            cand.update((a, a + 1, a - 1))
        for j in sorted(cand):
            if j < i + 3 or j + 1 >= n or not no_break(j - 1, j + 1):
                continue
            kind = None
            if (test_bond(i + 1, j) and test_bond(j, i - 1)) or (test_bond(j + 1, i) and test_bond(i, j - 1)):
                kind = "p"
            elif (test_bond(i + 1, j - 1) and test_bond(j + 1, i - 1)) or (test_bond(j, i) and test_bond(i, j)):
                kind = "a"
            if kind is None:
                continue
            for lad in ladders:
                if lad["type"] != kind or i != lad["i"][-1] + 1:
                    continue
                if kind == "p" and lad["j"][-1] + 1 == j:
                    lad["i"].append(i)
                    lad["j"].append(j)
                    break
                if kind == "a" and lad["j"][0] - 1 == j:
                    lad["i"].append(i)
                    lad["j"].insert(0, j)
                    break
            else:
                ladders.append({"type": kind, "i": [i], "j": [j], "chain": int(bb.chain[i])})

    ladders.sort(key=lambda lad: (lad["chain"], lad["i"][0]))
    a = 0
    while a < len(ladders):
        b = a + 1
        while b < len(ladders):
            la, lb = ladders[a], ladders[b]
            ibi, iei, jbi, jei = la["i"][0], la["i"][-1], la["j"][0], la["j"][-1]
            ibj, iej, jbj, jej = lb["i"][0], lb["i"][-1], lb["j"][0], lb["j"][-1]
            if (la["type"] != lb["type"]
                    or not no_break(min(ibi, ibj), max(iei, iej))
                    or not no_break(min(jbi, jbj), max(jei, jej))
                    or _u(ibj - iei) >= 6
                    or (iei >= ibj and ibi <= iej)):
                b += 1
                continue
            if la["type"] == "p":
                bulge = (_u(jbj - jei) < 6 and _u(ibj - iei) < 3) or _u(jbj - jei) < 3
            else:
                bulge = (_u(jbi - jej) < 6 and _u(ibj - iei) < 3) or _u(jbi - jej) < 3
            if bulge:
                la["i"].extend(lb["i"])
                if la["type"] == "p":
                    la["j"].extend(lb["j"])
                else:
                    la["j"][:0] = lb["j"]
                del ladders[b]
            else:
                b += 1
        a += 1
    for lad in ladders:
        state = "E" if len(lad["i"]) > 1 else "B"
        for lo, hi in ((lad["i"][0], lad["i"][-1]), (lad["j"][0], lad["j"][-1])):
            for k in range(lo, hi + 1):
                if ss[k] != "E":
                    ss[k] = state

    # -- helices
    turn = {s: np.zeros(n, dtype=bool) for s in (3, 4, 5)}
    for s in (3, 4, 5):
        for i in range(n - s):
            if no_break(i, i + s) and test_bond(i + s, i):
                turn[s][i] = True
    for i in range(1, n - 4):
        if turn[4][i] and turn[4][i - 1]:
            for k in range(i, i + 4):
                ss[k] = "H"
    for s, state in ((3, "G"), (5, "I")):
        for i in range(1, n - s):
            if turn[s][i] and turn[s][i - 1]:
                span = range(i, i + s)
                if all(ss[k] in (" ", state) for k in span):
                    for k in span:
                        ss[k] = state
    return ss


def assign_ss3(cx: Complex) -> list[str]:
    """Per-residue H/E/C (or NA) labels, aligned with ``cx.residues``."""
    out = ["NA"] * len(cx.residues)
    bb = _Backbone(cx)
    if bb.n == 0:
        return out
    for k, state in zip(bb.global_index, _assign8(bb)):
        out[int(k)] = _REDUCE.get(state, "C")
    return out
