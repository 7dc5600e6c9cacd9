"""Small builders for hand-placed toy complexes."""

import numpy as np

from proteo_taskgen.constants import ONE_TO_THREE
from proteo_taskgen.structure.model import AtomRecord, Chain, Complex, Residue


def residue(chain, pos, aa, atoms):
    recs = tuple(AtomRecord(n, e, tuple(float(v) for v in xyz)) for n, e, xyz in atoms)
    return Residue(chain, pos, aa, recs, name=ONE_TO_THREE.get(aa, "UNK"), author_seq=pos)


def point_complex(chains, structure_id="TOY"):
    """``chains`` maps chain id -> list of CA (glycine) coordinates."""
    out = []
    for cid, pts in chains.items():
        out.append(Chain(cid, tuple(residue(cid, k + 1, "G", [("CA", "C", p)]) for k, p in enumerate(pts))))
    return Complex(structure_id, tuple(out), "mmcif")


def line(n, start=(0.0, 0.0, 0.0), step=(3.8, 0.0, 0.0)):
    return [np.add(start, np.multiply(step, k)) for k in range(n)]


def random_anchor_case(rng, n_res=None, d_gen=None, d_llm=None):
    """Random residues, CDR set, key subset and hidden vectors for anchoring checks."""
    from proteo_taskgen.anchors import AnchorSpec
    from proteo_taskgen.constants import AA20

    n_res = n_res or int(rng.integers(1, 40))
    d_gen = d_gen or int(rng.integers(1, 9))
    d_llm = d_llm or int(rng.integers(1, 9))
    residues = [(("H" if k % 2 else "L", k + 1), str(rng.choice(list(AA20)))) for k in range(n_res)]
    keys = [k for k, _ in residues]
    cdr = [keys[i] for i in np.flatnonzero(rng.random(n_res) < 0.4)]
    key_set = [k for k in cdr if rng.random() < 0.5]
    ident = {k: str(rng.choice(list(AA20))) for k in key_set}
    hidden = {k: rng.normal(size=d_llm) for k in key_set}
    return residues, AnchorSpec.build(cdr, ident, hidden), (d_gen, d_llm)


# -- brute-force metric oracles ---------------------------------------------------

def levenshtein_dp(a, b):
    prev = list(range(len(b) + 1))
    for i in range(1, len(a) + 1):
        cur = [i] + [0] * len(b)
        for j in range(1, len(b) + 1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] != b[j - 1]))
        prev = cur
    return prev[-1]


def lcs_dp(a, b):
    t = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            t[i][j] = t[i - 1][j - 1] + 1 if a[i - 1] == b[j - 1] else max(t[i - 1][j], t[i][j - 1])
    return t[-1][-1]


def brute_clashes(coords, designed, chain_ids, positions, cutoff=3.6574):
    n_in = n_out = 0
    n = len(coords)
    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(coords[i] - coords[j]) >= cutoff:
                continue
            if designed[i] and designed[j]:
                if not (chain_ids[i] == chain_ids[j] and abs(positions[i] - positions[j]) <= 1):
                    n_in += 1
            elif designed[i] or designed[j]:
                n_out += 1
    return n_in, n_out


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def jsd_formula(p, q):
    p = np.asarray(p, float) / np.sum(p)
    q = np.asarray(q, float) / np.sum(q)
    m = (p + q) / 2

    def kl(x, y):
        nz = x > 0
        return float(np.sum(x[nz] * np.log2(x[nz] / y[nz])))

    return 0.5 * kl(p, m) + 0.5 * kl(q, m)
