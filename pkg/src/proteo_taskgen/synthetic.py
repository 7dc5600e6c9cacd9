"""Idealized coordinates for tests, demos and throughput checks.

Backbones are grown from (phi, psi, omega) with standard bond geometry; side
chains use a coarse template (fixed bond length and angle, staggered
torsions). The result is chemically crude but geometrically consistent, which
is all the labelers need.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .constants import AA20, ONE_TO_THREE
from .structure.model import AtomRecord, Chain, Complex, Residue

HELIX = (-57.0, -47.0)
STRAND = (-139.0, 135.0)
COIL = (-70.0, 150.0)

_N_CA, _CA_C, _C_N, _C_O = 1.458, 1.525, 1.329, 1.231
_ANG_N_CA_C, _ANG_CA_C_N, _ANG_C_N_CA, _ANG_CA_C_O = 111.2, 116.2, 121.7, 120.5

# (name, element, ref1, ref2, ref3, torsion): atom bonded to ref3, angle at ref3, torsion ref1-ref2-ref3-atom
_SIDE_CHAINS: dict[str, list[tuple[str, str, str, str, str, float]]] = {
    "G": [], "A": [],
    "S": [("OG", "O", "N", "CA", "CB", 180.0)],
    "C": [("SG", "S", "N", "CA", "CB", 180.0)],
    "V": [("CG1", "C", "N", "CA", "CB", 180.0), ("CG2", "C", "N", "CA", "CB", 60.0)],
    "T": [("OG1", "O", "N", "CA", "CB", 180.0), ("CG2", "C", "N", "CA", "CB", 60.0)],
    "I": [("CG1", "C", "N", "CA", "CB", 180.0), ("CG2", "C", "N", "CA", "CB", 60.0),
          ("CD1", "C", "CA", "CB", "CG1", 180.0)],
    "L": [("CG", "C", "N", "CA", "CB", 180.0), ("CD1", "C", "CA", "CB", "CG", 180.0),
          ("CD2", "C", "CA", "CB", "CG", 60.0)],
    "M": [("CG", "C", "N", "CA", "CB", 180.0), ("SD", "S", "CA", "CB", "CG", 180.0),
          ("CE", "C", "CB", "CG", "SD", 180.0)],
    "P": [("CG", "C", "N", "CA", "CB", 30.0), ("CD", "C", "CA", "CB", "CG", -35.0)],
    "F": [("CG", "C", "N", "CA", "CB", 180.0), ("CD1", "C", "CA", "CB", "CG", 90.0),
          ("CD2", "C", "CA", "CB", "CG", -90.0), ("CE1", "C", "CB", "CG", "CD1", 180.0),
          ("CE2", "C", "CB", "CG", "CD2", 180.0), ("CZ", "C", "CG", "CD1", "CE1", 0.0)],
    "Y": [("CG", "C", "N", "CA", "CB", 180.0), ("CD1", "C", "CA", "CB", "CG", 90.0),
          ("CD2", "C", "CA", "CB", "CG", -90.0), ("CE1", "C", "CB", "CG", "CD1", 180.0),
          ("CE2", "C", "CB", "CG", "CD2", 180.0), ("CZ", "C", "CG", "CD1", "CE1", 0.0),
          ("OH", "O", "CD1", "CE1", "CZ", 180.0)],
    "W": [("CG", "C", "N", "CA", "CB", 180.0), ("CD1", "C", "CA", "CB", "CG", 90.0),
          ("CD2", "C", "CA", "CB", "CG", -90.0), ("NE1", "N", "CB", "CG", "CD1", 180.0),
          ("CE2", "C", "CB", "CG", "CD2", 180.0), ("CE3", "C", "CB", "CG", "CD2", 0.0),
          ("CZ2", "C", "CG", "CD2", "CE2", 180.0), ("CZ3", "C", "CG", "CD2", "CE3", 180.0),
          ("CH2", "C", "CD2", "CE2", "CZ2", 0.0)],
    "H": [("CG", "C", "N", "CA", "CB", 180.0), ("ND1", "N", "CA", "CB", "CG", 90.0),
          ("CD2", "C", "CA", "CB", "CG", -90.0), ("CE1", "C", "CB", "CG", "ND1", 180.0),
          ("NE2", "N", "CB", "CG", "CD2", 180.0)],
    "D": [("CG", "C", "N", "CA", "CB", 180.0), ("OD1", "O", "CA", "CB", "CG", 90.0),
          ("OD2", "O", "CA", "CB", "CG", -90.0)],
    "N": [("CG", "C", "N", "CA", "CB", 180.0), ("OD1", "O", "CA", "CB", "CG", 90.0),
          ("ND2", "N", "CA", "CB", "CG", -90.0)],
    "E": [("CG", "C", "N", "CA", "CB", 180.0), ("CD", "C", "CA", "CB", "CG", 180.0),
          ("OE1", "O", "CB", "CG", "CD", 90.0), ("OE2", "O", "CB", "CG", "CD", -90.0)],
    "Q": [("CG", "C", "N", "CA", "CB", 180.0), ("CD", "C", "CA", "CB", "CG", 180.0),
          ("OE1", "O", "CB", "CG", "CD", 90.0), ("NE2", "N", "CB", "CG", "CD", -90.0)],
    "K": [("CG", "C", "N", "CA", "CB", 180.0), ("CD", "C", "CA", "CB", "CG", 180.0),
          ("CE", "C", "CB", "CG", "CD", 180.0), ("NZ", "N", "CG", "CD", "CE", 180.0)],
    "R": [("CG", "C", "N", "CA", "CB", 180.0), ("CD", "C", "CA", "CB", "CG", 180.0),
          ("NE", "N", "CB", "CG", "CD", 180.0), ("CZ", "C", "CG", "CD", "NE", 180.0),
          ("NH1", "N", "CD", "NE", "CZ", 0.0), ("NH2", "N", "CD", "NE", "CZ", 180.0)],
}


def place_atom(a, b, c, bond: float, angle_deg: float, torsion_deg: float) -> np.ndarray:
    """Position of atom d bonded to c with angle b-c-d and dihedral a-b-c-d (NeRF)."""
    angle, torsion = np.radians(angle_deg), np.radians(torsion_deg)
    bc = c - b
    bc /= np.linalg.norm(bc)
    n = np.cross(b - a, bc)
    n /= np.linalg.norm(n)
    m = np.cross(n, bc)
    d2 = np.array([-bond * np.cos(angle), bond * np.sin(angle) * np.cos(torsion),
                   bond * np.sin(angle) * np.sin(torsion)])
    return c + d2[0] * bc + d2[1] * m + d2[2] * n


def _ideal_cb(n, ca, c):
    b = ca - n
    cc = c - ca
    a = np.cross(b, cc)
    return -0.58273431 * a + 0.56802827 * b - 0.54067466 * cc + ca


def build_backbone(phi_psi: Sequence[tuple[float, float]], omega: float = 180.0) -> np.ndarray:
    """(n, 4, 3) array of N, CA, C, O for the given per-residue dihedrals."""
    n_res = len(phi_psi)
    out = np.zeros((n_res, 4, 3))
    n = np.array([0.0, 0.0, 0.0])
    ca = np.array([_N_CA, 0.0, 0.0])
    ang = np.radians(180.0 - _ANG_N_CA_C)
    c = ca + _CA_C * np.array([np.cos(ang), np.sin(ang), 0.0])
    for i in range(n_res):
        if i > 0:
            psi_prev = phi_psi[i - 1][1]
            n = place_atom(prev_n, prev_ca, prev_c, _C_N, _ANG_CA_C_N, psi_prev)
            ca = place_atom(prev_ca, prev_c, n, _N_CA, _ANG_C_N_CA, omega)
            c = place_atom(prev_c, n, ca, _CA_C, _ANG_N_CA_C, phi_psi[i][0])
        o = place_atom(n, ca, c, _C_O, _ANG_CA_C_O, phi_psi[i][1] + 180.0)
        out[i] = (n, ca, c, o)
        prev_n, prev_ca, prev_c = n, ca, c
    return out


def residue_atoms(aa: str, backbone: np.ndarray) -> list[tuple[str, str, np.ndarray]]:
    n, ca, c, o = backbone
    atoms = [("N", "N", n), ("CA", "C", ca), ("C", "C", c), ("O", "O", o)]
    if aa == "G":
        return atoms
    pos = {"N": n, "CA": ca, "C": c, "CB": _ideal_cb(n, ca, c)}
    atoms.append(("CB", "C", pos["CB"]))
    for name, element, r1, r2, r3, tor in _SIDE_CHAINS.get(aa, []):
        pos[name] = place_atom(pos[r1], pos[r2], pos[r3], 1.52, 110.0, tor)
        atoms.append((name, element, pos[name]))
    return atoms


def make_chain(chain_id: str, sequence: str, phi_psi: Optional[Sequence[tuple[float, float]]] = None,
               transform: Optional[tuple[np.ndarray, np.ndarray]] = None, drop: Sequence[tuple[int, str]] = ()) -> Chain:
    """Build a chain; ``transform`` = (R, t) maps x -> R x + t; ``drop`` removes (pos, atom) pairs."""
    if phi_psi is None:
        phi_psi = [HELIX] * len(sequence)
    if len(phi_psi) != len(sequence):
        raise ValueError("phi_psi and sequence lengths differ")
    bb = build_backbone(phi_psi)
    rot, shift = transform if transform is not None else (np.eye(3), np.zeros(3))
    dropped = set(drop)
    residues = []
    for i, aa in enumerate(sequence):
        atoms = tuple(
            AtomRecord(name, el, tuple(float(v) for v in rot @ xyz + shift))
            for name, el, xyz in residue_atoms(aa, bb[i]) if (i + 1, name) not in dropped
        )
        residues.append(Residue(chain_id, i + 1, aa, atoms, name=ONE_TO_THREE.get(aa, "UNK"),
                                author_seq=i + 1))
    return Chain(chain_id, tuple(residues))


def helix_chain(chain_id: str, sequence: str, **kw) -> Chain:
    return make_chain(chain_id, sequence, [HELIX] * len(sequence), **kw)


def strand_chain(chain_id: str, sequence: str, **kw) -> Chain:
    return make_chain(chain_id, sequence, [STRAND] * len(sequence), **kw)


def principal_axis(chain: Chain) -> tuple[np.ndarray, np.ndarray]:
    """(centroid, unit axis) of the CA trace, oriented N to C."""
    ca = np.array([r.coord("CA") for r in chain.residues])
    centroid = ca.mean(axis=0)
    _, _, vt = np.linalg.svd(ca - centroid)
    axis = vt[0]
    if np.dot(ca[-1] - ca[0], axis) < 0:
        axis = -axis
    return centroid, axis


def rotation_to(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Proper rotation taking unit vector ``src`` onto unit vector ``dst``."""
    src = src / np.linalg.norm(src)
    dst = dst / np.linalg.norm(dst)
    v = np.cross(src, dst)
    c = float(np.dot(src, dst))
    if np.isclose(c, -1.0):
        perp = np.cross(src, [1.0, 0.0, 0.0])
        if np.linalg.norm(perp) < 1e-6:
            perp = np.cross(src, [0.0, 1.0, 0.0])
        perp /= np.linalg.norm(perp)
        return 2.0 * np.outer(perp, perp) - np.eye(3)
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx / (1.0 + c)


def aligned_helix(chain_id: str, sequence: str, center, axis=(0.0, 0.0, 1.0)) -> Chain:
    """Helix whose axis passes through ``center`` along ``axis``."""
    probe = helix_chain(chain_id, sequence)
    centroid, ax = principal_axis(probe)
    rot = rotation_to(ax, np.asarray(axis, dtype=float))
    shift = np.asarray(center, dtype=float) - rot @ centroid
    return helix_chain(chain_id, sequence, transform=(rot, shift))


def random_sequence(n: int, rng: np.random.Generator) -> str:
    return "".join(rng.choice(list(AA20), size=n))


def helix_bundle(chain_lengths: Sequence[int], spacing: float = 10.0, seed: int = 0,
                 chain_ids: Optional[Sequence[str]] = None, structure_id: str = "SYN1") -> Complex:
    """Parallel helices on a square grid; neighbors at ``spacing`` Å are in contact."""
    rng = np.random.default_rng(seed)
    ids = list(chain_ids) if chain_ids is not None else [chr(ord("A") + k) for k in range(len(chain_lengths))]
    side = int(np.ceil(np.sqrt(len(chain_lengths))))
    chains = []
    for k, n in enumerate(chain_lengths):
        center = (spacing * (k % side), spacing * (k // side), 0.0)
        chains.append(aligned_helix(ids[k], random_sequence(n, rng), center))
    return Complex(structure_id, tuple(chains), "mmcif")


def mixed_chain(chain_id: str, segments: Sequence[tuple[str, int]], rng: np.random.Generator,
                transform=None) -> Chain:
    """Chain made of ("H"|"E"|"C", length) segments of dihedral types."""
    table = {"H": HELIX, "E": STRAND, "C": COIL}
    phi_psi = [table[kind] for kind, n in segments for _ in range(n)]
    return make_chain(chain_id, random_sequence(len(phi_psi), rng), phi_psi, transform=transform)


def large_complex(n_residues: int = 1000, seed: int = 0, structure_id: str = "BIG1") -> Complex:
    """About ``n_residues`` residues as packed helix-rich chains of mixed dihedral types."""
    rng = np.random.default_rng(seed)
    per_chain = 125
    n_chains = max(1, int(np.ceil(n_residues / per_chain)))
    side = int(np.ceil(np.sqrt(n_chains)))
    chains = []
    left = n_residues
    for k in range(n_chains):
        n = min(per_chain, left)
        left -= n
        probe = helix_chain("A", "A" * n)
        centroid, ax = principal_axis(probe)
        rot = rotation_to(ax, np.array([0.0, 0.0, 1.0]))
        shift = np.array([10.0 * (k % side), 10.0 * (k // side), 0.0]) - rot @ centroid
        chains.append(helix_chain(chr(ord("A") + k), random_sequence(n, rng), transform=(rot, shift)))
    return Complex(structure_id, tuple(chains), "mmcif")


def antibody_complex(seed: int = 0, structure_id: str = "ABAG1") -> tuple[Complex, dict]:
    """Heavy (H), light (L) and antigen (A) helices with an annotation document.

    The CDR loops sit on the face of H and L that points at the antigen so
    several loop residues make heavy-atom contacts with it.
    """
    rng = np.random.default_rng(seed)
    heavy = aligned_helix("H", random_sequence(40, rng), (0.0, 0.0, 0.0))
    light = aligned_helix("L", random_sequence(36, rng), (20.0, 0.0, 0.0))
    antigen = aligned_helix("A", random_sequence(44, rng), (10.0, 0.0, 0.0))
    cx = Complex(structure_id, (heavy, light, antigen), "mmcif")
    annotation = {
        "loops": {
            "H1": {"chain": "H", "start": 5, "end": 11},
            "H2": {"chain": "H", "start": 16, "end": 22},
            "H3": {"chain": "H", "start": 27, "end": 36},
            "L1": {"chain": "L", "start": 4, "end": 10},
            "L2": {"chain": "L", "start": 15, "end": 19},
            "L3": {"chain": "L", "start": 24, "end": 32},
        },
        "hotspots": [{"chain": "A", "pos": 12}, {"chain": "A", "pos": 20}, {"chain": "A", "pos": 30}],
        "lddt": 0.74,
    }
    return cx, annotation


def strand_pair(seq1: str, seq2: str, parallel: bool = False, gap: float = 4.8,
                shift: Optional[float] = None, structure_id: str = "SHEET1") -> Complex:
    """Two extended chains (A, B) laid side by side in register to form a two-stranded sheet."""
    first = strand_chain("A", seq1)
    centroid, ax = principal_axis(first)
    ref = first.residues[min(2, len(seq1) - 1)]
    d = ref.coord("O") - ref.coord("C")
    d -= d.dot(ax) * ax
    d /= np.linalg.norm(d)
    if parallel:
        rot = np.eye(3)
        shift = -1.25 if shift is None else shift
    else:
        nrm = np.cross(ax, d)
        rot = 2.0 * np.outer(nrm, nrm) - np.eye(3)
        shift = -0.5 if shift is None else shift
    t = centroid + gap * d + shift * ax - rot @ centroid
    return Complex(structure_id, (first, strand_chain("B", seq2, transform=(rot, t))), "mmcif")
