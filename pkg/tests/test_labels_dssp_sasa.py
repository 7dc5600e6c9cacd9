import mdtraj
import numpy as np
import pytest
from Bio.PDB import PDBParser
from Bio.PDB.SASA import ShrakeRupley

from proteo_taskgen.constants import VDW_RADII
from proteo_taskgen.labels.dssp import assign_ss3
from proteo_taskgen.labels.sasa import compute_rsa, compute_sasa, rsa_bin, sphere_points
from proteo_taskgen.structure.io import to_pdb
from proteo_taskgen.structure.model import AtomRecord, Chain, Complex, Residue
from proteo_taskgen.synthetic import (helix_chain, large_complex, make_chain, mixed_chain, strand_pair)


def mdtraj_ss(cx, tmp_path):
    p = tmp_path / "x.pdb"
    p.write_text(to_pdb(cx))
    return list(mdtraj.compute_dssp(mdtraj.load(str(p)), simplified=True)[0])


def test_ideal_helix_interior_is_h():
    cx = Complex("HX", (helix_chain("A", "A" * 12),), "mmcif")
    ss = assign_ss3(cx)
    assert all(s == "H" for s in ss[1:-1])


def test_missing_ca_is_na():
    cx = Complex("HX", (make_chain("A", "A" * 12, drop=[(6, "CA")]),), "mmcif")
    ss = assign_ss3(cx)
    assert ss[5] == "NA"
    assert ss.count("NA") == 1


@pytest.mark.parametrize("seed", range(6))
def test_mixed_chains_match_mdtraj(seed, tmp_path):
    rng = np.random.default_rng(seed)
    kinds = rng.choice(["H", "E", "C"], size=6)
    segs = [(str(k), int(rng.integers(3, 10))) for k in kinds]
    cx = Complex("MX", (mixed_chain("A", segs, rng),), "mmcif")
    assert assign_ss3(cx) == mdtraj_ss(cx, tmp_path)


@pytest.mark.parametrize("parallel", [False, True])
def test_sheet_matches_mdtraj(parallel, tmp_path):
    cx = strand_pair("VKVTVEV", "TVKVEVT", parallel=parallel)
    ours = assign_ss3(cx)
    assert ours == mdtraj_ss(cx, tmp_path)
    assert "E" in ours


def test_large_complex_matches_mdtraj(tmp_path):
    cx = large_complex(300, seed=5)
    assert assign_ss3(cx) == mdtraj_ss(cx, tmp_path)


def bio_sasa(cx, tmp_path, n_points=960):
    p = tmp_path / "x.pdb"
    p.write_text(to_pdb(cx))
    st = PDBParser(QUIET=True).get_structure("x", str(p))
    ShrakeRupley(probe_radius=1.4, n_points=n_points, radii_dict=dict(VDW_RADII)).compute(st[0], level="R")
    return np.array([r.sasa for r in st[0].get_residues()])


@pytest.mark.parametrize("seed", [0, 1])
def test_sasa_matches_biopython(seed, tmp_path):
    rng = np.random.default_rng(seed)
    cx = Complex("SA", (mixed_chain("A", [("H", 10), ("C", 5), ("E", 8)], rng),), "mmcif")
    ours = compute_sasa(cx).bound
    theirs = bio_sasa(cx, tmp_path)
    # different sphere point sets; agreement to sampling noise
    np.testing.assert_allclose(ours, theirs, atol=4.0, rtol=0.03)
    assert abs(ours.sum() - theirs.sum()) / theirs.sum() < 0.01


def test_isolated_residue_is_exposed():
    cx = Complex("ONE", (make_chain("A", "L"),), "mmcif")
    _, bins = compute_rsa(cx)
    assert bins == ["E"]


def cage_complex():
    center = make_chain("A", "A")
    pts = sphere_points(60) * 3.0 + np.array(center.residues[0].coord("CA"))
    cage = []
    for k, p in enumerate(pts):
        atoms = (AtomRecord("CA", "C", tuple(float(v) for v in p)),)
        cage.append(Residue("B", k + 1, "G", atoms, name="GLY", author_seq=k + 1))
    return Complex("CAGE", (center, Chain("B", tuple(cage))), "mmcif")


def test_caged_residue_is_buried():
    cx = cage_complex()
    asa, bins = compute_rsa(cx)
    assert bins[0] == "B"
    pts = sphere_points(960)
    # brute-force oracle for the caged residue
    atoms = [(np.array(a.pos), VDW_RADII.get(a.element, 1.8) + 1.4) for r in cx.residues for a in r.atoms]
    total = 0.0
    for i, a in enumerate(cx.residues[0].atoms):
        c, R = np.array(a.pos), VDW_RADII[a.element] + 1.4
        surf = c + R * pts
        free = np.ones(len(pts), bool)
        for j, (cj, Rj) in enumerate(atoms):
            if j == i:
                continue
            free &= np.linalg.norm(surf - cj, axis=1) > Rj
        total += free.sum() * 4 * np.pi * R * R / len(pts)
    assert asa[0] == pytest.approx(total, abs=1e-6)


@pytest.mark.parametrize("rel,expected", [(None, "NA"), (0.0, "B"), (0.0999, "B"), (0.10, "M"),
                                          (0.40, "M"), (0.4001, "E"), (2.0, "E")])
def test_rsa_bin_edges(rel, expected):
    assert rsa_bin(rel) == expected
