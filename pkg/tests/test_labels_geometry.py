import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import line, point_complex, residue
from proteo_taskgen.errors import NoChainPairs
from proteo_taskgen.labels import interactions as ix
from proteo_taskgen.labels.labelset import LabelRules, compute_labels
from proteo_taskgen.labels.pairs import PAIR_BINS, contact_pairs, dist_bin, pair_geometry
from proteo_taskgen.labels.summary import chain_summary_from_ss
from proteo_taskgen.structure.model import Chain, Complex


def test_coincident_points():
    cx = point_complex({"A": [(0, 0, 0)], "B": [(0, 0, 0)]})
    g = pair_geometry(cx, ("A", 1), ("B", 1))
    assert (g.distance, g.contact, g.pair_class, g.dist_bin) == (0.0, True, "cross_chain", "<4")


def test_nine_angstrom_cross_chain():
    cx = point_complex({"A": [(0, 0, 0)], "B": [(0, 0, 9)]})
    g = pair_geometry(cx, ("A", 1), ("B", 1))
    assert g.distance == 9.0
    assert not g.contact
    assert g.dist_bin == "8-10"


def test_contact_cutoff_is_strict():
    cx = point_complex({"A": [(0, 0, 0)], "B": [(8.0, 0, 0)]})
    assert not pair_geometry(cx, ("A", 1), ("B", 1)).contact
    cx = point_complex({"A": [(0, 0, 0)], "B": [(7.999, 0, 0)]})
    assert pair_geometry(cx, ("A", 1), ("B", 1)).contact


def test_pair_class_by_separation():
    cx = point_complex({"A": line(10)})
    assert pair_geometry(cx, ("A", 1), ("A", 7)).pair_class == "short"
    assert pair_geometry(cx, ("A", 1), ("A", 8)).pair_class == "long"


@pytest.mark.parametrize("cls", sorted(PAIR_BINS))
def test_bin_edges_left_closed(cls):
    edges, labels = PAIR_BINS[cls]
    for k, e in enumerate(edges):
        assert dist_bin(e, cls) == labels[k + 1]
        assert dist_bin(np.nextafter(e, -np.inf), cls) == labels[k]
    assert dist_bin(0.0, cls) == labels[0]
    assert dist_bin(1e6, cls) == labels[-1]


@given(st.floats(0, 100, allow_nan=False), st.sampled_from(sorted(PAIR_BINS)))
def test_bins_are_monotone(d, cls):
    labels = PAIR_BINS[cls][1]
    assert labels.index(dist_bin(d, cls)) <= labels.index(dist_bin(d + 0.5, cls))


def test_pair_symmetric(bundle):
    a, b = ("A", 3), ("B", 11)
    assert pair_geometry(bundle, a, b) == pair_geometry(bundle, b, a)


def test_contact_pairs_brute_force(rng):
    pts = rng.uniform(0, 25, size=(60, 3))
    cx = point_complex({"A": list(pts[:30]), "B": list(pts[30:])})
    got = {tuple(p) for p in contact_pairs(cx)}
    want = {(i, j) for i, j in itertools.combinations(range(60), 2) if np.linalg.norm(pts[i] - pts[j]) < 8.0}
    assert got == want


def test_single_chain_graph_is_empty(bundle):
    single = bundle.subset(["A"])
    pairs, top = ix.chain_pair_graph(single)
    assert pairs == [] and top is None
    with pytest.raises(NoChainPairs):
        ix.top_chain_pair(single)


def three_chain_toy():
    # A and B: parallel lines 5 A apart; C sits near the far end of B
    a = line(10)
    b = line(10, start=(0, 5, 0))
    c = [(34.2, 12.0, 0.0), (34.2, 40.0, 0.0)]
    return point_complex({"A": a, "B": b, "C": c})


def test_chain_pair_threshold():
    cx = three_chain_toy()
    counts = ix.chain_pair_contact_counts(cx)
    refs = np.array([r.reference_atom() for r in cx.residues])
    chain = [r.chain_id for r in cx.residues]
    brute = {}
    for i, j in itertools.combinations(range(len(refs)), 2):
        if chain[i] != chain[j] and np.linalg.norm(refs[i] - refs[j]) < 8.0:
            key = tuple(sorted((chain[i], chain[j])))
            brute[key] = brute.get(key, 0) + 1
    assert counts == brute
    assert counts[("A", "B")] >= 20 and 0 < counts[("B", "C")] < 10
    pairs, top = ix.chain_pair_graph(cx)
    assert pairs == [("A", "B")] and top == ("A", "B")


def test_salt_bridge_bins():
    lys = residue("A", 1, "K", [("CA", "C", (0, 0, -6)), ("NZ", "N", (0, 0, 0))])
    glu = residue("B", 1, "E", [("CA", "C", (0, 0, 9.5)), ("OE1", "O", (0, 0, 3.5))])
    cx = Complex("SB", (Chain("A", (lys,)), Chain("B", (glu,))), "mmcif")
    assert ix.salt_bridge_bin(cx, ("A", "B")) == "1-2"
    far = residue("B", 1, "E", [("CA", "C", (0, 0, 9.5)), ("OE1", "O", (0, 0, 4.01))])
    cx2 = Complex("SB", (Chain("A", (lys,)), Chain("B", (far,))), "mmcif")
    assert ix.salt_bridge_bin(cx2, ("A", "B")) == "0"
    edge = residue("B", 1, "E", [("CA", "C", (0, 0, 9.5)), ("OE1", "O", (0, 0, 4.0))])
    cx3 = Complex("SB", (Chain("A", (lys,)), Chain("B", (edge,))), "mmcif")
    assert ix.salt_bridge_bin(cx3, ("A", "B")) == "1-2"


def test_salt_bridge_uncharged_pair_is_zero():
    cx = point_complex({"A": line(4), "B": line(4, start=(0, 3, 0))})
    assert ix.salt_bridge_bin(cx, ("A", "B")) == "0"


@pytest.mark.parametrize("count,label", [(0, "0"), (1, "1-2"), (2, "1-2"), (3, "3-5"), (5, "3-5"),
                                         (6, "6-10"), (10, "6-10"), (11, "11-20"), (20, "11-20"), (21, ">20")])
def test_salt_bridge_count_bins(count, label):
    assert ix.salt_bridge_bin_label(count) == label


def test_rank_non_contacting_is_empty():
    cx = point_complex({"A": line(3), "B": line(3, start=(0, 50, 0))})
    assert ix.rank_interface_residues(cx, ("A", "B"), 5) == {"A": [], "B": []}


def test_rank_three_contacting_residues():
    # chain A residues 2, 4, 6 approach chain B atoms with 3, 2, 1 atom contacts
    a = line(8, step=(10.0, 0, 0))
    b_pts = [(10, 3, 0), (10, 3.5, 1), (10, 4, -1), (30, 3, 0), (30, 3.5, 1), (50, 4, 0)]
    cx = point_complex({"A": a, "B": b_pts})
    ranked = ix.rank_interface_residues(cx, ("A", "B"), 10)
    assert ranked["A"] == [2, 4, 6]
    coords = {(r.chain_id, r.pos): np.array(r.atoms[0].pos) for r in cx.residues}
    brute = {}
    for (ka, pa), (kb, pb) in itertools.product(coords.items(), coords.items()):
        if ka[0] == "A" and kb[0] == "B" and np.linalg.norm(pa - pb) <= 5.0:
            brute[ka[1]] = brute.get(ka[1], 0) + 1
    assert sorted(brute, key=lambda p: (-brute[p], p)) == ranked["A"]


def test_rank_hotspot_brute_force(antibody_labels):
    cx = antibody_labels.complex
    table = cx.atoms
    d = np.linalg.norm(table.coords[:, None] - table.coords[None], axis=-1)
    cross = table.chain_index[:, None] != table.chain_index[None]
    counts = {}
    ids = cx.chain_ids
    for i, j in zip(*np.nonzero((d <= 5.0) & cross)):
        r = cx.residues[table.residue_index[i]]
        if ids[table.chain_index[j]] == "A" and r.chain_id == "H":
            counts[r.pos] = counts.get(r.pos, 0) + 1
    want = sorted(counts, key=lambda p: (-counts[p], p))[:10]
    assert antibody_labels.rank(("H", "A"), 10, "interface")["H"] == want


def test_labelset_agrees_with_direct_calls(antibody_labels):
    cx = antibody_labels.complex
    assert antibody_labels.pair(("H", 5), ("A", 9)) == pair_geometry(cx, ("H", 5), ("A", 9))
    assert antibody_labels.salt_bridge_bin(("H", "A")) == ix.salt_bridge_bin(cx, ("H", "A"))


def test_rules_override(bundle):
    strict = compute_labels(bundle, LabelRules(contact_cutoff=4.0))
    assert not strict.pair(("A", 1), ("B", 1)).contact or strict.pair(("A", 1), ("B", 1)).distance < 4.0
    with pytest.raises(ValueError):
        LabelRules.from_dict({"bogus": 1})
    assert LabelRules.from_dict({"contact_cutoff": "7"}).contact_cutoff == 7.0


# -- chain summaries ------------------------------------------------------------

def test_all_coil_ten():
    s = chain_summary_from_ss("A", ["C"] * 10)
    assert s["length_bin"] == "0-50"
    assert s["major_secondary_structure"] == "C"
    assert s["secondary_structure_fraction_bins"]["H"] == "0-10"
    assert s["secondary_structure_longest_run_bins"]["H"] == "0"
    assert s["secondary_structure_segment_count_bins"]["H"] == "0"


def oracle_summary(ss):
    n = len(ss)
    out = {"length": None, "frac": {}, "run": {}, "seg": {}}
    for lo, hi, lab in [(0, 50, "0-50"), (50, 100, "50-100"), (100, 200, "100-200"), (200, 300, "200-300"),
                        (300, 500, "300-500"), (500, 800, "500-800"), (800, 10 ** 9, ">800")]:
        if lo <= n < hi:
            out["length"] = lab
    for c in "HEC":
        pct = 100.0 * ss.count(c) / n
        k = 9 if pct >= 100 else int(pct // 10)
        # guard float rounding with an exact integer check
        while 10 * (k + 1) * n <= 100 * ss.count(c) and k < 9:
            k += 1
        while 10 * k * n > 100 * ss.count(c):
            k -= 1
        out["frac"][c] = f"{10 * k}-{10 * k + 10}"
        best, cur = 0, 0
        for s in ss:
            cur = cur + 1 if s == c else 0
            best = max(best, cur)
        out["run"][c] = ("0" if best == 0 else "1-4" if best <= 4 else "5-8" if best <= 8
                         else "9-15" if best <= 15 else "16-30" if best <= 30 else ">30")
        segs = sum(1 for i, s in enumerate(ss) if s == c and (i == 0 or ss[i - 1] != c))
        out["seg"][c] = "0" if segs == 0 else "1" if segs == 1 else "2" if segs == 2 else "3-5" if segs <= 5 else ">5"
    return out


@settings(max_examples=200)
@given(st.lists(st.sampled_from("HEC"), min_size=1, max_size=400))
def test_summary_matches_oracle(ss):
    s = chain_summary_from_ss("A", ss)
    o = oracle_summary("".join(ss))
    assert s["length_bin"] == o["length"]
    assert s["secondary_structure_fraction_bins"] == o["frac"]
    assert s["secondary_structure_longest_run_bins"] == o["run"]
    assert s["secondary_structure_segment_count_bins"] == {c: o["seg"][c] for c in "HE"}


def test_random_120_summary(rng):
    ss = list(rng.choice(list("HEC"), size=120))
    s = chain_summary_from_ss("A", ss)
    o = oracle_summary("".join(ss))
    assert s["length_bin"] == "100-200" == o["length"]
    assert s["secondary_structure_fraction_bins"] == o["frac"]
