import numpy as np
import pytest
from Bio.Align import PairwiseAligner, substitution_matrices
from Bio.SVDSuperimposer import SVDSuperimposer
from hypothesis import given, settings, strategies as st

from helpers import brute_clashes, jsd_formula, lcs_dp, levenshtein_dp
from proteo_taskgen.constants import AA20, BLOSUM62
from proteo_taskgen.errors import EmptyGroundTruth, EmptyRegion, MetricError, TooFewPoints
from proteo_taskgen.metrics import (CdrPrediction, LoopPrediction, StructurePair, aar, count_clashes,
                                    detection_metrics, global_align, if_aar_delta, jsd, residue_metrics,
                                    rmsd_ca, sequence_metrics)
from proteo_taskgen.metrics.sequence import blosum

aa_text = st.text(alphabet=AA20, max_size=12)


# -- detection --------------------------------------------------------------------------

def loops(**kw):
    return CdrPrediction({k: LoopPrediction(frozenset(v)) for k, v in kw.items()})


def test_detection_identity():
    gt = loops(H3=range(1, 6), L1=range(20, 25))
    d = detection_metrics(gt, gt)
    assert (d["recall"], d["precision"], d["set_match"]) == (1.0, 1.0, 1.0)


def test_detection_partial():
    d = detection_metrics(loops(H3={1, 2, 3, 9}), loops(H3={1, 2, 3, 4, 5}))
    assert d["recall"] == pytest.approx(0.6)
    assert d["precision"] == pytest.approx(0.75)
    assert d["set_match"] == 0.0


def test_detection_empty_prediction():
    d = detection_metrics(loops(), loops(H3={1, 2}))
    assert d["recall"] == 0.0 and d["precision"] == 0.0
    assert d["flags"] == ["precision_undefined:H3"]
    with pytest.raises(EmptyGroundTruth):
        detection_metrics(loops(), loops())


def test_prediction_from_dict():
    p = CdrPrediction.from_dict({"H3": {"chain": "H", "start": 3, "end": 5, "sequence": "ACD"}})
    assert p.loops["H3"].indices == frozenset({3, 4, 5})
    with pytest.raises(ValueError):
        LoopPrediction(frozenset({1, 2}), "A")


# -- sequence-level -------------------------------------------------------------------------

def test_sequence_examples():
    assert sequence_metrics("ACDE", "ACDE") == {"emr": 1.0, "edit_sim": 1.0, "lcs_norm": 1.0, "length_match": 1.0}
    assert sequence_metrics("kitten", "sitting")["edit_sim"] == pytest.approx(1 - 3 / 7)
    empty = sequence_metrics("", "ACE")
    assert (empty["edit_sim"], empty["lcs_norm"], empty["length_match"]) == (0.0, 0.0, 0.0)
    with pytest.raises(MetricError):
        sequence_metrics("A", "")


@settings(max_examples=300)
@given(aa_text, aa_text.filter(bool))
def test_sequence_matches_dp(a, b):
    m = sequence_metrics(a, b)
    assert m["edit_sim"] == 1.0 - levenshtein_dp(a, b) / max(len(a), len(b))
    assert m["lcs_norm"] == lcs_dp(a, b) / len(b)


# -- residue-level --------------------------------------------------------------------------

def test_residue_examples():
    assert residue_metrics("AR", "AR")["blosum62_mean"] == 4.5
    same = residue_metrics("ACDEFG", "ACDEFG")
    assert same["pos_acc"] == same["f1"] == 1.0
    assert residue_metrics("AAAA", "AATA")["pos_acc"] == 0.75
    assert residue_metrics("", "ACD")["blosum62_mean"] is None


def test_blosum_is_symmetric_and_standard():
    mat = substitution_matrices.load("BLOSUM62")
    for a in AA20:
        for b in AA20:
            assert blosum(a, b) == blosum(b, a) == int(mat[a][b])


def _aligner():
    al = PairwiseAligner()
    al.mode = "global"
    al.substitution_matrix = substitution_matrices.load("BLOSUM62")
    al.open_gap_score = -10
    al.extend_gap_score = -1
    return al


@settings(max_examples=200, deadline=None)
@given(aa_text.filter(bool), aa_text.filter(bool))
def test_alignment_score_matches_biopython(a, b):
    al_a, al_b, score = global_align(a, b)
    assert al_a.replace("-", "") == a and al_b.replace("-", "") == b
    assert score == _aligner().score(a, b)
    # recompute the score from the returned columns
    total, gap = 0, None
    for x, y in zip(al_a, al_b):
        if x != "-" and y != "-":
            total += BLOSUM62[x, y]
            gap = None
        else:
            kind = "a" if x == "-" else "b"
            total += -1 if gap == kind else -10
            gap = kind
    assert total == score


def test_tie_break_prefers_gap_in_second():
    # ending in a match column and ending in a gap tie at -6; the match column wins
    assert global_align("AA", "A") == ("AA", "-A", -6.0)


# -- AAR ------------------------------------------------------------------------------------

def test_aar_examples():
    assert aar("ACDEFGHIKL", "ACDEFGHIKL", range(10)) == 1.0
    assert aar("ACDEFAAAAA", "ACDEFGHIKL", range(10)) == 0.5
    assert aar("A", "C", [0]) == 0.0
    assert aar({("H", 1): "A", ("H", 2): "C"}, {("H", 1): "A", ("H", 2): "X"}, [("H", 1), ("H", 2)]) == 1.0
    with pytest.raises(EmptyRegion):
        aar("A", "X", [0])


def test_if_aar_delta():
    assert if_aar_delta(0.1506, 0.1927) == pytest.approx(0.0421, abs=1e-9)
    assert if_aar_delta(0.6504, 0.1973) == pytest.approx(-0.4531, abs=1e-9)
    assert if_aar_delta(0.3, 0.3) == 0.0
    assert if_aar_delta(15.06, 19.27, scale="percent") == pytest.approx(4.21, abs=1e-9)


# -- RMSD -----------------------------------------------------------------------------------

def make_pair(ref, gen, designed=None):
    n = len(ref)
    designed = np.ones(n, bool) if designed is None else designed
    return StructurePair(ref, gen, designed, ["A"] * n, np.arange(1, n + 1))


def test_rmsd_examples():
    pts = np.random.default_rng(0).normal(size=(10, 3))
    assert rmsd_ca(make_pair(pts, pts)) == pytest.approx(0.0, abs=1e-12)
    pair = make_pair([[0, 0, 0], [1, 0, 0]], [[0, 0, 0], [3, 0, 0]])
    assert rmsd_ca(pair) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(TooFewPoints):
        rmsd_ca(make_pair(pts[:1], pts[:1]))


def test_rmsd_matches_svd_superimposer(rng):
    for _ in range(20):
        ref = rng.normal(size=(12, 3)) * 5
        gen = ref + rng.normal(size=(12, 3))
        sup = SVDSuperimposer()
        sup.set(ref, gen)
        sup.run()
        assert rmsd_ca(make_pair(ref, gen)) == pytest.approx(sup.get_rms(), abs=1e-9)


def test_rmsd_no_reflection():
    ref = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1.0]])
    mirrored = ref * np.array([1, 1, -1])
    assert rmsd_ca(make_pair(ref, mirrored)) > 0.1


def test_rmsd_global_mode(rng):
    ref = rng.normal(size=(20, 3)) * 4
    gen = ref.copy()
    gen[:5] += 2.0
    designed = np.zeros(20, bool)
    designed[:5] = True
    pair = make_pair(ref, gen, designed)
    assert rmsd_ca(pair) == pytest.approx(0.0, abs=1e-9)
    assert rmsd_ca(pair, mode="global") > 0.5


# -- clashes --------------------------------------------------------------------------------

def test_clash_examples():
    one = count_clashes(np.zeros((1, 3)), [True], ["A"], [1])
    assert one["clash_in"] == 0.0
    two = count_clashes(np.array([[0, 0, 0], [3.0, 0, 0]]), [True, True], ["A", "A"], [1, 5])
    assert two["n_clash_in"] == 1
    far = count_clashes(np.array([[0, 0, 0], [3.66, 0, 0]]), [True, True], ["A", "A"], [1, 5])
    assert far["n_clash_in"] == 0
    adjacent = count_clashes(np.array([[0, 0, 0], [3.0, 0, 0]]), [True, True], ["A", "A"], [1, 2])
    assert adjacent["n_clash_in"] == 0 and adjacent["pairs_in"] == 0


def test_clashes_match_brute_force(rng):
    for _ in range(10):
        n = 120
        coords = rng.uniform(0, 15, size=(n, 3))
        designed = rng.random(n) < 0.3
        chains = rng.choice(["A", "B"], size=n)
        pos = rng.integers(1, 40, size=n)
        got = count_clashes(coords, designed, chains, pos)
        assert (got["n_clash_in"], got["n_clash_out"]) == brute_clashes(coords, designed, chains, pos)
        assert got["pairs_out"] == designed.sum() * (~designed).sum()


# -- JSD ------------------------------------------------------------------------------------

def test_jsd_examples():
    assert jsd([1, 2, 3], [1, 2, 3]) == pytest.approx(0.0, abs=1e-12)
    assert jsd([1, 0], [0, 1]) == pytest.approx(1.0, abs=1e-12)
    assert jsd([1, 0], [0.5, 0.5]) == pytest.approx(0.3113, abs=1e-3)
    with pytest.raises(MetricError):
        jsd([0, 0], [1, 1])


@given(st.lists(st.floats(0, 10), min_size=2, max_size=36).filter(lambda v: sum(v) > 1e-3),
       st.randoms(use_true_random=False))
def test_jsd_matches_formula_and_is_symmetric(p, r):
    q = [x + r.random() for x in p]
    assert jsd(p, q) == pytest.approx(jsd_formula(p, q), abs=1e-9)
    assert jsd(p, q) == pytest.approx(jsd(q, p), abs=1e-12)
    assert 0.0 <= jsd(p, q) <= 1.0
