import pytest

from proteo_taskgen.metrics import CdrPrediction, aggregate_design, evaluate_design, format_design_report
from proteo_taskgen.metrics.structure import StructurePair, clash_counts, jsd_backbone
from proteo_taskgen.structure.cdr import load_cdr_annotations
from proteo_taskgen.structure.model import replace_aa
from proteo_taskgen.synthetic import antibody_complex, large_complex


def test_self_evaluation(antibody, antibody_doc):
    cx = antibody[0]
    res = evaluate_design(cx, antibody_doc.cdrs, cx)
    for loop, row in res.per_loop.items():
        assert row["aar"] == 1.0
        assert row["rmsd"] == pytest.approx(0.0, abs=1e-6)
        assert row["emr"] == 1.0 and row["pos_acc"] == 1.0
    assert res.geometry["jsd_bb"] == pytest.approx(0.0, abs=1e-12)
    ref_clash = clash_counts(StructurePair.from_complexes(cx, cx, antibody_doc.cdrs.index_set()))
    assert res.geometry["clash_in"] == ref_clash["clash_in"]


def test_mutated_loop(antibody, antibody_doc):
    cx = antibody[0]
    chain, start, end = antibody_doc.cdrs.loops["H3"]
    mapping = {}
    for p in range(start, start + 5):
        r = cx.residue(chain, p)
        mapping[(chain, p)] = replace_aa(r, "W" if r.aa != "W" else "A")
    gen = cx.with_residues(mapping)
    res = evaluate_design(cx, antibody_doc.cdrs, gen, if_aar={"H3": 0.9})
    assert res.per_loop["H3"]["aar"] == pytest.approx(0.5)
    assert res.per_loop["H3"]["delta"] == pytest.approx(0.4)
    assert res.per_loop["H1"]["aar"] == 1.0


def test_prediction_only(antibody, antibody_doc):
    cx = antibody[0]
    seqs = cx.sequences()
    gt = CdrPrediction.from_annotation(antibody_doc.cdrs, seqs)
    res = evaluate_design(cx, antibody_doc.cdrs, prediction=gt)
    assert res.detection["set_match"] == 1.0
    assert all(row["emr"] == 1.0 for row in res.per_loop.values())
    assert res.geometry == {}


def test_aggregate(antibody):
    results = []
    for seed in range(2):
        cx, ann = antibody_complex(seed=seed, structure_id=f"AB{seed}")
        cdrs = load_cdr_annotations(cx, ann)
        results.append(evaluate_design(cx, cdrs, cx))
    rep = aggregate_design(results)
    assert rep.n_complexes == 2
    assert rep.geometry["jsd_bb_pooled"] == pytest.approx(0.0, abs=1e-12)
    assert rep.geometry["loop_aar"] == 1.0
    text = format_design_report(rep)
    assert "JSD_bb" in text and "complexes=2" in text


def test_backbone_jsd_detects_change():
    ref = large_complex(125, seed=1)
    gen = large_complex(125, seed=1)
    pair = StructurePair.from_complexes(ref, gen, [])
    assert jsd_backbone(pair) == pytest.approx(0.0, abs=1e-12)
    bb = pair.gen_backbone.copy()
    bb[:, :, 2] *= -1  # mirror image flips every dihedral sign
    mirrored = StructurePair(pair.ref_ca, pair.gen_ca, pair.designed, pair.chain_ids, pair.positions,
                             pair.ref_backbone, bb)
    assert jsd_backbone(mirrored) > 0.9
