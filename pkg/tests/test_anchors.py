import json

import numpy as np
import pytest

from helpers import random_anchor_case
from proteo_taskgen.anchors import (AnchorSpec, EmbeddingTable, ProjectionMatrix, build_anchors, init_params,
                                    load_or_init_params, read_hidden_sidecar, read_params, save_params,
                                    spec_from_sidecar)
from proteo_taskgen.constants import AA20
from proteo_taskgen.errors import DimMismatch, KeyOutsideCdr, MissingHidden, ParseError
from proteo_taskgen.structure.cdr import load_cdr_annotations


def test_init_is_deterministic():
    t1, w1 = load_or_init_params(None, (8, 4), seed=7)
    t2, w2 = load_or_init_params(None, (8, 4), seed=7)
    assert np.array_equal(t1.as_matrix(), t2.as_matrix())
    assert np.array_equal(w1.values, w2.values)
    t3, _ = load_or_init_params(None, (8, 4), seed=8)
    assert not np.array_equal(t1.as_matrix(), t3.as_matrix())


def test_save_load_exact(tmp_path):
    t, w = init_params((8, 4), seed=7)
    p = tmp_path / "p.ptgt"
    save_params(p, t, w)
    t2, w2 = load_or_init_params(p, (8, 4))
    assert t2.as_matrix().tobytes() == t.as_matrix().tobytes()
    assert w2.values.tobytes() == w.values.tobytes()


def test_file_dim_mismatch(tmp_path):
    t, w = init_params((8, 16), seed=0)
    p = tmp_path / "p.ptgt"
    save_params(p, t, w)
    with pytest.raises(DimMismatch):
        load_or_init_params(p, (8, 8))


def test_bad_file(tmp_path):
    p = tmp_path / "bad.ptgt"
    p.write_bytes(b"nope")
    with pytest.raises(ParseError):
        read_params(p)


def hand_params():
    rows = {a: np.zeros(3) for a in AA20}
    rows["A"] = np.array([1.0, 0.0, 0.0])
    table = EmbeddingTable(3, rows, np.array([9.0, 9.0, 9.0]))
    proj = ProjectionMatrix(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))
    return table, proj


def test_hand_example():
    table, proj = hand_params()
    res = [(("H", 1), "G"), (("H", 2), "W"), (("H", 3), "K")]
    spec = AnchorSpec.build([("H", 2), ("H", 3)], {("H", 2): "A"}, {("H", 2): [2.0, 3.0]})
    out = build_anchors(res, spec, table, proj)
    assert out.k_gen == ("G", "A", "X")
    np.testing.assert_array_equal(out.e_gen[1], [3.0, 3.0, 5.0])
    np.testing.assert_array_equal(out.e_gen[2], table.mask_row)
    np.testing.assert_array_equal(out.e_gen[0], table.rows["G"])


def test_empty_key_set():
    table, proj = init_params((4, 2), seed=1)
    res = [(("H", k), "A") for k in range(1, 6)]
    spec = AnchorSpec.build([("H", 2), ("H", 3)], {}, {})
    out = build_anchors(res, spec, table, proj)
    assert out.k_gen == ("A", "X", "X", "A", "A")


def test_zero_projection_gives_identity_embedding():
    table, _ = init_params((5, 3), seed=2)
    zero = ProjectionMatrix(np.zeros((5, 3)))
    res = [(("H", 1), "C")]
    spec = AnchorSpec.build([("H", 1)], {("H", 1): "Y"}, {("H", 1): [1e3, -2e3, 7.0]})
    out = build_anchors(res, spec, table, zero)
    assert out.e_gen[0].tobytes() == table.rows["Y"].tobytes()


def test_errors():
    table, proj = init_params((4, 2), seed=1)
    res = [(("H", 1), "A"), (("H", 2), "A")]
    with pytest.raises(KeyOutsideCdr):
        build_anchors(res, AnchorSpec.build([("H", 1)], {("H", 2): "A"}, {("H", 2): [0, 0]}), table, proj)
    with pytest.raises(MissingHidden):
        build_anchors(res, AnchorSpec.build([("H", 1)], {("H", 1): "A"}, {}), table, proj)
    with pytest.raises(DimMismatch):
        build_anchors(res, AnchorSpec.build([("H", 1)], {("H", 1): "A"}, {("H", 1): [0, 0, 0]}), table, proj)
    with pytest.raises(DimMismatch):
        build_anchors(res, AnchorSpec.build([], {}, {}), table, ProjectionMatrix(np.zeros((3, 2))))


def test_random_invariants(rng):
    for _ in range(50):
        residues, spec, dims = random_anchor_case(rng)
        table, proj = init_params(dims, seed=int(rng.integers(1000)))
        out = build_anchors(residues, spec, table, proj)
        for n, (key, native) in enumerate(residues):
            if key not in spec.cdr_set:
                assert out.k_gen[n] == native
                assert out.e_gen[n].tobytes() == table.rows[native].tobytes()
            elif key in spec.key_set:
                want = table.rows[spec.identities[key]] + proj.values @ spec.hidden[key]
                assert np.max(np.abs(out.e_gen[n] - want)) <= 1e-12


def test_outputs_round_trip(tmp_path):
    table, proj = hand_params()
    res = [(("H", 1), "G"), (("H", 2), "W")]
    out = build_anchors(res, AnchorSpec.build([("H", 2)], {("H", 2): "A"}, {("H", 2): [2.0, 3.0]}), table, proj)
    lines = [json.loads(x) for x in out.to_jsonl().splitlines()]
    assert lines[1] == {"chain": "H", "pos": 2, "k_gen": "A", "e_gen": [3.0, 3.0, 5.0]}
    p = tmp_path / "o.ptgt"
    out.write_tensor(p)
    assert p.read_bytes()[:4] == b"PTGT"


def test_sidecar(tmp_path, antibody):
    cx, ann = antibody
    cdrs = load_cdr_annotations(cx, ann)
    p = tmp_path / "h.jsonl"
    p.write_text(json.dumps({"structure_id": cx.id, "chain": "H", "pos": 6, "aa": "w", "hidden": [1, 2]}) + "\n")
    entries = read_hidden_sidecar(p)[cx.id]
    spec = spec_from_sidecar(cdrs, entries)
    assert spec.identities == {("H", 6): "W"}
    table, proj = init_params((4, 2), seed=0)
    out = build_anchors(cx, spec, table, proj)
    assert out.k_gen.count("X") == len(cdrs.index_set()) - 1
    p.write_text("{bad\n")
    with pytest.raises(ParseError):
        read_hidden_sidecar(p)
