import json
import shutil

import pytest

from proteo_taskgen.cli import load_config, main, run_hash
from proteo_taskgen.errors import ConfigError
from proteo_taskgen.structure.io import to_mmcif
from proteo_taskgen.synthetic import antibody_complex, helix_bundle


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("ws")
    sdir, adir = root / "structures", root / "annotations"
    sdir.mkdir()
    adir.mkdir()
    for seed in range(2):
        sid = f"AB{seed}"
        cx, ann = antibody_complex(seed=seed, structure_id=sid)
        (sdir / f"{sid}.cif").write_text(to_mmcif(cx))
        (adir / f"{sid}.json").write_text(json.dumps(ann))
    (sdir / "HB1.cif").write_text(to_mmcif(helix_bundle([20, 20], seed=1, structure_id="HB1")))
    return root


def config(ws, tmp_path, **extra):
    doc = {"config_version": 1, "structures_dir": str(ws / "structures"),
           "annotations_dir": str(ws / "annotations"), "global_seed": 5, **extra}
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(doc))
    return str(p)


def test_generate_deterministic_across_workers(workspace, tmp_path):
    cfg = config(workspace, tmp_path)
    outs = []
    for k, workers in enumerate((1, 2)):
        out = tmp_path / f"o{k}"
        assert main(["generate", "--config", cfg, "--stage", "2", "--workers", str(workers),
                     "--output-dir", str(out)]) == 0
        outs.append(out)
    for name in ("corpus.jsonl", "manifest.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    lines = (outs[0] / "corpus.jsonl").read_text().splitlines()
    assert {json.loads(x)["structure_id"] for x in lines} == {"AB0", "AB1", "HB1"}


def test_generate_stage3_and_curriculum(workspace, tmp_path):
    cfg = config(workspace, tmp_path, curriculum={"counts": {"M0": 50, "M1": 50, "M2": 50, "M3": 50}})
    assert main(["generate", "--config", cfg, "--stage", "3", "--output-dir", str(tmp_path / "s3")]) == 0
    recs = [json.loads(x) for x in (tmp_path / "s3" / "corpus.jsonl").read_text().splitlines()]
    assert {r["structure_id"] for r in recs} == {"AB0", "AB1"}
    assert main(["generate", "--config", cfg, "--stage", "curriculum", "--output-dir", str(tmp_path / "cur")]) == 0
    assert len((tmp_path / "cur" / "corpus.jsonl").read_text().splitlines()) == 200


def test_exit_codes(workspace, tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["generate", "--config", config(workspace, tmp_path), "--structures-dir", str(empty),
                 "--output-dir", str(tmp_path / "x")]) == 3
    assert main(["generate", "--config", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"config_version": 1, "bogus": 1}))
    assert main(["generate", "--config", str(bad)]) == 2


def test_config_hash_ignores_workers(workspace, tmp_path):
    cfg = config(workspace, tmp_path)
    a = load_config(cfg, {"workers": 1})
    b = load_config(cfg, {"workers": 4, "output_dir": "elsewhere"})
    assert run_hash(a) == run_hash(b)
    assert run_hash(a) != run_hash(load_config(cfg, {"global_seed": 6}))
    with pytest.raises(ConfigError):
        load_config(cfg, {"stage": 7})


def write_outputs(corpus, path, break_first=False):
    lines = []
    for k, line in enumerate(corpus.read_text().splitlines()):
        rec = json.loads(line)
        out = rec["target"] if isinstance(rec["target"], str) else json.dumps(rec["target"])
        if break_first and k == 0:
            out = "not json at all"
        lines.append(json.dumps({"structure_id": rec["structure_id"], "ordinal": rec["ordinal"], "output": out}))
    path.write_text("\n".join(lines) + "\n")


def test_grade_round_trip(workspace, tmp_path):
    cfg = config(workspace, tmp_path, task_types=["RR", "DSSP"], default_count=5)
    out = tmp_path / "g"
    assert main(["generate", "--config", cfg, "--stage", "2", "--output-dir", str(out)]) == 0
    corpus = out / "corpus.jsonl"
    write_outputs(corpus, tmp_path / "outs.jsonl")
    assert main(["eval", "--config", cfg, "--mode", "grade", "--corpus", str(corpus),
                 "--outputs", str(tmp_path / "outs.jsonl"), "--output-dir", str(out)]) == 0
    rep = json.loads((out / "grade_report.json").read_text())
    assert all(v["accuracy"] == 1.0 for v in rep["per_task"].values())

    write_outputs(corpus, tmp_path / "outs.jsonl", break_first=True)
    assert main(["grade", "--config", cfg, "--corpus", str(corpus), "--outputs", str(tmp_path / "outs.jsonl"),
                 "--output-dir", str(out)]) == 0
    rep = json.loads((out / "grade_report.json").read_text())
    assert rep["counts"]["parse_failures"] == 1

    lines = (tmp_path / "outs.jsonl").read_text().splitlines()
    (tmp_path / "short.jsonl").write_text("\n".join(lines[1:]) + "\n")
    assert main(["grade", "--config", cfg, "--corpus", str(corpus), "--outputs", str(tmp_path / "short.jsonl"),
                 "--output-dir", str(out)]) == 4


def test_design_mode(workspace, tmp_path):
    ref = workspace / "structures"
    gen = tmp_path / "gen"
    gen.mkdir()
    for name in ("AB0.cif", "AB1.cif"):
        shutil.copy(ref / name, gen / name)
    refs = tmp_path / "refs"
    refs.mkdir()
    for name in ("AB0.cif", "AB1.cif"):
        shutil.copy(ref / name, refs / name)
    cfg = config(workspace, tmp_path, design={"reference_dir": str(refs), "generated_dir": str(gen)})
    out = tmp_path / "d"
    assert main(["eval", "--config", cfg, "--mode", "design", "--output-dir", str(out)]) == 0
    rep = json.loads((out / "design_report.json").read_text())
    assert rep["geometry"]["jsd_bb"] == pytest.approx(0.0, abs=1e-12)
    assert rep["per_loop"]["H3"]["rmsd"] == pytest.approx(0.0, abs=1e-6)
    (gen / "AB1.cif").unlink()
    assert main(["eval", "--config", cfg, "--mode", "design", "--output-dir", str(out)]) == 4


def test_anchors_and_sample(workspace, tmp_path):
    hidden = tmp_path / "hidden.jsonl"
    hidden.write_text(json.dumps({"structure_id": "AB0", "chain": "H", "pos": 6, "aa": "W", "hidden": [1, 2, 3]}))
    cfg = config(workspace, tmp_path, anchors={"d_gen": 4, "d_llm": 3}, hidden_vectors=str(hidden))
    out = tmp_path / "a"
    assert main(["anchors", "--config", cfg, "--output-dir", str(out)]) == 0
    rows = [json.loads(x) for x in (out / "anchors" / "AB0.jsonl").read_text().splitlines()]
    assert [r["k_gen"] for r in rows if r["chain"] == "H" and r["pos"] == 6] == ["W"]
    assert main(["generate", "--config", cfg, "--stage", "2", "--output-dir", str(out)]) == 0
    assert main(["sample", "--config", cfg, "--pool", str(out / "corpus.jsonl"), "--phase", "M1", "-n", "300",
                 "--output-dir", str(out)]) == 0
    assert len((out / "sample.jsonl").read_text().splitlines()) == 300


def test_verify_fixtures_missing(workspace, tmp_path):
    cfg = config(workspace, tmp_path)
    assert main(["verify-fixtures", "--config", cfg, "--fixtures-dir", str(tmp_path),
                 "--output-dir", str(tmp_path / "f")]) == 3
