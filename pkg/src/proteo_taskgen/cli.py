"""Command-line entry point.

Exit codes
----------
0  success
2  configuration error (bad JSON, schema violation, missing path)
3  data error (no structures, structure-level failure, unreadable inputs)
4  join failure (model outputs or structure pairs do not line up)
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import jsonschema

from . import __version__
from .anchors import build_anchors, load_or_init_params, read_hidden_sidecar, save_params, spec_from_sidecar
from .errors import ConfigError, JoinError, ProteoTaskgenError
from .fixtures import summarize, verify_fixtures
from .grading import aggregate_report, format_report, grade_pairs, join_outputs
from .labels.labelset import LabelRules
from .metrics.design import aggregate_design, evaluate_design, format_design_report
from .metrics.sequence import CdrPrediction
from .structure.cdr import load_annotation_document
from .structure.io import read_structure, structure_id_from_path
from .tasks.base import TaskInstance
from .tasks.corpus import (GenerationSettings, build_manifest, config_hash, corpus_lines, generate_corpus,
                           read_jsonl, write_json, write_jsonl)
from .tasks.curriculum import DEFAULT_PHASES, PHASE_ORDER, CurriculumPhase, run_curriculum

log = logging.getLogger("proteo_taskgen")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_JOIN = 0, 2, 3, 4
CONFIG_VERSION = 1
STRUCTURE_SUFFIXES = (".cif", ".mmcif", ".pdb", ".ent", ".cif.gz", ".mmcif.gz", ".pdb.gz", ".ent.gz")
# keys that change where or how fast a run happens, not what it produces
HASH_EXCLUDED = ("workers", "output_dir")

_path = {"type": ["string", "null"]}
_count = {"type": "integer", "minimum": 0}
CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["config_version"],
    "additionalProperties": False,
    "properties": {
        "config_version": {"const": CONFIG_VERSION},
        "structures_dir": _path,
        "annotations_dir": _path,
        "hidden_vectors": _path,
        "fixtures_dir": _path,
        "output_dir": _path,
        "global_seed": {"type": "integer", "minimum": -(2 ** 63), "maximum": 2 ** 64 - 1},
        "workers": {"type": ["integer", "null"], "minimum": 1},
        "stage": {"enum": [1, 2, 3, "curriculum"]},
        "per_task": {"type": "object", "additionalProperties": _count},
        "default_count": _count,
        "task_types": {"type": ["array", "null"], "items": {"type": "string"}},
        "label_rules": {"type": "object"},
        "curriculum": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "phase": {"enum": [*PHASE_ORDER, None]},
                "counts": {"type": "object", "additionalProperties": _count},
                "phases": {"type": "array", "items": {"type": "object"}},
                "buffer_capacity": {"type": "integer", "minimum": 1},
                "pool": _path,
            },
        },
        "anchors": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "params": _path,
                "d_gen": {"type": "integer", "minimum": 1},
                "d_llm": {"type": ["integer", "null"], "minimum": 1},
                "dtype": {"enum": ["<f8", "<f4"]},
            },
        },
        "grade": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"corpus": _path, "outputs": _path,
                           "responses_per_query": {"type": "integer", "minimum": 1}},
        },
        "design": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"reference_dir": _path, "generated_dir": _path, "predictions_dir": _path,
                           "if_aar": _path},
        },
    },
}

DEFAULTS = {
    "config_version": CONFIG_VERSION,
    "global_seed": 0,
    "workers": None,
    "stage": 2,
    "per_task": {},
    "default_count": 1,
    "task_types": None,
    "label_rules": {},
    "output_dir": "out",
}


# -- configuration -------------------------------------------------------------------

def load_config(path: Optional[str], overrides: dict) -> dict:
    """Defaults, then the config file, then command-line overrides; validated against CONFIG_SCHEMA."""
    doc = dict(DEFAULTS)
    if path:
        try:
            loaded = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: top level must be an object")
        doc.update(loaded)
    for key, value in overrides.items():
        if value is None:
            continue
        if "." in key:
            head, tail = key.split(".", 1)
            doc[head] = {**(doc.get(head) or {}), tail: value}
        else:
            doc[key] = value
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config {where}: {exc.message}") from None
    try:
        LabelRules.from_dict(doc.get("label_rules"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"label_rules: {exc}") from None
    return doc


def run_hash(cfg: dict) -> str:
    return config_hash({k: v for k, v in cfg.items() if k not in HASH_EXCLUDED})


def _require_dir(cfg: dict, key: str) -> Path:
    value = cfg.get(key)
    if not value:
        raise ConfigError(f"{key} is not set")
    p = Path(value)
    if not p.is_dir():
        raise ConfigError(f"{key} {p} is not a directory")
    return p


def _require_file(value: Optional[str], what: str) -> Path:
    if not value:
        raise ConfigError(f"{what} is not set")
    p = Path(value)
    if not p.is_file():
        raise ConfigError(f"{what} {p} does not exist")
    return p


def _optional_dir(cfg: dict, key: str) -> Optional[Path]:
    if not cfg.get(key):
        return None
    return _require_dir(cfg, key)


def list_structures(directory: Path) -> list[Path]:
    return sorted(p for p in directory.iterdir()
                  if p.is_file() and any(p.name.lower().endswith(s) for s in STRUCTURE_SUFFIXES))


def _settings(cfg: dict, stage: int) -> GenerationSettings:
    return GenerationSettings(stage=stage, global_seed=int(cfg["global_seed"]), per_task=cfg["per_task"],
                              default_count=int(cfg["default_count"]), task_types=cfg["task_types"],
                              rules=LabelRules.from_dict(cfg["label_rules"]))


class DataError(ProteoTaskgenError):
    """Input data problem detected by the command layer."""


# -- generate / sample -----------------------------------------------------------------

def _generate_stage(cfg: dict, stage: int, skip_errors: bool):
    sdir = _require_dir(cfg, "structures_dir")
    adir = _optional_dir(cfg, "annotations_dir")
    paths = list_structures(sdir)
    if not paths:
        raise DataError(f"no structure files in {sdir}")
    settings = _settings(cfg, stage)
    try:
        settings.tasks()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    results = generate_corpus(paths, settings, adir, cfg.get("workers"))
    failed = [r for r in results if r.error]
    for r in failed:
        log.warning("structure %s failed: %s", r.structure_id, r.error)
    if failed and not skip_errors:
        raise DataError(f"{len(failed)} structure(s) failed; rerun with --skip-errors to continue past them")
    return results, settings


def _phases(cfg: dict) -> dict[str, CurriculumPhase]:
    cur = cfg.get("curriculum") or {}
    phases = dict(DEFAULT_PHASES)
    try:
        for doc in cur.get("phases", []):
            p = CurriculumPhase.from_dict(doc)
            phases[p.name] = p
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"curriculum.phases: {exc}") from None
    return phases


def _run_phases(cfg: dict, pool_instances) -> tuple[list[str], dict]:
    cur = cfg.get("curriculum") or {}
    phases = _phases(cfg)
    selected = cur.get("phase")
    upto = PHASE_ORDER.index(selected) if selected else len(PHASE_ORDER) - 1
    run = [phases[n] for n in PHASE_ORDER[:upto + 1]]
    counts = {p.name: int(cur.get("counts", {}).get(p.name, 1000)) for p in run}
    pool: dict[str, list] = {}
    for inst in pool_instances:
        pool.setdefault(inst.task_type, []).append(inst)
    try:
        drawn = run_curriculum(run, pool, counts, int(cfg["global_seed"]), int(cur.get("buffer_capacity", 100_000)))
    except ValueError as exc:
        raise DataError(str(exc)) from None
    emit = [selected] if selected else list(drawn)
    lines, spans, start = [], {}, 0
    for name in emit:
        items = drawn[name]
        lines.extend(inst.to_json() for _, inst in items)
        by_task: dict[str, int] = {}
        for _, inst in items:
            by_task[inst.task_type] = by_task.get(inst.task_type, 0) + 1
        spans[name] = {"start": start, "n": len(items),
                       "replay": sum(src == "replay" for src, _ in items),
                       "counts": dict(sorted(by_task.items()))}
        start += len(items)
    weights = {n: {**{k: v for k, v in phases[n].weights.items()},
                   **{f"replay:{k}": v for k, v in phases[n].replay.items()}} for n in emit}
    return lines, {"phases": spans, "phase_weights": weights}


def cmd_generate(cfg: dict, args) -> int:
    out = Path(cfg["output_dir"])
    h = run_hash(cfg)
    stage = cfg["stage"]
    if stage == "curriculum":
        results, settings = _generate_stage(cfg, 2, args.skip_errors)
        pool = [TaskInstance.from_json(line) for line in corpus_lines(results)]
        lines, info = _run_phases(cfg, pool)
        manifest = build_manifest(results, settings, h, info["phase_weights"],
                                  {"stage": "curriculum", "curriculum": info["phases"], "instances": len(lines)})
    else:
        results, settings = _generate_stage(cfg, int(stage), args.skip_errors)
        lines = corpus_lines(results)
        manifest = build_manifest(results, settings, h)
    write_jsonl(out / "corpus.jsonl", lines)
    write_json(out / "manifest.json", manifest)
    log.info("wrote %d records to %s (config_hash=%s)", len(lines), out / "corpus.jsonl", h)
    return EXIT_OK


def cmd_sample(cfg: dict, args) -> int:
    cur = cfg.get("curriculum") or {}
    pool_path = _require_file(cur.get("pool"), "curriculum.pool")
    try:
        pool = read_jsonl(pool_path)
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"{pool_path}: {exc}") from None
    if not pool:
        raise DataError(f"{pool_path} holds no records")
    lines, info = _run_phases(cfg, pool)
    out = Path(cfg["output_dir"])
    h = run_hash(cfg)
    write_jsonl(out / "sample.jsonl", lines)
    write_json(out / "sample_manifest.json", {"config_hash": h, "global_seed": cfg["global_seed"],
                                              "pool": str(pool_path), "instances": len(lines), **info})
    log.info("sampled %d records (config_hash=%s)", len(lines), h)
    return EXIT_OK


# -- anchors ----------------------------------------------------------------------------

def cmd_anchors(cfg: dict, args) -> int:
    sdir = _require_dir(cfg, "structures_dir")
    adir = _require_dir(cfg, "annotations_dir")
    sidecar = read_hidden_sidecar(_require_file(cfg.get("hidden_vectors"), "hidden_vectors"))
    opts = cfg.get("anchors") or {}
    d_gen = int(opts.get("d_gen", 64))
    d_llm = opts.get("d_llm")
    if d_llm is None:
        dims = {len(h) for entries in sidecar.values() for _, h in entries.values()}
        if len(dims) > 1:
            raise DataError(f"hidden vectors have mixed lengths {sorted(dims)}")
        d_llm = dims.pop() if dims else 1
    dtype = opts.get("dtype", "<f8")
    out = Path(cfg["output_dir"])
    table, proj = load_or_init_params(opts.get("params"), (d_gen, int(d_llm)), int(cfg["global_seed"]))
    if not opts.get("params"):
        out.mkdir(parents=True, exist_ok=True)
        save_params(out / "anchor_params.ptgt", table, proj, dtype)
    paths = list_structures(sdir)
    if not paths:
        raise DataError(f"no structure files in {sdir}")
    n = 0
    for path in paths:
        sid = structure_id_from_path(path)
        ann = adir / f"{sid}.json"
        if not ann.exists():
            log.info("skip %s: no annotation", sid)
            continue
        try:
            cx = read_structure(path)
            doc = load_annotation_document(cx, ann)
            spec = spec_from_sidecar(doc.cdrs, sidecar.get(sid, {}))
            result = build_anchors(cx, spec, table, proj)
        except ProteoTaskgenError as exc:
            if not args.skip_errors:
                raise
            log.warning("structure %s failed: %s", sid, exc)
            continue
        (out / "anchors").mkdir(parents=True, exist_ok=True)
        (out / "anchors" / f"{sid}.jsonl").write_text(result.to_jsonl(dtype), encoding="utf-8")
        result.write_tensor(out / "anchors" / f"{sid}.ptgt", dtype)
        n += 1
    log.info("anchored %d structure(s) (config_hash=%s)", n, run_hash(cfg))
    return EXIT_OK


# -- grading / evaluation -----------------------------------------------------------------

def _read_outputs(path: Path) -> list[dict]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{n}: {exc}") from None
            if not isinstance(doc, dict):
                raise DataError(f"{path}:{n}: expected an object")
            docs.append(doc)
    return docs


def cmd_grade(cfg: dict, args) -> int:
    g = cfg.get("grade") or {}
    corpus = _require_file(g.get("corpus"), "grade.corpus")
    outputs = _require_file(g.get("outputs"), "grade.outputs")
    try:
        instances = read_jsonl(corpus)
    except (ValueError, KeyError) as exc:
        raise DataError(f"{corpus}: {exc}") from None
    pairs = join_outputs(instances, _read_outputs(outputs))
    report = aggregate_report(grade_pairs(pairs), int(g.get("responses_per_query", 1)))
    out = Path(cfg["output_dir"])
    doc = {"config_hash": run_hash(cfg), **report.to_dict()}
    write_json(out / "grade_report.json", doc)
    text = format_report(report)
    (out / "grade_report.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def _by_id(directory: Path) -> dict[str, Path]:
    return {structure_id_from_path(p): p for p in list_structures(directory)}


def cmd_eval_design(cfg: dict, args) -> int:
    d = cfg.get("design") or {}
    ref_dir = _require_dir(d, "reference_dir")
    gen_dir = _require_dir(d, "generated_dir")
    adir = _require_dir(cfg, "annotations_dir")
    pred_dir = _optional_dir(d, "predictions_dir")
    if_aar = {}
    if d.get("if_aar"):
        try:
            if_aar = json.loads(_require_file(d["if_aar"], "design.if_aar").read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"design.if_aar: {exc}") from None
    refs, gens = _by_id(ref_dir), _by_id(gen_dir)
    if not refs:
        raise DataError(f"no structure files in {ref_dir}")
    if set(refs) != set(gens):
        only_r, only_g = sorted(set(refs) - set(gens)), sorted(set(gens) - set(refs))
        raise JoinError(f"unmatched structures: reference only {only_r[:5]}, generated only {only_g[:5]}")
    results = []
    for sid in sorted(refs):
        try:
            ref = read_structure(refs[sid])
            gen = read_structure(gens[sid], structure_id=sid)
            ann = adir / f"{sid}.json"
            if not ann.exists():
                raise DataError(f"{sid}: no annotation {ann}")
            cdrs = load_annotation_document(ref, ann).cdrs
            pred = None
            if pred_dir is not None and (pred_dir / f"{sid}.json").exists():
                pred = CdrPrediction.from_json(pred_dir / f"{sid}.json")
            results.append(evaluate_design(ref, cdrs, gen, pred, if_aar.get(sid)))
        except ProteoTaskgenError as exc:
            if not args.skip_errors:
                raise
            log.warning("structure %s failed: %s", sid, exc)
    report = aggregate_design(results)
    out = Path(cfg["output_dir"])
    write_json(out / "design_report.json", {"config_hash": run_hash(cfg), **report.to_dict(),
                                            "per_complex": [r.to_dict() for r in results]})
    text = format_design_report(report)
    (out / "design_report.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_eval(cfg: dict, args) -> int:
    return cmd_grade(cfg, args) if args.mode == "grade" else cmd_eval_design(cfg, args)


def cmd_verify_fixtures(cfg: dict, args) -> int:
    fdir = _require_dir(cfg, "fixtures_dir")
    results = verify_fixtures(fdir, LabelRules.from_dict(cfg["label_rules"]))
    for r in results:
        tag = "hard" if r.hard else "info"
        extra = f" agreement={r.agreement:.2f}" if r.status in ("pass", "fail") else f" {r.detail}"
        print(f"[{tag}] {r.entry} {r.name}: {r.status}{extra}")
    summary = summarize(results)
    print(json.dumps(summary))
    write_json(Path(cfg["output_dir"]) / "fixtures_report.json",
               {"summary": summary, "checks": [r.to_dict() for r in results]})
    if summary["hard_missing"]:
        return EXIT_DATA
    return EXIT_OK if summary["hard_passed"] == summary["hard_total"] else 1


# -- argument parsing ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="global seed (overrides the config)")
    common.add_argument("--workers", type=int, help="worker processes (default: available CPUs)")
    common.add_argument("--output-dir", help="output directory (overrides the config)")
    common.add_argument("--skip-errors", action="store_true", help="continue past structure-level failures")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="proteo-taskgen", description="Structure-grounded task corpus tools")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="generate a task corpus")
    g.add_argument("--stage", choices=["1", "2", "3", "curriculum"])
    g.add_argument("--phase", choices=PHASE_ORDER, help="emit only this curriculum phase")
    g.add_argument("--structures-dir")
    g.add_argument("--annotations-dir")

    s = sub.add_parser("sample", parents=[common], help="sample curriculum phases from an existing corpus")
    s.add_argument("--phase", choices=PHASE_ORDER)
    s.add_argument("--pool", help="Stage II corpus JSONL to draw from")
    s.add_argument("-n", "--count", type=int, help="items per emitted phase")

    a = sub.add_parser("anchors", parents=[common], help="build generator anchor inputs")
    a.add_argument("--structures-dir")
    a.add_argument("--annotations-dir")
    a.add_argument("--hidden-vectors")

    gr = sub.add_parser("grade", parents=[common], help="grade model outputs against a corpus")
    gr.add_argument("--corpus")
    gr.add_argument("--outputs")

    e = sub.add_parser("eval", parents=[common], help="grade outputs or evaluate designed structures")
    e.add_argument("--mode", choices=["grade", "design"], default="grade")
    e.add_argument("--corpus")
    e.add_argument("--outputs")

    v = sub.add_parser("verify-fixtures", parents=[common], help="check labels against published entries")
    v.add_argument("--fixtures-dir")
    return p


def _overrides(args) -> dict:
    ov = {"global_seed": args.seed, "workers": args.workers, "output_dir": args.output_dir}
    stage = getattr(args, "stage", None)
    if stage is not None:
        ov["stage"] = stage if stage == "curriculum" else int(stage)
    for attr, key in (("structures_dir", "structures_dir"), ("annotations_dir", "annotations_dir"),
                      ("hidden_vectors", "hidden_vectors"), ("fixtures_dir", "fixtures_dir"),
                      ("phase", "curriculum.phase"), ("pool", "curriculum.pool"),
                      ("corpus", "grade.corpus"), ("outputs", "grade.outputs")):
        ov[key] = getattr(args, attr, None)
    return ov


COMMANDS = {"generate": cmd_generate, "sample": cmd_sample, "anchors": cmd_anchors, "grade": cmd_grade,
            "eval": cmd_eval, "verify-fixtures": cmd_verify_fixtures}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, _overrides(args))
        if args.command == "sample" and args.count is not None:
            phase = cfg.get("curriculum", {}).get("phase")
            names = [phase] if phase else list(PHASE_ORDER)
            cur = cfg.setdefault("curriculum", {})
            cur["counts"] = {**cur.get("counts", {}), **{n: args.count for n in names}}
        log.info("config_hash=%s command=%s", run_hash(cfg), args.command)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except JoinError as exc:
        log.error("join failure: %s", exc)
        return EXIT_JOIN
    except ProteoTaskgenError as exc:
        log.error("data error: %s: %s", type(exc).__name__, exc)
        return EXIT_DATA
    except OSError as exc:
        log.error("data error: %s", exc)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
