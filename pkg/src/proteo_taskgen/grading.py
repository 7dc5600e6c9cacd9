"""Strict parsing and scoring of model outputs against corpus targets."""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import EmptyResults, JoinError
from .tasks import schemas as S
from .tasks.base import TaskInstance
from .tasks.stage1 import normalized_schema

STAGE1_FIELDS = ("num_chains", "length_bin", "major_ss", "ss_fraction", "longest_run", "segments")
_FIELD_KEYS = {
    "length_bin": "length_bin",
    "major_ss": "major_secondary_structure",
    "ss_fraction": "secondary_structure_fraction_bins",
    "longest_run": "secondary_structure_longest_run_bins",
    "segments": "secondary_structure_segment_count_bins",
}
STAGE3_FIELDS = ("design_points", "hotspots_where", "shape_context", "chemistry_logic", "binder_solution",
                 "cdrs_present", "cdr_sequences")
DELTA_SASA_TOL = 0.01
_SEQ_TAG = re.compile(r"^<([HL]CDR[123])>(.*)</\1>$")


@dataclass(frozen=True)
class ParsedOutput:
    ok: bool
    payload: Any = None
    failure: Optional[str] = None


@dataclass(frozen=True)
class GradeResult:
    task_type: str
    parse_ok: bool
    score: float
    field_scores: Mapping[str, float] = field(default_factory=dict)
    failure: Optional[str] = None
    structure_id: str = ""
    ordinal: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["field_scores"] = dict(self.field_scores)
        return d


# -- parsing ---------------------------------------------------------------------------

def _upper_aa(task_type: str, payload):
    if task_type == S.RR and isinstance(payload.get("aa"), str):
        payload["aa"] = payload["aa"].upper()
    elif task_type == S.REDESIGN:
        for item in (payload.get("thinking") or {}).get("chemistry_logic") or []:
            if isinstance(item, dict) and isinstance(item.get("ag_res"), str):
                item["ag_res"] = item["ag_res"].upper()
        for loop in ((payload.get("answer") or {}).get("cdr_sequences") or {}).values():
            if not isinstance(loop, dict):
                continue
            m = _SEQ_TAG.match(loop.get("seq", "")) if isinstance(loop.get("seq"), str) else None
            if m:
                loop["seq"] = f"<{m.group(1)}>{m.group(2).upper()}</{m.group(1)}>"
            for fp in loop.get("filled_positions") or []:
                if isinstance(fp, dict) and isinstance(fp.get("aa"), str):
                    fp["aa"] = fp["aa"].upper()
    return payload


def parse_model_output(task_type: str, text: str) -> ParsedOutput:
    """Decode and schema-check one model response.

    JSON tasks accept exactly one JSON object surrounded by optional
    whitespace. Caption tasks take the stripped text (or a JSON string
    literal) and require it to follow the caption template.
    """
    if not isinstance(text, str):
        return ParsedOutput(False, failure="output is not text")
    body = text.strip()
    if task_type in S.CAPTION_TASKS:
        if body.startswith('"'):
            try:
                body = json.loads(body)
            except json.JSONDecodeError:
                return ParsedOutput(False, failure="malformed JSON string")
            if not isinstance(body, str):
                return ParsedOutput(False, failure="caption must be a string")
        if not body:
            return ParsedOutput(False, failure="empty caption")
        if normalized_schema(task_type, body) is None:
            return ParsedOutput(False, failure="caption does not follow the template")
        return ParsedOutput(True, body)
    if not body:
        return ParsedOutput(False, failure="empty output")
    try:
        payload, end = json.JSONDecoder().raw_decode(body)
    except json.JSONDecodeError as exc:
        return ParsedOutput(False, failure=f"not JSON: {exc.msg}")
    if body[end:].strip():
        return ParsedOutput(False, failure="text after the JSON object")
    if not isinstance(payload, dict):
        return ParsedOutput(False, failure="top-level JSON value is not an object")
    payload = _upper_aa(task_type, payload)
    errors = S.validation_errors(task_type, payload)
    if errors:
        return ParsedOutput(False, failure="schema: " + errors[0])
    return ParsedOutput(True, payload)


# -- per-task scoring --------------------------------------------------------------------

def _frac(hits: int, total: int) -> float:
    return hits / total if total else 1.0


def _pair_set(pairs) -> set:
    return {frozenset((p["chain_i"], p["chain_j"])) for p in pairs}


def _topk_score(target: dict, pred: dict) -> tuple[float, dict]:
    if _pair_set([target["chain_pair"]]) != _pair_set([pred["chain_pair"]]):
        return 0.0, {"chain_pair": 0.0}
    k = target["topk"]
    chains = [c for c in target if c not in ("chain_pair", "topk")]
    per = {}
    for c in chains:
        gt = list(target[c])[:k]
        guess = list(dict.fromkeys(pred.get(c, [])))[:k]
        denom = min(k, len(gt))
        per[c] = (1.0 if not guess else 0.0) if denom == 0 else len(set(gt) & set(guess)) / denom
    return float(np.mean(list(per.values()))), per


def _stage1_scores(task_type: str, target, pred) -> dict:
    gt = normalized_schema(task_type, target)
    got = normalized_schema(task_type, pred) or {"global": {}, "chains": []}
    by_id = {c.get("chain_id"): c for c in got["chains"]}
    scores = {"num_chains": float(got["global"].get("num_chains") == gt["global"]["num_chains"])}
    for name, key in _FIELD_KEYS.items():
        hits = total = 0
        for rec in gt["chains"]:
            mine = by_id.get(rec["chain_id"], {})
            want = rec[key]
            have = mine.get(key)
            if isinstance(want, dict):
                have = have if isinstance(have, dict) else {}
                hits += sum(have.get(c) == v for c, v in want.items())
                total += len(want)
            else:
                hits += have == want
                total += 1
        scores[name] = _frac(hits, total)
    return scores


def _keyed(items) -> dict:
    return {(it.get("ag_chain"), it.get("ag_pos")): it for it in items if isinstance(it, dict)}


def _entry_equal(a: dict, b: dict) -> bool:
    if set(a) != set(b):
        return False
    for k, v in a.items():
        if k == "delta_sasa_A2":
            if not isinstance(b[k], (int, float)) or abs(b[k] - v) > DELTA_SASA_TOL:
                return False
        elif k == "binder_contacts":
            if sorted(map(json.dumps, v)) != sorted(map(json.dumps, b[k])):
                return False
        elif k == "interaction_types":
            if sorted(v) != sorted(b[k]):
                return False
        elif b[k] != v:
            return False
    return True


def _list_score(gt: list, pred: list) -> float:
    if not gt:
        return 1.0 if not pred else 0.0
    mine = _keyed(pred)
    hits = sum(1 for key, item in _keyed(gt).items() if key in mine and _entry_equal(item, mine[key]))
    return hits / len(gt)


def _stage3_scores(target: dict, pred: dict) -> dict:
    scores = {}
    gt_t, pr_t = target["thinking"], pred["thinking"]
    gp = {(d["ag_chain"], d["ag_pos"]) for d in gt_t["design_points"]}
    pp = {(d["ag_chain"], d["ag_pos"]) for d in pr_t["design_points"]}
    scores["design_points"] = float(gp == pp)
    for name in STAGE3_FIELDS[1:5]:
        scores[name] = _list_score(gt_t[name], pr_t[name])
    gt_a, pr_a = target["answer"], pred["answer"]
    scores["cdrs_present"] = float(sorted(gt_a["cdrs_present"]) == sorted(pr_a["cdrs_present"]))
    per_loop = []
    for loop, want in gt_a["cdr_sequences"].items():
        have = pr_a["cdr_sequences"].get(loop)
        if have is None or have["len"] != want["len"]:
            per_loop.append(0.0)
            continue
        wm, hm = _SEQ_TAG.match(want["seq"]), _SEQ_TAG.match(have["seq"])
        if hm is None or hm.group(1) != wm.group(1) or len(hm.group(2)) != len(wm.group(2)):
            per_loop.append(0.0)
            continue
        ws, hs = wm.group(2), hm.group(2)
        per_loop.append(sum(a == b for a, b in zip(ws, hs)) / len(ws))
    scores["cdr_sequences"] = float(np.mean(per_loop)) if per_loop else 1.0
    return scores


def _score(task_type: str, target, pred) -> tuple[float, dict]:
    if task_type in (S.RR, S.CONTACT, S.DIST, S.SALT, S.LDDT):
        return float(target == pred), {}
    if task_type == S.TOP:
        return float(_pair_set([target["top_chain_pair"]]) == _pair_set([pred["top_chain_pair"]])), {}
    if task_type in (S.DSSP, S.RSA):
        a, b = target["labels"], pred["labels"]
        return sum(x == y for x, y in zip(a, b)) / len(a), {}
    if task_type == S.BATCH:
        guess = {p["pair_id"]: p["dist_bin"] for p in pred["pairs"]}
        gt = target["pairs"]
        return _frac(sum(guess.get(p["pair_id"]) == p["dist_bin"] for p in gt), len(gt)), {}
    if task_type == S.CHAIN:
        return float(_pair_set(target["pairs"]) == _pair_set(pred["pairs"])), {}
    if task_type in (S.INTF, S.HOT):
        return _topk_score(target, pred)
    if task_type in S.STAGE1_TASKS:
        fs = _stage1_scores(task_type, target, pred)
        return float(np.mean([fs[f] for f in STAGE1_FIELDS])), fs
    if task_type == S.REDESIGN:
        fs = _stage3_scores(target, pred)
        return float(np.mean(list(fs.values()))), fs
    raise KeyError(f"unknown task type {task_type!r}")


def grade_instance(instance: TaskInstance, output) -> GradeResult:
    """Score an already-decoded output; schema-invalid payloads score 0."""
    meta = {"structure_id": instance.structure_id, "ordinal": instance.ordinal}
    task = instance.task_type
    if task in S.CAPTION_TASKS:
        ok = isinstance(output, str) and normalized_schema(task, output) is not None
        if not ok:
            return GradeResult(task, False, 0.0, {}, "caption does not follow the template", **meta)
    else:
        errors = S.validation_errors(task, output)
        if errors:
            return GradeResult(task, False, 0.0, {}, "schema: " + errors[0], **meta)
    score, fields = _score(task, instance.target, output)
    return GradeResult(task, True, float(score), fields, None, **meta)


def grade_text(instance: TaskInstance, text: str) -> GradeResult:
    parsed = parse_model_output(instance.task_type, text)
    if not parsed.ok:
        return GradeResult(instance.task_type, False, 0.0, {}, parsed.failure,
                           instance.structure_id, instance.ordinal)
    return grade_instance(instance, parsed.payload)


# -- aggregation -------------------------------------------------------------------------

@dataclass(frozen=True)
class GradeReport:
    per_task: Mapping[str, dict]
    stage1_fields: Mapping[str, float]
    stage1_by_variant: Mapping[str, dict]
    counts: Mapping[str, int]

    def to_dict(self) -> dict:
        return {"per_task": dict(self.per_task), "stage1_fields": dict(self.stage1_fields),
                "stage1_by_variant": dict(self.stage1_by_variant), "counts": dict(self.counts)}


def _stage1_table(results: Sequence[GradeResult]) -> dict:
    fields = {f: float(np.mean([r.field_scores.get(f, 0.0) for r in results])) for f in STAGE1_FIELDS}
    fields["overall"] = float(np.mean([fields[f] for f in STAGE1_FIELDS]))
    return fields


def aggregate_report(results: Sequence[GradeResult], responses_per_query: int = 1) -> GradeReport:
    """Per-task mean scores (fractions) and Stage I field accuracies.

    With several responses per query each response counts once, which equals
    averaging per query first when every query has the same number.
    """
    results = list(results)
    if not results:
        raise EmptyResults("no grade results to aggregate")
    per_task = {}
    for task in S.ALL_TASKS:
        rs = [r for r in results if r.task_type == task]
        if rs:
            per_task[task] = {"accuracy": float(np.mean([r.score for r in rs])), "n": len(rs),
                              "parse_failures": sum(not r.parse_ok for r in rs)}
    s1 = [r for r in results if r.task_type in S.STAGE1_TASKS]
    stage1 = _stage1_table(s1) if s1 else {}
    by_variant = {t: _stage1_table([r for r in s1 if r.task_type == t])
                  for t in S.STAGE1_TASKS if any(r.task_type == t for r in s1)}
    counts = {"results": len(results), "parse_failures": sum(not r.parse_ok for r in results),
              "responses_per_query": int(responses_per_query),
              "queries": len(results) // max(1, int(responses_per_query))}
    return GradeReport(per_task, stage1, by_variant, counts)


def stage1_overall(field_accuracies: Mapping[str, float]) -> float:
    """Unweighted mean of the six Stage I field accuracies."""
    return float(np.mean([field_accuracies[f] for f in STAGE1_FIELDS]))


_ABBR = {v: k for k, v in S.ABBREVIATIONS.items()}


def format_report(report: GradeReport) -> str:
    """Plain-text accuracy tables (percentages)."""
    lines = ["Task        Accuracy(%)      N  ParseFail", "-" * 42]
    for task, row in report.per_task.items():
        lines.append(f"{_ABBR.get(task, task):<10}{100 * row['accuracy']:>12.2f}{row['n']:>8d}{row['parse_failures']:>11d}")
    if report.stage1_fields:
        cols = STAGE1_FIELDS + ("overall",)
        lines += ["", "Stage I    " + " ".join(f"{c:>11}" for c in cols), "-" * (11 + 12 * len(cols))]
        for variant, row in report.stage1_by_variant.items():
            lines.append(f"{_ABBR.get(variant, variant):<10} " + " ".join(f"{100 * row[c]:>11.2f}" for c in cols))
        lines.append(f"{'all':<10} " + " ".join(f"{100 * report.stage1_fields[c]:>11.2f}" for c in cols))
    c = report.counts
    lines += ["", f"results={c['results']} queries={c['queries']} responses/query={c['responses_per_query']} "
                  f"parse_failures={c['parse_failures']}"]
    return "\n".join(lines) + "\n"


# -- joining corpus and outputs -------------------------------------------------------------

def join_outputs(instances: Iterable[TaskInstance], outputs: Iterable[Mapping]) -> list[tuple[TaskInstance, Any]]:
    """Pair each output line ``{"structure_id", "ordinal", "output"}`` with its corpus record.

    Raises
    ------
    JoinError
        An output names an unknown record, or a record has no output.
    """
    index = {}
    for inst in instances:
        index[inst.key] = inst
    pairs, seen, unknown = [], set(), []
    for doc in outputs:
        try:
            key = (str(doc["structure_id"]), int(doc["ordinal"]))
        except (KeyError, TypeError, ValueError):
            raise JoinError(f"output line lacks structure_id/ordinal: {str(doc)[:80]}") from None
        if key not in index:
            unknown.append(key)
            continue
        seen.add(key)
        pairs.append((index[key], doc.get("output")))
    missing = sorted(set(index) - seen)
    if unknown or missing:
        raise JoinError(f"{len(unknown)} output(s) without a corpus record (e.g. {unknown[:3]}), "
                        f"{len(missing)} record(s) without output (e.g. {missing[:3]})")
    return pairs


def grade_pairs(pairs: Iterable[tuple[TaskInstance, Any]]) -> list[GradeResult]:
    """Grade joined pairs; string outputs go through strict parsing, decoded JSON is graded directly."""
    out = []
    for inst, output in pairs:
        if isinstance(output, str):
            out.append(grade_text(inst, output))
        else:
            out.append(grade_text(inst, json.dumps(output)))
    return out
