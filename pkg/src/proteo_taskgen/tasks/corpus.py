"""Corpus generation over many structures: parallel map, canonical ordering, JSONL and manifest output."""

from __future__ import annotations

import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from ..errors import MissingAnnotation, ProteoTaskgenError, TaskNotApplicable
from ..labels.labelset import LabelRules, LabelSet, compute_labels
from ..structure.cdr import AnnotationDocument, load_annotation_document
from ..structure.io import read_structure, structure_id_from_path
from ..structure.model import Complex
from . import schemas as S
from .base import TaskInstance, dumps, instance_seed
from .stage1 import gen_stage1
from .stage2 import gen_stage2
from .stage3 import gen_stage3

log = logging.getLogger(__name__)

MANIFEST_VERSION = 1
STAGE_TASKS = {1: S.STAGE1_TASKS, 2: S.STAGE2_TASKS, 3: S.STAGE3_TASKS}


def config_hash(doc: Mapping) -> str:
    """SHA-256 over the canonical JSON of a configuration (sorted keys)."""
    return hashlib.sha256(json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


@dataclass(frozen=True)
class GenerationSettings:
    stage: int
    global_seed: int = 0
    per_task: Mapping[str, int] = field(default_factory=dict)
    default_count: int = 1
    task_types: Optional[Sequence[str]] = None
    rules: LabelRules = field(default_factory=LabelRules)

    def tasks(self) -> tuple[str, ...]:
        allowed = STAGE_TASKS[self.stage]
        if self.task_types is None:
            return allowed
        chosen = [S.ABBREVIATIONS.get(t, t) for t in self.task_types]
        bad = [t for t in chosen if t not in allowed]
        if bad:
            raise ValueError(f"task types {bad} do not belong to stage {self.stage}")
        return tuple(t for t in allowed if t in chosen)

    def count(self, task: str) -> int:
        for key, n in self.per_task.items():
            if S.ABBREVIATIONS.get(key, key) == task:
                return int(n)
        return self.default_count


def _stage3_hotspots(ann: AnnotationDocument, seed: int, replica: int):
    """All annotated hotspots for the first record; a seeded non-empty subset for later ones."""
    hs = list(ann.hotspots)
    if replica == 0 or len(hs) <= 1:
        return hs
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, len(hs) + 1))
    keep = sorted(rng.choice(len(hs), size=k, replace=False))
    return [hs[i] for i in keep]


def generate_for_structure(cx: Complex, settings: GenerationSettings,
                           annotation: Optional[AnnotationDocument] = None,
                           labels: Optional[LabelSet] = None) -> tuple[list[TaskInstance], dict[str, int]]:
    """All instances for one structure plus per-task counts of skipped (inapplicable) slots.

    Ordinals run over (task type in canonical order, replica) and are consumed
    even by skipped slots, so adding a task type never renumbers another.
    """
    labels = labels if labels is not None else compute_labels(cx, settings.rules)
    out: list[TaskInstance] = []
    skipped: dict[str, int] = {}
    ordinal = 0
    for task in settings.tasks():
        for replica in range(settings.count(task)):
            ordinal += 1
            seed = instance_seed(settings.global_seed, cx.id, task, ordinal)
            try:
                if settings.stage == 1:
                    inst = gen_stage1(cx, labels, task, seed, ordinal)
                elif settings.stage == 2:
                    inst = gen_stage2(cx, labels, task, seed, ordinal, annotation)
                else:
                    if annotation is None:
                        raise MissingAnnotation(f"{cx.id}: Stage III needs an annotation document")
                    inst = gen_stage3(cx, labels, annotation.cdrs, _stage3_hotspots(annotation, seed, replica),
                                      seed, ordinal)
            except (TaskNotApplicable, MissingAnnotation) as exc:
                log.debug("skip %s: %s", task, exc)
                skipped[task] = skipped.get(task, 0) + 1
                continue
            out.append(inst)
    return out, skipped


@dataclass
class StructureResult:
    structure_id: str
    lines: list[str]
    skipped: dict[str, int]
    error: Optional[str] = None


def _annotation_path(annotations_dir: Optional[Path], sid: str) -> Optional[Path]:
    if annotations_dir is None:
        return None
    p = Path(annotations_dir) / f"{sid}.json"
    return p if p.exists() else None


def process_structure(path: Union[str, Path], settings: GenerationSettings,
                      annotations_dir: Optional[Union[str, Path]] = None,
                      cache_dir: Optional[Union[str, Path]] = None) -> StructureResult:
    """Parse, label and generate for one file; library errors are captured, not raised."""
    sid = structure_id_from_path(path)
    try:
        cx = read_structure(path, cache_dir=cache_dir)
        ann_path = _annotation_path(Path(annotations_dir) if annotations_dir else None, sid)
        ann = load_annotation_document(cx, ann_path) if ann_path else None
        insts, skipped = generate_for_structure(cx, settings, ann)
    except ProteoTaskgenError as exc:
        return StructureResult(sid, [], {}, f"{type(exc).__name__}: {exc}")
    return StructureResult(sid, [i.to_json() for i in insts], skipped)


def _process_star(args) -> StructureResult:
    return process_structure(*args)


def default_workers() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:  # pragma: no cover - non-Linux
        return max(1, os.cpu_count() or 1)


def generate_corpus(paths: Iterable[Union[str, Path]], settings: GenerationSettings,
                    annotations_dir: Optional[Union[str, Path]] = None, workers: Optional[int] = None,
                    cache_dir: Optional[Union[str, Path]] = None) -> list[StructureResult]:
    """Per-structure results sorted by structure id; identical for any worker count."""
    paths = sorted(Path(p) for p in paths)
    jobs = [(p, settings, annotations_dir, cache_dir) for p in paths]
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(jobs) <= 1:
        results = [_process_star(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_process_star, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return sorted(results, key=lambda r: r.structure_id)


def corpus_lines(results: Sequence[StructureResult]) -> list[str]:
    lines = []
    for r in sorted(results, key=lambda r: r.structure_id):
        lines.extend(r.lines)
    return lines


def build_manifest(results: Sequence[StructureResult], settings: GenerationSettings, cfg_hash: str,
                   phase_weights: Optional[Mapping] = None, extra: Optional[Mapping] = None) -> dict:
    counts: dict[str, int] = {}
    skipped: dict[str, int] = {}
    for r in results:
        for line in r.lines:
            t = json.loads(line)["task_type"]
            counts[t] = counts.get(t, 0) + 1
        for t, n in r.skipped.items():
            skipped[t] = skipped.get(t, 0) + n
    manifest = {
        "manifest_version": MANIFEST_VERSION,
        "config_hash": cfg_hash,
        "stage": settings.stage,
        "global_seed": settings.global_seed,
        "label_rules": settings.rules.to_dict(),
        "structures": len(results),
        "instances": sum(counts.values()),
        "counts": dict(sorted(counts.items())),
        "skipped": dict(sorted(skipped.items())),
        "errors": [{"structure_id": r.structure_id, "error": r.error} for r in results if r.error],
        "phase_weights": dict(phase_weights or {}),
    }
    if extra:
        manifest.update(extra)
    return manifest


def write_jsonl(path: Union[str, Path], lines: Iterable[str]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")
    tmp.replace(path)


def write_json(path: Union[str, Path], doc) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def read_jsonl(path: Union[str, Path]) -> list[TaskInstance]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(TaskInstance.from_json(line))
    return out


def instance_lines(instances: Iterable[TaskInstance]) -> list[str]:
    return [dumps(i.to_dict()) for i in instances]
