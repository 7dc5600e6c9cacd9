"""CDR / hotspot annotation loading and sequence-level CDR masking."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

from ..constants import CDR_LOOPS
from ..errors import OutOfRange, OverlappingLoops, ParseError, UnknownChain
from .model import CdrAnnotation, Complex, ResidueKey


@dataclass(frozen=True)
class AnnotationDocument:
    """Everything an annotation JSON file carries for one structure."""

    cdrs: CdrAnnotation = field(default_factory=CdrAnnotation)
    hotspots: tuple[ResidueKey, ...] = ()
    lddt: Optional[float] = None


def load_cdr_annotations(cx: Complex, annotation: dict) -> CdrAnnotation:
    """Validate ``{"loops": {"H1": {"chain", "start", "end"}, ...}}`` against a complex.

    Accepts the full annotation document or just its ``loops`` mapping.
    """
    loops_doc = annotation.get("loops", annotation) if isinstance(annotation, dict) else None
    if not isinstance(loops_doc, dict):
        raise ParseError("annotation loops must be a JSON object")
    loops: dict[str, tuple[str, int, int]] = {}
    for name, spec in loops_doc.items():
        if name not in CDR_LOOPS:
            raise ParseError(f"unknown CDR loop name {name!r}")
        try:
            chain, start, end = str(spec["chain"]), int(spec["start"]), int(spec["end"])
        except (KeyError, TypeError, ValueError):
            raise ParseError(f"loop {name}: expected {{chain, start, end}}") from None
        if chain not in cx.chain_ids:
            raise UnknownChain(f"loop {name} references chain {chain!r} absent from {cx.id}")
        n = len(cx.chain(chain))
        if not 1 <= start <= end <= n:
            raise OutOfRange(f"loop {name} interval {start}-{end} outside chain {chain} (1-{n})")
        loops[name] = (chain, start, end)
    ordered = sorted(loops.items(), key=lambda kv: (kv[1][0], kv[1][1]))
    for (n1, (c1, s1, e1)), (n2, (c2, s2, e2)) in zip(ordered, ordered[1:]):
        if c1 == c2 and s2 <= e1:
            raise OverlappingLoops(f"loops {n1} and {n2} share residues on chain {c1}")
    return CdrAnnotation({n: loops[n] for n in CDR_LOOPS if n in loops})


def load_hotspots(cx: Complex, annotation: dict) -> tuple[ResidueKey, ...]:
    out = []
    for item in annotation.get("hotspots", []) or []:
        try:
            key = (str(item["chain"]), int(item["pos"]))
        except (KeyError, TypeError, ValueError):
            raise ParseError("hotspots must be [{chain, pos}, ...]") from None
        cx.residue(*key)
        out.append(key)
    return tuple(out)


def load_annotation_document(cx: Complex, source: Union[str, Path, dict]) -> AnnotationDocument:
    if isinstance(source, dict):
        doc = source
    else:
        try:
            doc = json.loads(Path(source).read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"{source}: {exc}") from None
    lddt = doc.get("lddt")
    if lddt is not None:
        lddt = float(lddt)
    return AnnotationDocument(
        cdrs=load_cdr_annotations(cx, doc.get("loops", {}) or {}),
        hotspots=load_hotspots(cx, doc),
        lddt=lddt,
    )


def apply_cdr_mask(cx: Complex, cdrs: CdrAnnotation) -> Complex:
    """Copy of ``cx`` with every CDR residue's identity replaced by X.

    Coordinates and all non-CDR residues are shared unchanged.
    """
    keys = cdrs.index_set()
    if not keys:
        return cx
    mapping = {}
    for key in keys:
        res = cx.residue(*key)
        if res.aa != "X":
            mapping[key] = replace(res, aa="X")
    return cx.with_residues(mapping) if mapping else cx
