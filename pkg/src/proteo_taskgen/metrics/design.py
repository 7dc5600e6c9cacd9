"""Per-complex design evaluation and the corpus-level report tables."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from ..constants import CDR_LOOPS
from ..errors import InsufficientBackbone, MetricError
from ..structure.model import CdrAnnotation, Complex
from .sequence import CdrPrediction, aar, detection_metrics, if_aar_delta, residue_metrics, sequence_metrics
from .structure import StructurePair, clash_counts, jsd_backbone, pooled_jsd_backbone, rmsd_ca

log = logging.getLogger(__name__)

LOOP_FIELDS = ("aar", "rmsd", "rmsd_global", "emr", "edit_sim", "lcs_norm", "length_match",
               "pos_acc", "precision", "recall", "f1", "blosum62_mean", "if_aar", "delta")
DETECTION_FIELDS = ("recall", "precision", "set_match")
GLOBAL_FIELDS = ("clash_in", "clash_out", "n_clash_in", "n_clash_out", "jsd_bb")


@dataclass
class DesignResult:
    structure_id: str
    per_loop: dict[str, dict]
    detection: Optional[dict] = None
    geometry: dict = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)
    pair: Optional[StructurePair] = None

    def to_dict(self) -> dict:
        return {"structure_id": self.structure_id, "per_loop": self.per_loop, "detection": self.detection,
                "geometry": self.geometry, "flags": self.flags}


def _loop_sequence(cx: Complex, chain: str, positions) -> str:
    return "".join(cx.residue(chain, p).aa if cx.has_residue(chain, p) else "X" for p in positions)


def evaluate_design(reference: Complex, cdrs: CdrAnnotation, generated: Optional[Complex] = None,
                    prediction: Optional[CdrPrediction] = None,
                    if_aar: Optional[Mapping[str, float]] = None) -> DesignResult:
    """All design metrics for one complex.

    Sequence- and residue-level scores compare the predicted loop sequence
    (from ``prediction`` when it carries one, else read off ``generated``)
    with the native loop. Geometry needs ``generated``; detection needs
    ``prediction``. Metrics that cannot be computed are omitted and named in
    ``flags``.
    """
    flags: list[str] = []
    per_loop: dict[str, dict] = {}
    pair = None
    if generated is not None:
        pair = StructurePair.from_complexes(reference, generated, cdrs.index_set())
        row_of = {(c, int(p)): i for i, (c, p) in enumerate(zip(pair.chain_ids, pair.positions))}

    for loop, (chain, start, end) in cdrs.ordered():
        positions = list(range(start, end + 1))
        native = _loop_sequence(reference, chain, positions)
        out: dict = {}
        seq = None
        pl = prediction.loops.get(loop) if prediction is not None else None
        if pl is not None and pl.sequence is not None:
            seq = pl.sequence.upper()
        elif generated is not None:
            seq = _loop_sequence(generated, chain, positions)
        if generated is not None:
            gen_map = {p: generated.residue(chain, p).aa for p in positions if generated.has_residue(chain, p)}
            try:
                out["aar"] = aar(gen_map, dict(zip(positions, native)), positions)
            except MetricError as exc:
                flags.append(f"aar:{loop}:{exc}")
            rows = [row_of[(chain, p)] for p in positions if (chain, p) in row_of]
            for key, mode in (("rmsd", "region"), ("rmsd_global", "global")):
                try:
                    out[key] = rmsd_ca(pair, rows, mode)
                except MetricError as exc:
                    flags.append(f"{key}:{loop}:{exc}")
        elif pl is not None and pl.sequence is not None and sorted(pl.indices) == positions:
            out["aar"] = aar(seq, native, range(len(positions)))
        if seq is not None and native:
            out.update(sequence_metrics(seq, native))
            res = residue_metrics(seq, native)
            res.pop("alignment")
            out.update(res)
        if if_aar is not None and loop in if_aar and "aar" in out:
            out["if_aar"] = float(if_aar[loop])
            out["delta"] = if_aar_delta(out["aar"], out["if_aar"])
        per_loop[loop] = out

    detection = None
    if prediction is not None:
        gt = CdrPrediction.from_annotation(cdrs, reference.sequences())
        detection = detection_metrics(prediction, gt)
        flags.extend(detection["flags"])

    geometry: dict = {}
    if pair is not None:
        geometry.update({k: v for k, v in clash_counts(pair).items()})
        try:
            geometry["jsd_bb"] = jsd_backbone(pair)
        except InsufficientBackbone as exc:
            flags.append(f"jsd_bb:{exc}")
    return DesignResult(reference.id, per_loop, detection, geometry, flags, pair)


def _mean(values) -> Optional[float]:
    vals = [float(v) for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None


@dataclass
class DesignReport:
    per_loop: dict[str, dict]
    detection: dict
    sequence: dict
    residue: dict
    geometry: dict
    n_complexes: int
    flags: dict[str, list[str]]

    def to_dict(self) -> dict:
        return {"n_complexes": self.n_complexes, "per_loop": self.per_loop, "detection": self.detection,
                "sequence": self.sequence, "residue": self.residue, "geometry": self.geometry,
                "flags": self.flags}


def aggregate_design(results: Sequence[DesignResult]) -> DesignReport:
    """Mean of every metric over the complexes that report it; JSD also pooled across complexes."""
    results = sorted(results, key=lambda r: r.structure_id)
    per_loop = {}
    for loop in CDR_LOOPS:
        rows = [r.per_loop[loop] for r in results if loop in r.per_loop]
        if rows:
            per_loop[loop] = {k: _mean(row.get(k) for row in rows) for k in LOOP_FIELDS}
            per_loop[loop]["n"] = len(rows)

    def over_loops(keys):
        out = {}
        for k in keys:
            out[k] = _mean(r.per_loop[lp].get(k) for r in results for lp in r.per_loop)
        return out

    dets = [r.detection for r in results if r.detection is not None]
    detection = {k: _mean(d[k] for d in dets) for k in DETECTION_FIELDS} if dets else {}
    geometry = {k: _mean(r.geometry.get(k) for r in results) for k in GLOBAL_FIELDS}
    pairs = [r.pair for r in results if r.pair is not None and "jsd_bb" in r.geometry]
    geometry["jsd_bb_pooled"] = pooled_jsd_backbone(pairs) if pairs else None
    h3 = per_loop.get("H3", {})
    geometry["loop_rmsd"] = h3.get("rmsd")
    geometry["loop_aar"] = h3.get("aar")
    return DesignReport(
        per_loop=per_loop,
        detection=detection,
        sequence=over_loops(("emr", "edit_sim", "lcs_norm", "length_match")),
        residue=over_loops(("pos_acc", "precision", "recall", "f1", "blosum62_mean")),
        geometry=geometry,
        n_complexes=len(results),
        flags={r.structure_id: r.flags for r in results if r.flags},
    )


def _fmt(v, pct=False, width=9) -> str:
    if v is None:
        return "-".rjust(width)
    return f"{v * 100:.2f}".rjust(width) if pct else f"{v:.3f}".rjust(width)


def _table(title: str, header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
    line = "  ".join(h.rjust(w) for h, w in zip(header, widths))
    out = [title, line, "-" * len(line)]
    out += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(out)


def format_geometry_table(report: DesignReport) -> str:
    """Per-CDR RMSD, H3 loop RMSD, clash fractions and backbone JSD."""
    g = report.geometry
    header = [*CDR_LOOPS, "Loop-RMSD", "Clash_in", "Clash_out", "JSD_bb"]
    row = [_fmt(report.per_loop.get(lp, {}).get("rmsd")) for lp in CDR_LOOPS]
    row += [_fmt(g.get("loop_rmsd")), _fmt(g.get("clash_in")), _fmt(g.get("clash_out")), _fmt(g.get("jsd_bb"))]
    return _table("Geometry (RMSD in A; clash fractions)", header, [row])


def format_consistency_table(report: DesignReport) -> str:
    """AAR, IF-AAR and the signed delta per loop, in percent."""
    rows = []
    for lp in CDR_LOOPS:
        d = report.per_loop.get(lp)
        if d:
            rows.append([lp, _fmt(d.get("aar"), True), _fmt(d.get("if_aar"), True), _fmt(d.get("delta"), True)])
    return _table("Consistency (%)", ["CDR", "AAR", "IF-AAR", "Delta"], rows)


def format_cdr_metrics_table(report: DesignReport) -> str:
    """Detection, sequence-level and residue-level summaries (percent; BLOSUM62 raw mean)."""
    d, s, r = report.detection, report.sequence, report.residue
    header = ["Recall", "Precision", "SetMatch", "EMR", "EditSim", "LCS", "LenMatch",
              "PosAcc", "Prec", "Rec", "F1", "BLOSUM62"]
    row = [_fmt(d.get(k), True) for k in DETECTION_FIELDS]
    row += [_fmt(s.get(k), True) for k in ("emr", "edit_sim", "lcs_norm", "length_match")]
    row += [_fmt(r.get(k), True) for k in ("pos_acc", "precision", "recall", "f1")]
    row += [_fmt(r.get("blosum62_mean"))]
    return _table("CDR metrics (%)", header, [row])


def format_per_cdr_table(report: DesignReport) -> str:
    """EMR, position accuracy and edit similarity for each loop (percent)."""
    header, row = [], []
    for lp in CDR_LOOPS:
        d = report.per_loop.get(lp, {})
        for k, name in (("emr", "EMR"), ("pos_acc", "Pos"), ("edit_sim", "Edit")):
            header.append(f"{lp}-{name}")
            row.append(_fmt(d.get(k), True))
    return _table("Per-CDR (%)", header, [row])


def format_design_report(report: DesignReport) -> str:
    parts = [format_geometry_table(report), format_consistency_table(report),
             format_cdr_metrics_table(report), format_per_cdr_table(report),
             f"complexes={report.n_complexes}"]
    return "\n\n".join(parts) + "\n"
