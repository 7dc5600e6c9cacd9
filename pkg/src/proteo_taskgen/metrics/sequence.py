"""Sequence-side design metrics: CDR detection, string similarity, aligned residue agreement and recovery."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from rapidfuzz.distance import LCSseq, Levenshtein

from ..constants import AA20, BLOSUM62, CDR_LOOPS
from ..errors import EmptyGroundTruth, EmptyRegion, MetricError, ParseError

GAP_OPEN = -10
GAP_EXTEND = -1
_NEG = -math.inf
BLOSUM62_KEYS = frozenset(a for a, _ in BLOSUM62)


@dataclass(frozen=True)
class LoopPrediction:
    """One loop: within-chain residue indices and, optionally, its sequence."""

    indices: frozenset
    sequence: Optional[str] = None
    chain: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "indices", frozenset(int(i) for i in self.indices))
        if self.sequence is not None and self.indices and len(self.sequence) != len(self.indices):
            raise ValueError(f"sequence length {len(self.sequence)} != {len(self.indices)} indices")

    def keys(self) -> set:
        return {(self.chain, i) for i in self.indices}


@dataclass(frozen=True)
class CdrPrediction:
    loops: Mapping[str, LoopPrediction] = field(default_factory=dict)

    def __post_init__(self):
        bad = [n for n in self.loops if n not in CDR_LOOPS]
        if bad:
            raise ValueError(f"unknown CDR loops {bad}")

    def get(self, loop: str) -> LoopPrediction:
        return self.loops.get(loop, LoopPrediction(frozenset()))

    def to_dict(self) -> dict:
        out = {}
        for n in CDR_LOOPS:
            if n in self.loops:
                lp = self.loops[n]
                out[n] = {"chain": lp.chain, "indices": sorted(lp.indices), "sequence": lp.sequence}
        return out

    @classmethod
    def from_dict(cls, doc: Mapping) -> "CdrPrediction":
        loops = {}
        for name, item in doc.items():
            if not isinstance(item, Mapping):
                raise ParseError(f"loop {name!r}: expected an object")
            if "indices" in item:
                idx = item["indices"]
            elif "start" in item and "end" in item:
                idx = range(int(item["start"]), int(item["end"]) + 1)
            else:
                idx = ()
            loops[name] = LoopPrediction(frozenset(idx), item.get("sequence"), item.get("chain"))
        return cls(loops)

    @classmethod
    def from_json(cls, source: Union[str, Path]) -> "CdrPrediction":
        try:
            doc = json.loads(Path(source).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"{source}: {exc}") from exc
        return cls.from_dict(doc.get("loops", doc))

    @classmethod
    def from_annotation(cls, cdrs, sequences: Optional[Mapping[str, str]] = None) -> "CdrPrediction":
        """Ground truth from a :class:`CdrAnnotation`; ``sequences`` maps chain id to full chain sequence
        indexed by position - 1 (optional)."""
        loops = {}
        for name, (chain, start, end) in cdrs.ordered():
            seq = sequences[chain][start - 1:end] if sequences and chain in sequences else None
            loops[name] = LoopPrediction(frozenset(range(start, end + 1)), seq, chain)
        return cls(loops)


def detection_metrics(pred: CdrPrediction, gt: CdrPrediction) -> dict:
    """Recall, precision and strict set match per loop, averaged over ground-truth loops.

    A loop absent from ``pred`` counts as an empty prediction; its precision
    is undefined and reported as 0 with a ``precision_undefined`` flag. Loops
    predicted but absent from ``gt`` are ignored. If both sides name a chain
    and the chains differ, the sets do not overlap.

    Raises
    ------
    EmptyGroundTruth
        ``gt`` has no loops or a loop with no residues.
    """
    if not gt.loops:
        raise EmptyGroundTruth("ground truth has no CDR loops")
    per_loop, flags = {}, []
    for name in [n for n in CDR_LOOPS if n in gt.loops]:
        g = gt.loops[name]
        if not g.indices:
            raise EmptyGroundTruth(f"ground-truth loop {name} is empty")
        p = pred.get(name)
        if p.chain is not None and g.chain is not None:
            gs, ps = g.keys(), p.keys()
        else:
            gs, ps = set(g.indices), set(p.indices)
        hit = len(gs & ps)
        if ps:
            precision = hit / len(ps)
        else:
            precision = 0.0
            flags.append(f"precision_undefined:{name}")
        per_loop[name] = {"recall": hit / len(gs), "precision": precision, "set_match": float(gs == ps)}
    n = len(per_loop)
    out = {k: sum(v[k] for v in per_loop.values()) / n for k in ("recall", "precision", "set_match")}
    out["per_loop"] = per_loop
    out["flags"] = flags
    return out


def sequence_metrics(pred: str, gt: str) -> dict:
    """Exact match, Levenshtein similarity, LCS over ground-truth length and length agreement."""
    if not gt:
        raise MetricError("ground-truth sequence is empty")
    d = Levenshtein.distance(pred, gt)
    return {
        "emr": float(pred == gt),
        "edit_sim": 1.0 - d / max(len(pred), len(gt)),
        "lcs_norm": LCSseq.similarity(pred, gt) / len(gt),
        "length_match": float(len(pred) == len(gt)),
    }


def blosum(a: str, b: str) -> int:
    a = a.upper() if a.upper() in BLOSUM62_KEYS else "X"
    b = b.upper() if b.upper() in BLOSUM62_KEYS else "X"
    return BLOSUM62[a, b]


def global_align(a: str, b: str, gap_open: int = GAP_OPEN, gap_extend: int = GAP_EXTEND) -> tuple[str, str, float]:
    """Affine-gap global alignment (Gotoh) scored with BLOSUM62.

    A gap of length L scores ``gap_open + (L - 1) * gap_extend``. Ties in the
    traceback prefer a match column, then a gap in ``b`` (consume ``a``, "up"),
    then a gap in ``a`` ("left"); the same order breaks ties between
    predecessor states.

    Returns
    -------
    (aligned_a, aligned_b, score) with ``-`` for gaps.
    """
    n, m = len(a), len(b)
    M = [[_NEG] * (m + 1) for _ in range(n + 1)]
    X = [[_NEG] * (m + 1) for _ in range(n + 1)]  # a[i-1] against a gap
    Y = [[_NEG] * (m + 1) for _ in range(n + 1)]  # gap against b[j-1]
    M[0][0] = 0.0
    for i in range(1, n + 1):
        X[i][0] = gap_open + (i - 1) * gap_extend
    for j in range(1, m + 1):
        Y[0][j] = gap_open + (j - 1) * gap_extend
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            s = blosum(a[i - 1], b[j - 1])
            M[i][j] = s + max(M[i - 1][j - 1], X[i - 1][j - 1], Y[i - 1][j - 1])
            X[i][j] = max(M[i - 1][j] + gap_open, X[i - 1][j] + gap_extend, Y[i - 1][j] + gap_open)
            Y[i][j] = max(M[i][j - 1] + gap_open, X[i][j - 1] + gap_open, Y[i][j - 1] + gap_extend)

    def pick(vals):
        best = max(vals)
        return vals.index(best)  # first maximum: M, then X, then Y

    i, j = n, m
    state = pick([M[i][j], X[i][j], Y[i][j]])
    score = (M, X, Y)[state][i][j]
    ra, rb = [], []
    while i > 0 or j > 0:
        if state == 0:
            prev = pick([M[i - 1][j - 1], X[i - 1][j - 1], Y[i - 1][j - 1]])
            ra.append(a[i - 1])
            rb.append(b[j - 1])
            i, j = i - 1, j - 1
        elif state == 1:
            prev = pick([M[i - 1][j] + gap_open, X[i - 1][j] + gap_extend, Y[i - 1][j] + gap_open])
            ra.append(a[i - 1])
            rb.append("-")
            i -= 1
        else:
            prev = pick([M[i][j - 1] + gap_open, X[i][j - 1] + gap_open, Y[i][j - 1] + gap_extend])
            ra.append("-")
            rb.append(b[j - 1])
            j -= 1
        state = prev
    return "".join(reversed(ra)), "".join(reversed(rb)), float(score)


def residue_metrics(pred: str, gt: str) -> dict:
    """Identity and substitution scores over a global alignment of ``pred`` to ``gt``.

    ``pos_acc`` is identical columns over all alignment columns; precision and
    recall divide the identical columns by ``len(pred)`` and ``len(gt)``.
    ``blosum62_mean`` averages BLOSUM62 over columns without a gap and is
    None when there are no such columns.
    """
    if not gt:
        raise MetricError("ground-truth sequence is empty")
    pred, gt = pred.upper(), gt.upper()
    al_p, al_g, _ = global_align(pred, gt)
    cols = [(x, y) for x, y in zip(al_p, al_g)]
    paired = [(x, y) for x, y in cols if x != "-" and y != "-"]
    same = sum(1 for x, y in paired if x == y)
    precision = same / len(pred) if pred else 0.0
    recall = same / len(gt)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {
        "pos_acc": same / len(cols),
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "blosum62_mean": sum(blosum(x, y) for x, y in paired) / len(paired) if paired else None,
        "alignment": [al_p, al_g],
    }


def _lookup(seq, key):
    try:
        return seq[key]
    except (KeyError, IndexError, TypeError):
        raise MetricError(f"region key {key!r} outside the sequence domain") from None


def aar(pred: Union[Mapping, Sequence[str]], gt: Union[Mapping, Sequence[str]], region: Iterable) -> float:
    """Fraction of ``region`` positions where ``pred`` matches ``gt``.

    ``pred`` and ``gt`` are mappings (e.g. residue key to one-letter code) or
    strings indexed by position. Positions whose ground truth is not one of
    the 20 standard residues are left out of the denominator.

    Raises
    ------
    EmptyRegion
        No scorable position in ``region``.
    """
    hits = total = 0
    for key in region:
        g = str(_lookup(gt, key)).upper()
        p = str(_lookup(pred, key)).upper()
        if g not in AA20:
            continue
        total += 1
        hits += p == g
    if total == 0:
        raise EmptyRegion("no scorable residue in the region")
    return hits / total


def if_aar_delta(aar_value: float, if_aar: float, scale: str = "fraction") -> float:
    """Signed consistency gap ``if_aar - aar``; ``scale="percent"`` takes both inputs in [0, 100]."""
    top = {"fraction": 1.0, "percent": 100.0}.get(scale)
    if top is None:
        raise ValueError(f"unknown scale {scale!r}")
    for v in (aar_value, if_aar):
        if not 0.0 <= v <= top:
            raise ValueError(f"{v} outside [0, {top:g}]")
    return float(if_aar) - float(aar_value)
