"""Stage I alignment records: per-chain schemas and their caption renderings."""

from __future__ import annotations

import re
from typing import Optional

from ..labels.labelset import LabelSet
from ..structure.model import Complex
from . import schemas as S
from .base import TaskInstance, header

PROMPTS = {
    S.AS_B1: "Return the schema for this structure in JSON format.",
    S.AS_B2: "Return the compact chain-profile schema for this structure in JSON format.",
    S.AC_B1: "Return the alignment caption for this structure.",
    S.AC_B2: "Return the compact alignment caption for this structure.",
}

CLASS_WORD = {"H": "helix", "E": "strand", "C": "coil"}
_WORD_CLASS = {v: k for k, v in CLASS_WORD.items()}


def _profile(summary: dict) -> dict:
    return {k: v for k, v in summary.items() if k != "chain_id"}


def schema_b1(cx: Complex, labels: LabelSet) -> dict:
    return {
        "task_type": S.AS_B1,
        "global": {"num_chains": len(cx.chains)},
        "chains": [labels.chain_summaries[c] for c in cx.chain_ids],
    }


def schema_b2(cx: Complex, labels: LabelSet) -> dict:
    return {
        "task_type": S.AS_B2,
        "num_chains": len(cx.chains),
        "chain_profile": {c: _profile(labels.chain_summaries[c]) for c in cx.chain_ids},
    }


# -- caption phrases ---------------------------------------------------------------

def _length_phrase(label: str) -> str:
    return "more than 800 residues long" if label == ">800" else f"about {label} residues long"


def _run_phrase(label: str) -> str:
    if label == ">30":
        return "longer than 30 residues"
    if label == "0":
        return "0 residues"
    return f"about {label} residues"


def _segment_phrase(label: str, cls: str) -> str:
    word = CLASS_WORD[cls]
    if label == ">5":
        return f"more than 5 {word} segments"
    if label == "1":
        return f"1 {word} segment"
    return f"{label} {word} segments"


def _chain_body(rec: dict) -> str:
    frac = rec["secondary_structure_fraction_bins"]
    runs = rec["secondary_structure_longest_run_bins"]
    segs = rec["secondary_structure_segment_count_bins"]
    return (
        f"Its secondary structure is {CLASS_WORD[rec['major_secondary_structure']]}-dominant, "
        f"with roughly {frac['H']}% helix, {frac['E']}% strand and {frac['C']}% coil. "
        f"The longest helix stretch is {_run_phrase(runs['H'])}, "
        f"while the longest strand stretch is {_run_phrase(runs['E'])} "
        f"and the longest coil stretch is {_run_phrase(runs['C'])}. "
        f"It contains {_segment_phrase(segs['H'], 'H')} and {_segment_phrase(segs['E'], 'E')}."
    )


def caption_b1(cx: Complex, labels: LabelSet) -> str:
    """Multi-line caption: one assembly line, then one paragraph per chain."""
    recs = [labels.chain_summaries[c] for c in cx.chain_ids]
    if len(recs) == 1:
        rec = recs[0]
        return (f"This structure has a single chain (Chain {rec['chain_id']}), "
                f"{_length_phrase(rec['length_bin'])}. " + _chain_body(rec))
    lines = [f"This structure has {len(recs)} chains (Chains {', '.join(cx.chain_ids)})."]
    for rec in recs:
        lines.append(f"Chain {rec['chain_id']} is {_length_phrase(rec['length_bin'])}. " + _chain_body(rec))
    return "\n".join(lines)


def caption_b2(cx: Complex, labels: LabelSet) -> str:
    """Compact caption: an assembly line plus one slot-filled line per chain."""
    lines = [f"Assembly: {len(cx.chains)} chain(s) [{', '.join(cx.chain_ids)}]."]
    for c in cx.chain_ids:
        rec = labels.chain_summaries[c]
        f, r, s = (rec["secondary_structure_fraction_bins"], rec["secondary_structure_longest_run_bins"],
                   rec["secondary_structure_segment_count_bins"])
        lines.append(
            f"Chain {c}: length {rec['length_bin']}; major {rec['major_secondary_structure']}; "
            f"fractions H {f['H']}, E {f['E']}, C {f['C']}; "
            f"longest runs H {r['H']}, E {r['E']}, C {r['C']}; "
            f"segments H {s['H']}, E {s['E']}."
        )
    return "\n".join(lines)


# -- caption parsing (for grading) ----------------------------------------------------


def _unrun(text: str) -> str:
    if text == "longer than 30 residues":
        return ">30"
    m = re.fullmatch(r"(?:about )?(\S+) residues", text)
    return m.group(1) if m else text


def _unsegment(text: str) -> str:
    m = re.fullmatch(r"(more than 5|\S+) \w+ segments?", text)
    if not m:
        return text
    return ">5" if m.group(1) == "more than 5" else m.group(1)


_B1_BODY = re.compile(
    r"Its secondary structure is (?P<major>\w+)-dominant, with roughly (?P<fh>\S+)% helix, "
    r"(?P<fe>\S+)% strand and (?P<fc>\S+)% coil\. The longest helix stretch is (?P<rh>.+?), "
    r"while the longest strand stretch is (?P<re>.+?) and the longest coil stretch is (?P<rc>.+?)\. "
    r"It contains (?P<sh>.+? helix segments?) and (?P<se>.+? strand segments?)\."
)
_B1_SINGLE = re.compile(r"This structure has a single chain \(Chain (?P<cid>[^)]+)\), (?P<len>.+?) residues long\.")
_B1_MULTI = re.compile(r"This structure has (?P<n>\d+) chains \(Chains (?P<ids>[^)]*)\)\.")
_B1_CHAIN = re.compile(r"Chain (?P<cid>\S+) is (?P<len>.+?) residues long\.")


def _unlength(text: str) -> str:
    if text == "more than 800":
        return ">800"
    return text[len("about "):] if text.startswith("about ") else text


def _body_fields(m: re.Match) -> dict:
    return {
        "secondary_structure_fraction_bins": {"H": m["fh"], "E": m["fe"], "C": m["fc"]},
        "major_secondary_structure": _WORD_CLASS.get(m["major"], m["major"]),
        "secondary_structure_longest_run_bins": {"H": _unrun(m["rh"]), "E": _unrun(m["re"]), "C": _unrun(m["rc"])},
        "secondary_structure_segment_count_bins": {"H": _unsegment(m["sh"]), "E": _unsegment(m["se"])},
    }


def parse_caption_b1(text: str) -> Optional[dict]:
    """Recover the AS-B1 style schema from a B1 caption; ``None`` if the header is unreadable.

    Chains whose sentence cannot be parsed are returned with only the fields
    that could be read, so field-level grading still gives partial credit.
    """
    text = " ".join(text.split())
    single = _B1_SINGLE.search(text)
    chains = []
    if single:
        rec = {"chain_id": single["cid"], "length_bin": _unlength(single["len"])}
        body = _B1_BODY.search(text, single.end())
        if body:
            rec.update(_body_fields(body))
        return {"global": {"num_chains": 1}, "chains": [rec]}
    multi = _B1_MULTI.search(text)
    if not multi:
        return None
    starts = list(_B1_CHAIN.finditer(text, multi.end()))
    for k, m in enumerate(starts):
        end = starts[k + 1].start() if k + 1 < len(starts) else len(text)
        rec = {"chain_id": m["cid"], "length_bin": _unlength(m["len"])}
        body = _B1_BODY.search(text[:end], m.end())
        if body:
            rec.update(_body_fields(body))
        chains.append(rec)
    return {"global": {"num_chains": int(multi["n"])}, "chains": chains}


_B2_HEAD = re.compile(r"Assembly: (?P<n>\d+) chain\(s\) \[(?P<ids>[^\]]*)\]\.")
_B2_CHAIN = re.compile(
    r"Chain (?P<cid>\S+): length (?P<len>\S+); major (?P<major>\S+); "
    r"fractions H (?P<fh>\S+), E (?P<fe>\S+), C (?P<fc>\S+); "
    r"longest runs H (?P<rh>\S+), E (?P<re>\S+), C (?P<rc>\S+); "
    r"segments H (?P<sh>\S+), E (?P<se>[^\s.]+)\."
)


def parse_caption_b2(text: str) -> Optional[dict]:
    text = " ".join(text.split())
    head = _B2_HEAD.search(text)
    if not head:
        return None
    chains = []
    for m in _B2_CHAIN.finditer(text, head.end()):
        chains.append({
            "chain_id": m["cid"], "length_bin": m["len"],
            "secondary_structure_fraction_bins": {"H": m["fh"], "E": m["fe"], "C": m["fc"]},
            "major_secondary_structure": m["major"],
            "secondary_structure_longest_run_bins": {"H": m["rh"], "E": m["re"], "C": m["rc"]},
            "secondary_structure_segment_count_bins": {"H": m["sh"], "E": m["se"]},
        })
    return {"global": {"num_chains": int(head["n"])}, "chains": chains}


def normalized_schema(task_type: str, payload) -> Optional[dict]:
    """Any Stage I payload as ``{"global": {"num_chains"}, "chains": [records]}``."""
    if task_type == S.AS_B1:
        return {"global": payload["global"], "chains": payload["chains"]}
    if task_type == S.AS_B2:
        return {"global": {"num_chains": payload["num_chains"]},
                "chains": [{"chain_id": c, **rec} for c, rec in payload["chain_profile"].items()]}
    if task_type == S.AC_B1:
        return parse_caption_b1(payload)
    if task_type == S.AC_B2:
        return parse_caption_b2(payload)
    raise KeyError(task_type)


_BUILDERS = {S.AS_B1: schema_b1, S.AS_B2: schema_b2, S.AC_B1: caption_b1, S.AC_B2: caption_b2}


def gen_stage1(cx: Complex, labels: LabelSet, variant: str, seed: int, ordinal: int = 0) -> TaskInstance:
    """Stage I record for ``variant`` (a task id or one of AS-B1, AS-B2, AC-B1, AC-B2)."""
    task = S.ABBREVIATIONS.get(variant, variant)
    if task not in _BUILDERS:
        raise ValueError(f"not a Stage I variant: {variant!r}")
    prompt = {"text": header(task) + PROMPTS[task], "query": {}}
    return TaskInstance(task, cx.id, int(seed), prompt, _BUILDERS[task](cx, labels), ordinal)
