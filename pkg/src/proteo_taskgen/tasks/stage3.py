"""Stage III antibody CDR-redesign records with a structured, label-derived thinking block."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..constants import RESIDUE_CHARGE
from ..errors import MissingAnnotation
from ..labels import interactions as ix
from ..labels.labelset import LabelSet
from ..labels.sasa import compute_sasa, relative_accessibility, rsa_bin
from ..structure.cdr import apply_cdr_mask
from ..structure.model import CdrAnnotation, Complex, ResidueKey
from . import schemas as S
from .base import TaskInstance, header

RSA_WORDS = {"B": "Buried", "M": "Mid", "E": "Exposed", "NA": "NA"}
INTERACTION_TYPES = ("Van der Waals", "Hydrogen bond", "Salt bridge")


def loop_tag(loop: str) -> str:
    """Tag name for a loop, e.g. H1 -> HCDR1."""
    return f"{loop[0]}CDR{loop[1]}"


def _split_chains(cx: Complex, cdrs: CdrAnnotation) -> tuple[list[str], list[str]]:
    if not len(cdrs):
        raise MissingAnnotation(f"{cx.id}: no CDR loops annotated")
    ab = cdrs.chains()
    ag = [c for c in cx.chain_ids if c not in ab]
    if not ag:
        raise MissingAnnotation(f"{cx.id}: no antigen chain outside the CDR-bearing chains")
    return ab, ag


def _render_prompt(hotspots: Sequence[ResidueKey]) -> str:
    points = ", ".join(f"[{c},{p}]" for c, p in hotspots) if hotspots else "none"
    return (header(S.REDESIGN)
            + "You are redesigning masked CDR regions of an antibody to improve binding to the antigen.\n"
            + f"Design points (antigen hotspots): {points}.\n"
            + "Output JSON with keys: task, thinking, answer.")


def gen_stage3(cx: Complex, labels: LabelSet, cdrs: CdrAnnotation, hotspots: Sequence[ResidueKey],
               seed: int, ordinal: int = 0) -> TaskInstance:
    """Redesign record conditioned on antigen ``hotspots``.

    Key residues (the ``filled_positions``) are CDR residues with at least one
    heavy-atom contact to the antigen; every other CDR position stays ``X``.
    Buried area and exposure treat all antibody chains as one body and all
    antigen chains as the other.

    Raises
    ------
    MissingAnnotation
        No CDR loops, no antigen chain, or a hotspot outside the antigen.
    """
    ab, ag = _split_chains(cx, cdrs)
    hotspots = [(str(c), int(p)) for c, p in hotspots]
    for c, p in hotspots:
        if c not in ag or not cx.has_residue(c, p):
            raise MissingAnnotation(f"{cx.id}: hotspot ({c},{p}) is not an antigen residue")
    rules = labels.rules
    table = cx.atoms
    ab_idx = {cx.chain_ids.index(c) for c in ab}
    ag_idx = {cx.chain_ids.index(c) for c in ag}
    contacts = ix.cross_chain_atom_contacts(cx, rules.interface_cutoff)
    ca, cb = table.chain_index[contacts.a], table.chain_index[contacts.b]
    across = np.array([(x in ab_idx) != (y in ab_idx) for x, y in zip(ca, cb)], dtype=bool)
    sel = ix.AtomContacts(contacts.a[across], contacts.b[across], contacts.distance[across], contacts.cutoff)
    pair_info = ix.residue_pair_interactions(cx, sel, rules.hbond_cutoff, rules.salt_bridge_cutoff)

    group = {c: ("antibody" if c in ab else "antigen") for c in cx.chain_ids}
    sasa = compute_sasa(cx, group, probe=rules.probe_radius, n_points=rules.sphere_points)
    rel_unbound = relative_accessibility(cx, sasa.unbound)

    # residue-level partners across the antibody/antigen boundary
    partners: dict[int, dict[int, dict]] = {}
    for (ra, rb), info in pair_info.items():
        partners.setdefault(ra, {})[rb] = info
        partners.setdefault(rb, {})[ra] = info

    design_points, where, shape, chemistry, binder = [], [], [], [], []
    for c, p in hotspots:
        k = cx.residue_ordinal(c, p)
        ref = {"ag_chain": c, "ag_pos": p}
        mine = partners.get(k, {})
        count = int(sum(info["contacts"] for info in mine.values()))
        design_points.append(dict(ref))
        where.append({**ref, "atomic_contact_count": count,
                      "delta_sasa_A2": round(float(sasa.delta(k, "antibody")), 2), "is_hotspot": count > 0})
        shape.append({**ref, "rsa_label": RSA_WORDS[rsa_bin(rel_unbound[k], rules.rsa_buried_below,
                                                            rules.rsa_exposed_above)]})
        kinds = []
        if mine:
            kinds.append(INTERACTION_TYPES[0])
        if any(info["hbond"] for info in mine.values()):
            kinds.append(INTERACTION_TYPES[1])
        if any(info["salt_bridge"] for info in mine.values()):
            kinds.append(INTERACTION_TYPES[2])
        aa = cx.residues[k].aa
        chemistry.append({**ref, "ag_res": aa, "ag_charge": RESIDUE_CHARGE.get(aa, 0), "interaction_types": kinds})
        contacts_out = []
        for r in sorted(mine):
            res = cx.residues[r]
            loop = cdrs.loop_of(res.chain_id, res.pos)
            if loop is not None:
                contacts_out.append({"ab_chain": res.chain_id, "ab_pos": res.pos, "cdr": loop})
        binder.append({**ref, "binder_contacts": contacts_out})

    sequences = {}
    for loop, (chain, start, end) in cdrs.ordered():
        seq, filled = [], []
        for n, pos in enumerate(range(start, end + 1), start=1):
            k = cx.residue_ordinal(chain, pos)
            touches_ag = any(cx.residue_chain_index[r] in ag_idx for r in partners.get(k, {}))
            if touches_ag:
                aa = cx.residues[k].aa
                seq.append(aa)
                filled.append({"pos": n, "aa": aa})
            else:
                seq.append("X")
        tag = loop_tag(loop)
        sequences[loop] = {"len": end - start + 1, "seq": f"<{tag}>{''.join(seq)}</{tag}>",
                           "filled_positions": filled}

    masked = apply_cdr_mask(cx, cdrs)
    query = {
        "antibody_chains": ab,
        "antigen_chains": ag,
        "design_points": design_points,
        "cdr_loops": {n: {"chain": c, "start": s, "end": e} for n, (c, s, e) in cdrs.ordered()},
        "masked_sequences": {c: masked.chain(c).sequence for c in ab},
    }
    target = {
        "task": S.REDESIGN,
        "thinking": {
            "design_points": design_points,
            "hotspots_where": where,
            "shape_context": shape,
            "chemistry_logic": chemistry,
            "binder_solution": binder,
        },
        "answer": {
            "cdrs_present": [n for n, _ in cdrs.ordered()],
            "cdr_sequences": sequences,
        },
    }
    return TaskInstance(S.REDESIGN, cx.id, int(seed), {"text": _render_prompt(hotspots), "query": query},
                        target, ordinal)
