"""Bundle of every structure-derived label a task generator needs."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from functools import cached_property
from typing import Optional

import numpy as np

from ..structure.model import Complex, ResidueKey
from . import interactions as ix
from .dssp import assign_ss3
from .pairs import CONTACT_CUTOFF, SHORT_RANGE_MAX_SEP, PairGeometry, contact_pairs, dist_bin, reference_array
from .sasa import N_POINTS, PROBE_RADIUS, compute_sasa, relative_accessibility, rsa_bin
from .summary import chain_summary_from_ss

LABELSET_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class LabelRules:
    """Geometric thresholds; every field can be overridden from a run config."""

    contact_cutoff: float = CONTACT_CUTOFF
    short_range_max_sep: int = SHORT_RANGE_MAX_SEP
    interface_cutoff: float = ix.INTERFACE_CUTOFF
    salt_bridge_cutoff: float = ix.SALT_BRIDGE_CUTOFF
    hbond_cutoff: float = ix.HBOND_CUTOFF
    chain_pair_min_contacts: int = ix.CHAIN_PAIR_MIN_CONTACTS
    rsa_buried_below: float = 0.10
    rsa_exposed_above: float = 0.40
    probe_radius: float = PROBE_RADIUS
    sphere_points: int = N_POINTS

    @classmethod
    def from_dict(cls, doc: Optional[dict]) -> "LabelRules":
        doc = doc or {}
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(doc) - set(known)
        if unknown:
            raise ValueError(f"unknown label rule(s): {sorted(unknown)}")
        base = cls()
        kw = {k: type(getattr(base, k))(v) for k, v in doc.items()}
        return cls(**kw)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class LabelSet:
    """Per-structure labels, indexed in the complex's global residue order."""

    complex: Complex
    rules: LabelRules
    ss3: tuple[str, ...]
    rsa_bin: tuple[str, ...]
    rsa_rel: tuple[Optional[float], ...]
    cbeta: np.ndarray                    # (n, 3), NaN when missing
    asa_bound: np.ndarray
    asa_unbound: np.ndarray
    buried: dict[str, np.ndarray]        # partner chain -> per-residue buried area
    contact_counts: np.ndarray           # (n, n_chains) atomic contacts
    chain_pair_counts: dict[tuple[str, str], int]
    chain_summaries: dict[str, dict]
    _pairs: np.ndarray = field(repr=False)

    # -- lookups ---------------------------------------------------------------
    def index(self, key: ResidueKey) -> int:
        return self.complex.residue_ordinal(*key)

    def ss3_of(self, key: ResidueKey) -> str:
        return self.ss3[self.index(key)]

    def rsa_of(self, key: ResidueKey) -> str:
        return self.rsa_bin[self.index(key)]

    def chain_slice(self, chain_id: str) -> slice:
        start = self.complex.residue_ordinal(chain_id, self.complex.chain(chain_id).residues[0].pos)
        return slice(start, start + len(self.complex.chain(chain_id)))

    def ss3_string(self, chain_id: str) -> list[str]:
        return list(self.ss3[self.chain_slice(chain_id)])

    def pair(self, i: ResidueKey, j: ResidueKey) -> PairGeometry:
        a, b = sorted([tuple(i), tuple(j)])
        ia, ib = self.index(a), self.index(b)
        if np.isnan(self.cbeta[ia, 0]) or np.isnan(self.cbeta[ib, 0]):
            from ..errors import MissingReferenceAtom
            raise MissingReferenceAtom(f"pair {a}-{b}: missing reference atom")
        d = float(np.linalg.norm(self.cbeta[ia] - self.cbeta[ib]))
        cls = "cross_chain" if a[0] != b[0] else ("short" if abs(a[1] - b[1]) <= self.rules.short_range_max_sep else "long")
        return PairGeometry(d, d < self.rules.contact_cutoff, cls, dist_bin(d, cls))

    @property
    def contact_pair_indices(self) -> np.ndarray:
        return self._pairs

    @cached_property
    def chain_pair_graph(self) -> tuple[list[tuple[str, str]], Optional[tuple[str, str]]]:
        return ix.chain_pair_graph(self.complex, self.rules.chain_pair_min_contacts, self.chain_pair_counts)

    def top_chain_pair(self) -> tuple[str, str]:
        return ix.top_chain_pair(self.complex, self.chain_pair_counts)

    def interface_records(self, pair: tuple[str, str]) -> list[ix.InterfaceRecord]:
        return ix.interface_records(self.complex, pair, self.contact_counts, self.buried)

    def rank(self, pair: tuple[str, str], k: int, mode: str) -> dict[str, list[int]]:
        return ix.rank_interface_residues(self.complex, pair, k, mode, self.contact_counts, self.buried)

    def salt_bridge_count(self, pair: tuple[str, str]) -> int:
        return len(ix.salt_bridge_pairs(self.complex, pair[0], pair[1], self.rules.salt_bridge_cutoff))

    def salt_bridge_bin(self, pair: tuple[str, str]) -> str:
        return ix.salt_bridge_bin_label(self.salt_bridge_count(pair))

    # -- export ----------------------------------------------------------------
    def to_json_dict(self) -> dict:
        cx = self.complex
        residues = []
        for k, res in enumerate(cx.residues):
            cb = None if np.isnan(self.cbeta[k, 0]) else [round(float(v), 3) for v in self.cbeta[k]]
            residues.append({
                "chain": res.chain_id, "pos": res.pos, "aa": res.aa,
                "ss3": self.ss3[k], "rsa_bin": self.rsa_bin[k],
                "asa_bound": round(float(self.asa_bound[k]), 3),
                "asa_unbound": round(float(self.asa_unbound[k]), 3),
                "cbeta": cb,
            })
        interfaces = []
        for (a, b), n in self.chain_pair_counts.items():
            recs = self.interface_records((a, b))
            if not recs:
                continue
            interfaces.append({
                "chain_i": a, "chain_j": b, "residue_pair_contacts": n,
                "residues": [{"chain": r.chain_id, "pos": r.pos, "atomic_contact_count": r.atomic_contact_count,
                              "delta_sasa": round(r.delta_sasa, 3)} for r in recs],
            })
        pairs, top = self.chain_pair_graph
        return {
            "schema_version": LABELSET_SCHEMA_VERSION,
            "structure_id": cx.id,
            "rules": self.rules.to_dict(),
            "residues": residues,
            "interfaces": interfaces,
            "chain_pairs": [{"chain_i": a, "chain_j": b} for a, b in pairs],
            "top_chain_pair": None if top is None else {"chain_i": top[0], "chain_j": top[1]},
            "chain_summaries": [self.chain_summaries[c] for c in cx.chain_ids],
        }


def compute_labels(cx: Complex, rules: Optional[LabelRules] = None) -> LabelSet:
    rules = rules or LabelRules()
    ss3 = assign_ss3(cx)
    sasa = compute_sasa(cx, probe=rules.probe_radius, n_points=rules.sphere_points)
    rel = relative_accessibility(cx, sasa.bound)
    bins = [rsa_bin(r, rules.rsa_buried_below, rules.rsa_exposed_above) for r in rel]
    refs = reference_array(cx)
    pairs = contact_pairs(cx, rules.contact_cutoff, refs)
    contacts = ix.cross_chain_atom_contacts(cx, rules.interface_cutoff)
    counts = ix.residue_contact_counts(cx, contacts)
    chain_counts = ix.chain_pair_contact_counts(cx, rules.contact_cutoff, pairs)
    summaries = {}
    start = 0
    for ch in cx.chains:
        summaries[ch.chain_id] = chain_summary_from_ss(ch.chain_id, ss3[start:start + len(ch)])
        start += len(ch)
    return LabelSet(
        complex=cx, rules=rules, ss3=tuple(ss3), rsa_bin=tuple(bins), rsa_rel=tuple(rel), cbeta=refs,
        asa_bound=sasa.bound, asa_unbound=sasa.unbound, buried=sasa.buried, contact_counts=counts,
        chain_pair_counts=chain_counts, chain_summaries=summaries, _pairs=pairs,
    )


def chain_summary(cx: Complex, chain: str, ss3: Optional[list[str]] = None) -> dict:
    """Schema record for ``chain``; computes secondary structure when not supplied."""
    cx.chain(chain)
    if ss3 is None:
        ss3 = assign_ss3(cx)
    start = cx.residue_ordinal(chain, cx.chain(chain).residues[0].pos)
    return chain_summary_from_ss(chain, ss3[start:start + len(cx.chain(chain))])
