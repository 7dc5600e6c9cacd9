"""Cross-chain interaction labels: atomic contacts, salt bridges, interface and hotspot ranks, chain-pair graph."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from ..constants import SALT_BRIDGE_ACIDIC, SALT_BRIDGE_BASIC
from ..errors import NoChainPairs, UnknownChain
from ..structure.model import Complex
from .pairs import CONTACT_CUTOFF, bin_label, contact_pairs

INTERFACE_CUTOFF = 5.0
SALT_BRIDGE_CUTOFF = 4.0
HBOND_CUTOFF = 3.5
CHAIN_PAIR_MIN_CONTACTS = 10

SALT_BRIDGE_BINS = ((1, 3, 6, 11, 21), ("0", "1-2", "3-5", "6-10", "11-20", ">20"))


@dataclass(frozen=True)
class AtomContacts:
    """Cross-chain heavy-atom pairs within a cutoff (atom indices into ``cx.atoms``)."""

    a: np.ndarray
    b: np.ndarray
    distance: np.ndarray
    cutoff: float


def cross_chain_atom_contacts(cx: Complex, cutoff: float = INTERFACE_CUTOFF) -> AtomContacts:
    """All inter-chain atom pairs with distance <= ``cutoff``; ``a`` is always the lower index."""
    table = cx.atoms
    if len(table) < 2 or len(cx.chains) < 2:
        empty = np.zeros(0, dtype=int)
        return AtomContacts(empty, empty, np.zeros(0), cutoff)
    pairs = cKDTree(table.coords).query_pairs(cutoff, output_type="ndarray")
    if len(pairs) == 0:
        empty = np.zeros(0, dtype=int)
        return AtomContacts(empty, empty, np.zeros(0), cutoff)
    pairs = pairs[table.chain_index[pairs[:, 0]] != table.chain_index[pairs[:, 1]]]
    pairs.sort(axis=1)
    pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    d = np.linalg.norm(table.coords[pairs[:, 0]] - table.coords[pairs[:, 1]], axis=1)
    keep = d <= cutoff
    return AtomContacts(pairs[keep, 0], pairs[keep, 1], d[keep], cutoff)


def residue_contact_counts(cx: Complex, contacts: AtomContacts) -> np.ndarray:
    """(n_residues, n_chains) count of atom contacts from each residue to each other chain."""
    table = cx.atoms
    counts = np.zeros((len(cx.residues), len(cx.chains)), dtype=np.int64)
    ra, rb = table.residue_index[contacts.a], table.residue_index[contacts.b]
    ca, cb = table.chain_index[contacts.a], table.chain_index[contacts.b]
    np.add.at(counts, (ra, cb), 1)
    np.add.at(counts, (rb, ca), 1)
    return counts


def _charged_atom_mask(cx: Complex, groups: dict[str, tuple[str, ...]]) -> np.ndarray:
    table = cx.atoms
    aa = np.array([r.aa for r in cx.residues], dtype=object)[table.residue_index]
    mask = np.zeros(len(table), dtype=bool)
    for code, names in groups.items():
        mask |= (aa == code) & np.isin(table.names, names)
    return mask


def salt_bridge_pairs(cx: Complex, chain_a: str, chain_b: str,
                      cutoff: float = SALT_BRIDGE_CUTOFF) -> list[tuple[int, int]]:
    """Residue pairs (basic, acidic), as global residue indices, forming a bridge across the two chains.

    A bridge is any side-chain N of K/R/H within ``cutoff`` Å (inclusive) of a
    carboxylate O of D/E; each residue pair counts once.
    """
    for c in (chain_a, chain_b):
        cx.chain(c)
    table = cx.atoms
    ids = cx.chain_ids
    ia, ib = ids.index(chain_a), ids.index(chain_b)
    basic = _charged_atom_mask(cx, SALT_BRIDGE_BASIC)
    acidic = _charged_atom_mask(cx, SALT_BRIDGE_ACIDIC)
    found: set[tuple[int, int]] = set()
    for cb_, ca_ in ((ia, ib), (ib, ia)):
        bsel = np.flatnonzero(basic & (table.chain_index == cb_))
        asel = np.flatnonzero(acidic & (table.chain_index == ca_))
        if len(bsel) == 0 or len(asel) == 0:
            continue
        hits = cKDTree(table.coords[asel]).query_ball_point(table.coords[bsel], cutoff)
        for k, lst in enumerate(hits):
            for h in lst:
                if np.linalg.norm(table.coords[bsel[k]] - table.coords[asel[h]]) <= cutoff:
                    found.add((int(table.residue_index[bsel[k]]), int(table.residue_index[asel[h]])))
    return sorted(found)


def salt_bridge_bin_label(count: int) -> str:
    edges, labels = SALT_BRIDGE_BINS
    return bin_label(count, edges, labels)


def salt_bridge_bin(cx: Complex, pair: tuple[str, str], cutoff: float = SALT_BRIDGE_CUTOFF) -> str:
    return salt_bridge_bin_label(len(salt_bridge_pairs(cx, pair[0], pair[1], cutoff)))


@dataclass(frozen=True)
class InterfaceRecord:
    chain_id: str
    pos: int
    atomic_contact_count: int
    delta_sasa: float


def interface_records(cx: Complex, pair: tuple[str, str], counts: np.ndarray,
                      buried: Optional[dict[str, np.ndarray]] = None) -> list[InterfaceRecord]:
    """Residues of either chain with at least one atom contact to the other chain."""
    ids = cx.chain_ids
    out = []
    for own, partner in ((pair[0], pair[1]), (pair[1], pair[0])):
        pi = ids.index(partner)
        for k, res in enumerate(cx.residues):
            if res.chain_id != own or counts[k, pi] == 0:
                continue
            delta = 0.0 if buried is None or partner not in buried else float(buried[partner][k])
            out.append(InterfaceRecord(own, res.pos, int(counts[k, pi]), delta))
    return out


def rank_interface_residues(cx: Complex, pair: tuple[str, str], k: int, mode: str = "interface",
                            counts: Optional[np.ndarray] = None,
                            buried: Optional[dict[str, np.ndarray]] = None) -> dict[str, list[int]]:
    """Top-k residue positions per chain.

    ``interface`` ranks by (contact count desc, position asc); ``hotspot`` by
    (contact count desc, buried area desc, position asc). Only residues with
    at least one cross-chain atom contact qualify.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if mode not in ("interface", "hotspot"):
        raise ValueError(f"unknown ranking mode {mode!r}")
    for c in pair:
        cx.chain(c)
    if counts is None:
        counts = residue_contact_counts(cx, cross_chain_atom_contacts(cx))
    if mode == "hotspot" and buried is None:
        from .sasa import compute_sasa
        buried = compute_sasa(cx).buried
    records = interface_records(cx, pair, counts, buried)
    out: dict[str, list[int]] = {pair[0]: [], pair[1]: []}
    for chain in pair:
        recs = [r for r in records if r.chain_id == chain]
        if mode == "interface":
            recs.sort(key=lambda r: (-r.atomic_contact_count, r.pos))
        else:
            recs.sort(key=lambda r: (-r.atomic_contact_count, -round(r.delta_sasa, 6), r.pos))
        out[chain] = [r.pos for r in recs[:k]]
    return out


def chain_pair_contact_counts(cx: Complex, cutoff: float = CONTACT_CUTOFF,
                              pairs: Optional[np.ndarray] = None) -> dict[tuple[str, str], int]:
    """Number of cross-chain residue pairs in reference-atom contact, keyed by sorted chain-id pair."""
    pairs = contact_pairs(cx, cutoff) if pairs is None else pairs
    chain_of = cx.residue_chain_index
    ids = cx.chain_ids
    out: dict[tuple[str, str], int] = {}
    for a, b in pairs:
        ca, cb = chain_of[a], chain_of[b]
        if ca == cb:
            continue
        key = tuple(sorted((ids[ca], ids[cb])))
        out[key] = out.get(key, 0) + 1
    return dict(sorted(out.items()))


def chain_pair_graph(cx: Complex, min_contacts: int = CHAIN_PAIR_MIN_CONTACTS,
                     counts: Optional[dict[tuple[str, str], int]] = None
                     ) -> tuple[list[tuple[str, str]], Optional[tuple[str, str]]]:
    """(interacting pairs, top pair); top is ``None`` when no chains touch at all."""
    counts = chain_pair_contact_counts(cx) if counts is None else counts
    interacting = [p for p, n in counts.items() if n >= min_contacts]
    touching = [(p, n) for p, n in counts.items() if n >= 1]
    top = None
    if touching:
        best = max(n for _, n in touching)
        top = min(p for p, n in touching if n == best)
    return interacting, top


def top_chain_pair(cx: Complex, counts: Optional[dict[tuple[str, str], int]] = None) -> tuple[str, str]:
    _, top = chain_pair_graph(cx, counts=counts)
    if top is None:
        raise NoChainPairs(f"{cx.id}: no pair of chains is in contact")
    return top


def residue_pair_interactions(cx: Complex, contacts: AtomContacts, hbond_cutoff: float = HBOND_CUTOFF,
                              salt_cutoff: float = SALT_BRIDGE_CUTOFF) -> dict[tuple[int, int], dict]:
    """Per cross-chain residue pair (global indices, lower first): contact count and interaction flags."""
    table = cx.atoms
    basic = _charged_atom_mask(cx, SALT_BRIDGE_BASIC)
    acidic = _charged_atom_mask(cx, SALT_BRIDGE_ACIDIC)
    polar = np.isin(table.elements, ("N", "O"))
    out: dict[tuple[int, int], dict] = {}
    for a, b, d in zip(contacts.a, contacts.b, contacts.distance):
        ra, rb = int(table.residue_index[a]), int(table.residue_index[b])
        key = (ra, rb) if ra < rb else (rb, ra)
        rec = out.setdefault(key, {"contacts": 0, "hbond": False, "salt_bridge": False})
        rec["contacts"] += 1
        if polar[a] and polar[b] and d <= hbond_cutoff:
            rec["hbond"] = True
        if d <= salt_cutoff and ((basic[a] and acidic[b]) or (acidic[a] and basic[b])):
            rec["salt_bridge"] = True
    return out


def check_chains(cx: Complex, chains) -> None:
    for c in chains:
        if c not in cx.chain_ids:
            raise UnknownChain(f"chain {c!r} not in {cx.id}")
