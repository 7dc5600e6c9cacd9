"""Stage II meta-task instances: residue grounding, pair geometry and chain-level interaction tasks."""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..constants import AA21
from ..errors import TaskNotApplicable
from ..labels.interactions import SALT_BRIDGE_BINS
from ..labels.labelset import LabelSet
from ..labels.pairs import PAIR_BINS, bin_label
from ..structure.cdr import AnnotationDocument
from ..structure.model import Complex
from . import schemas as S
from .base import TaskInstance, header, options, residue_phrase, rng_for, spaced_options

PAIR_CLASSES = ("short", "long", "cross_chain")
BATCH_QUOTA = {"short": 15, "long": 8, "cross_chain": 7}
_REJECTION_TRIES = 64


def _ref(cx: Complex, k: int) -> dict:
    res = cx.residues[k]
    return {"chain": res.chain_id, "pos": res.pos}


class _PairSampler:
    """Uniform sampling of residue pairs (global indices, i < j) by pair class.

    Only residues with a reference atom take part. Short-range pairs are few
    enough to enumerate; long-range and cross-chain pairs are drawn by
    rejection and enumerated only as a fallback.
    """

    def __init__(self, labels: LabelSet):
        self.labels = labels
        cx = labels.complex
        self.sep = labels.rules.short_range_max_sep
        self.ok = np.flatnonzero(~np.isnan(labels.cbeta[:, 0]))
        self.chain = cx.residue_chain_index
        self.pos = np.array([r.pos for r in cx.residues])
        per_chain = np.bincount(self.chain[self.ok], minlength=len(cx.chains)).astype(np.int64)
        same = int((per_chain * (per_chain - 1) // 2).sum())
        m = len(self.ok)
        self.short = self._enumerate_short()
        self.capacity = {
            "short": len(self.short),
            "long": same - len(self.short),
            "cross_chain": m * (m - 1) // 2 - same,
        }

    def _enumerate_short(self) -> np.ndarray:
        ok = self.ok
        out = []
        for d in range(1, self.sep + 1):
            a, b = ok[:-d], ok[d:]
            keep = (self.chain[a] == self.chain[b]) & (np.abs(self.pos[b] - self.pos[a]) <= self.sep)
            out.append(np.stack([a[keep], b[keep]], axis=1))
        pairs = np.concatenate(out) if out else np.zeros((0, 2), dtype=int)
        pairs = np.unique(pairs, axis=0)
        return pairs

    def class_of(self, a: int, b: int) -> str:
        if self.chain[a] != self.chain[b]:
            return "cross_chain"
        return "short" if abs(int(self.pos[a]) - int(self.pos[b])) <= self.sep else "long"

    def _enumerate(self, cls: str) -> np.ndarray:
        ok = self.ok
        ia, ib = np.triu_indices(len(ok), k=1)
        a, b = ok[ia], ok[ib]
        same = self.chain[a] == self.chain[b]
        if cls == "cross_chain":
            keep = ~same
        else:
            keep = same & (np.abs(self.pos[a] - self.pos[b]) > self.sep)
        return np.stack([a[keep], b[keep]], axis=1)

    def sample(self, cls: str, k: int, rng: np.random.Generator, accept=None) -> list[tuple[int, int]]:
        """``k`` distinct pairs of class ``cls`` (fewer only if the class is exhausted)."""
        k = min(k, self.capacity[cls])
        if k <= 0:
            return []
        if cls == "short":
            pool = self.short
        else:
            chosen: list[tuple[int, int]] = []
            seen = set()
            budget = _REJECTION_TRIES * k
            while len(chosen) < k and budget > 0:
                budget -= 1
                a, b = rng.choice(self.ok, size=2, replace=False)
                a, b = (int(a), int(b)) if a < b else (int(b), int(a))
                if (a, b) in seen or self.class_of(a, b) != cls:
                    continue
                if accept is not None and not accept(a, b):
                    continue
                seen.add((a, b))
                chosen.append((a, b))
            if len(chosen) == k:
                return chosen
            pool = self._enumerate(cls)
        if accept is not None:
            pool = np.array([p for p in pool if accept(int(p[0]), int(p[1]))], dtype=int).reshape(-1, 2)
        k = min(k, len(pool))
        idx = rng.choice(len(pool), size=k, replace=False)
        return [(int(pool[i, 0]), int(pool[i, 1])) for i in idx]


# -- individual generators ------------------------------------------------------------

def _rr(cx, labels, rng, ann):
    k = int(rng.integers(len(cx.residues)))
    q = _ref(cx, k)
    text = (f"What is the amino-acid type at {residue_phrase(q['chain'], q['pos'])}? "
            f"Choose one option: {options(AA21)}.")
    return text, q, {"aa": cx.residues[k].aa}


def _window_starts(cx: Complex, per_residue) -> list[int]:
    """Global indices starting a within-chain window of WINDOW residues with no NA label."""
    starts = []
    offset = 0
    w = S.WINDOW
    for ch in cx.chains:
        labs = per_residue[offset:offset + len(ch)]
        for s in range(len(ch) - w + 1):
            if "NA" not in labs[s:s + w]:
                starts.append(offset + s)
        offset += len(ch)
    return starts


def _window(cx, per_residue, rng, what, alphabet):
    starts = _window_starts(cx, per_residue)
    if not starts:
        raise TaskNotApplicable(f"{cx.id}: no {S.WINDOW}-residue window without missing labels")
    s = starts[int(rng.integers(len(starts)))]
    first, last = cx.residues[s], cx.residues[s + S.WINDOW - 1]
    q = {"chain": first.chain_id, "start": first.pos, "end": last.pos}
    text = (f"What are the {what} for chain {q['chain']} residues {q['start']} through {q['end']} (inclusive)? "
            f"Output a {S.WINDOW}-character string using {options(alphabet)}.")
    return text, q, {"labels": "".join(per_residue[s:s + S.WINDOW])}


def _dssp(cx, labels, rng, ann):
    return _window(cx, labels.ss3, rng, "secondary-structure labels", S.SS_OPTIONS)


def _rsa(cx, labels, rng, ann):
    return _window(cx, labels.rsa_bin, rng, "solvent-accessibility bins", S.RSA_OPTIONS)


def _pair_text_refs(cx, a, b):
    return _ref(cx, a), _ref(cx, b)


def _contact(cx, labels, rng, ann):
    sampler = _PairSampler(labels)
    total = sum(sampler.capacity.values())
    contacts = labels.contact_pair_indices
    n_contact = len(contacts)
    if total == 0:
        raise TaskNotApplicable(f"{cx.id}: fewer than two residues with a reference atom")
    want_contact = bool(rng.random() < 0.5)
    if n_contact == 0:
        want_contact = False
    elif n_contact == total:
        want_contact = True
    if want_contact:
        a, b = (int(v) for v in contacts[int(rng.integers(n_contact))])
    else:
        cb = labels.cbeta
        cutoff = labels.rules.contact_cutoff

        def far(i, j):
            return float(np.linalg.norm(cb[i] - cb[j])) >= cutoff

        weights = np.array([sampler.capacity[c] for c in PAIR_CLASSES], dtype=float)
        cls = PAIR_CLASSES[int(rng.choice(3, p=weights / weights.sum()))]
        got = sampler.sample(cls, 1, rng, accept=far)
        if not got:
            for cls in PAIR_CLASSES:
                got = sampler.sample(cls, 1, rng, accept=far)
                if got:
                    break
        a, b = got[0]
    i, j = _pair_text_refs(cx, a, b)
    geo = labels.pair((i["chain"], i["pos"]), (j["chain"], j["pos"]))
    text = (f"Are {residue_phrase(i['chain'], i['pos'])} and {residue_phrase(j['chain'], j['pos'])} "
            f"in contact under the <{labels.rules.contact_cutoff:.1f}Å Cβ (Cα for Gly) rule? "
            f"Choose one option: {spaced_options(S.CONTACT_OPTIONS)}.")
    return text, {"i": i, "j": j}, {"choice": "Contact" if geo.contact else "NotContact"}


def _dist(cx, labels, rng, ann):
    sampler = _PairSampler(labels)
    avail = [c for c in PAIR_CLASSES if sampler.capacity[c] > 0]
    if not avail:
        raise TaskNotApplicable(f"{cx.id}: fewer than two residues with a reference atom")
    cls = avail[int(rng.integers(len(avail)))]
    a, b = sampler.sample(cls, 1, rng)[0]
    i, j = _pair_text_refs(cx, a, b)
    geo = labels.pair((i["chain"], i["pos"]), (j["chain"], j["pos"]))
    text = (f"What is the distance bin between {residue_phrase(i['chain'], i['pos'])} and "
            f"{residue_phrase(j['chain'], j['pos'])}? Pair class: {geo.pair_class}. "
            f"Choose one option: {spaced_options(PAIR_BINS[geo.pair_class][1])}.")
    return text, {"i": i, "j": j, "pair_class": geo.pair_class}, {"dist_bin": geo.dist_bin}


def batch_quotas(capacity: dict[str, int], size: int = S.BATCH_SIZE) -> dict[str, int]:
    """Stratified pair counts per class, moving any shortfall to classes with room left."""
    quota = {c: min(BATCH_QUOTA[c], capacity[c]) for c in PAIR_CLASSES}
    missing = size - sum(quota.values())
    while missing > 0:
        room = [c for c in PAIR_CLASSES if capacity[c] > quota[c]]
        if not room:
            break
        for c in room:
            if missing == 0:
                break
            quota[c] += 1
            missing -= 1
    return quota


def _batch(cx, labels, rng, ann):
    sampler = _PairSampler(labels)
    if sum(sampler.capacity.values()) < S.BATCH_SIZE:
        raise TaskNotApplicable(f"{cx.id}: fewer than {S.BATCH_SIZE} distinct residue pairs")
    quota = batch_quotas(sampler.capacity)
    chosen = []
    for cls in PAIR_CLASSES:
        chosen.extend(sampler.sample(cls, quota[cls], rng))
    order = rng.permutation(len(chosen))
    pairs_in, pairs_out = [], []
    for n, k in enumerate(order, start=1):
        a, b = chosen[int(k)]
        i, j = _pair_text_refs(cx, a, b)
        pid = f"p{n}"
        pairs_in.append({"pair_id": pid, "i": i, "j": j})
        pairs_out.append({"pair_id": pid, "dist_bin": labels.pair((i["chain"], i["pos"]), (j["chain"], j["pos"])).dist_bin})
    query = {"pairs": pairs_in}
    from .base import dumps
    text = ("For each residue pair below, what is the distance bin (using the bin set for its pair class)? "
            "Return JSON only.\n" + dumps(query))
    return text, query, {"pairs": pairs_out}


def _need_multichain(cx):
    if len(cx.chains) < 2:
        raise TaskNotApplicable(f"{cx.id}: single-chain complex has no chain pairs")


def _chain_ref(pair):
    return {"chain_i": pair[0], "chain_j": pair[1]}


def _chain(cx, labels, rng, ann):
    _need_multichain(cx)
    pairs, _ = labels.chain_pair_graph
    text = ("Which chain pairs are interacting in this complex under the strength threshold "
            "used by the dataset generator? Return JSON only.")
    return text, {}, {"pairs": [_chain_ref(p) for p in pairs]}


def _top_pair(cx, labels):
    _need_multichain(cx)
    _, top = labels.chain_pair_graph
    if top is None:
        raise TaskNotApplicable(f"{cx.id}: no pair of chains is in contact")
    return top


def _top(cx, labels, rng, ann):
    top = _top_pair(cx, labels)
    text = ("Which chain pair has the strongest interaction in this complex under the dataset "
            "generator's contact-strength rule? Return JSON only.")
    return text, {}, {"top_chain_pair": _chain_ref(top)}


def focus_pair(cx: Complex, labels: LabelSet, ann: Optional[AnnotationDocument]) -> tuple[tuple[str, str], bool]:
    """Chain pair used by the interface, hotspot and salt-bridge tasks.

    For antibody complexes (annotation with CDR loops) this is the strongest
    antibody-antigen pair; otherwise the overall top pair. The flag tells
    whether the antibody-antigen wording applies.
    """
    if ann is not None and len(ann.cdrs):
        ab = set(ann.cdrs.chains())
        cands = [(p, n) for p, n in labels.chain_pair_counts.items()
                 if n >= 1 and len(ab.intersection(p)) == 1]
        if cands:
            best = max(n for _, n in cands)
            return min(p for p, n in cands if n == best), True
    return _top_pair(cx, labels), False


def _pair_prefix(pair, abag: bool) -> str:
    kind = "antibody-antigen chain pair" if abag else "chain pair"
    return f"For the {kind} ({pair[0]},{pair[1]})"


def _topk(cx, labels, rng, ann, mode):
    pair, abag = focus_pair(cx, labels, ann)
    k = S.INTF_K if mode == "interface" else S.HOT_K
    ranked = labels.rank(pair, k, mode)
    if mode == "interface":
        text = (f"{_pair_prefix(pair, abag)}, which residues form the top-{k} interface on each chain "
                "under the dataset generator's interface rule? Return JSON only.")
    else:
        text = (f"{_pair_prefix(pair, abag)}, which residues are the top-{k} hotspots on each chain "
                "under the dataset generator's hotspot proxy rule? Return JSON only.")
    target = {"chain_pair": _chain_ref(pair), "topk": k, pair[0]: ranked[pair[0]], pair[1]: ranked[pair[1]]}
    return text, {"chain_pair": _chain_ref(pair), "topk": k}, target


def _intf(cx, labels, rng, ann):
    return _topk(cx, labels, rng, ann, "interface")


def _hot(cx, labels, rng, ann):
    return _topk(cx, labels, rng, ann, "hotspot")


def _salt(cx, labels, rng, ann):
    pair, abag = focus_pair(cx, labels, ann)
    text = (f"{_pair_prefix(pair, abag)}, what is the salt-bridge count bin under the dataset generator's "
            f"salt-bridge rule? Choose one option: {spaced_options(SALT_BRIDGE_BINS[1])}.")
    return text, {"chain_pair": _chain_ref(pair)}, {"salt_bridge_bin": labels.salt_bridge_bin(pair)}


def lddt_bin(value: float) -> str:
    return bin_label(value, *S.LDDT_BINS)


def _lddt(cx, labels, rng, ann):
    if ann is None or ann.lddt is None:
        raise TaskNotApplicable(f"{cx.id}: no lddt value in the annotation")
    text = ("Predict the CDR LDDT score bin for this antibody structure. "
            f"Choose one option: {spaced_options(S.LDDT_BINS[1])}.")
    return text, {}, {"lddt_bin": lddt_bin(ann.lddt)}


_GENERATORS = {
    S.RR: _rr, S.DSSP: _dssp, S.RSA: _rsa, S.CONTACT: _contact, S.DIST: _dist, S.BATCH: _batch,
    S.CHAIN: _chain, S.TOP: _top, S.INTF: _intf, S.HOT: _hot, S.SALT: _salt, S.LDDT: _lddt,
}


def gen_stage2(cx: Complex, labels: LabelSet, task_type: str, seed: int, ordinal: int = 0,
               annotation: Optional[AnnotationDocument] = None) -> TaskInstance:
    """One Stage II instance; all random selections come from ``seed``.

    Raises
    ------
    TaskNotApplicable
        When the complex cannot support the task (e.g. chain-pair tasks on a
        single chain, LDDT without an annotation value).
    """
    task = S.ABBREVIATIONS.get(task_type, task_type)
    if task not in _GENERATORS:
        raise ValueError(f"not a Stage II task: {task_type!r}")
    rng = rng_for(seed)
    text, query, target = _GENERATORS[task](cx, labels, rng, annotation)
    return TaskInstance(task, cx.id, int(seed), {"text": header(task) + text, "query": query}, target, ordinal)
