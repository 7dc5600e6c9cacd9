"""Phase mixtures for Stage II training and the replay buffer that carries earlier phases forward."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from ..errors import EmptyBufferWithReplay
from . import schemas as S
from .base import TaskInstance, instance_seed

PHASE_ORDER = ("M0", "M1", "M2", "M3")
WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class CurriculumPhase:
    """Task mixture of one phase; ``replay`` fractions are drawn from the buffer."""

    name: str
    total: int
    weights: Mapping[str, float]
    replay: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in PHASE_ORDER:
            raise ValueError(f"unknown phase {self.name!r}")
        if self.total < 0:
            raise ValueError("total must be >= 0")
        fracs = list(self.weights.values()) + list(self.replay.values())
        if any(f < 0 for f in fracs):
            raise ValueError(f"{self.name}: negative fraction")
        if abs(sum(fracs) - 1.0) > WEIGHT_TOL:
            raise ValueError(f"{self.name}: fractions sum to {sum(fracs)!r}, not 1")
        for t in list(self.weights) + list(self.replay):
            if t not in S.ALL_TASKS:
                raise ValueError(f"{self.name}: unknown task type {t!r}")

    @property
    def index(self) -> int:
        return PHASE_ORDER.index(self.name)

    def categories(self) -> list[tuple[str, str, float]]:
        """(source, task_type, fraction) with source "new" or "replay", in a fixed order."""
        out = [("new", t, float(w)) for t, w in self.weights.items()]
        out += [("replay", t, float(w)) for t, w in self.replay.items()]
        return out

    def counts(self, n: Optional[int] = None) -> dict[str, int]:
        """Expected instance count per task type when scaling the phase to ``n`` items."""
        n = self.total if n is None else n
        out: dict[str, int] = {}
        for _, t, w in self.categories():
            out[t] = out.get(t, 0) + int(round(w * n))
        return out

    def to_dict(self) -> dict:
        return {"name": self.name, "total": self.total, "weights": dict(self.weights), "replay": dict(self.replay)}

    @classmethod
    def from_dict(cls, doc: dict) -> "CurriculumPhase":
        expand = lambda m: {S.ABBREVIATIONS.get(k, k): float(v) for k, v in (m or {}).items()}  # noqa: E731
        return cls(doc["name"], int(doc.get("total", 0)), expand(doc.get("weights")), expand(doc.get("replay")))


def _phase(name, total, weights, replay=None) -> CurriculumPhase:
    expand = lambda m: {S.ABBREVIATIONS[k]: v for k, v in (m or {}).items()}  # noqa: E731
    return CurriculumPhase(name, total, expand(weights), expand(replay))


DEFAULT_PHASES = {
    "M0": _phase("M0", 2_000_000, {"RR": 0.40, "DSSP": 0.35, "RSA": 0.25}),
    "M1": _phase("M1", 3_000_000, {"DIST": 0.45, "CONTACT": 0.40, "BATCH": 0.05},
                 {"DSSP": 0.05, "RSA": 0.05}),
    "M2": _phase("M2", 2_640_000, {"DIST": 0.55, "BATCH": 0.20, "CONTACT": 0.17},
                 {"DSSP": 0.04, "RSA": 0.04}),
    "M3": _phase("M3", 1_450_000, {"CHAIN": 0.10, "TOP": 0.10, "INTF": 0.10, "HOT": 0.10, "SALT": 0.10,
                                   "DIST": 0.16, "CONTACT": 0.10, "BATCH": 0.18},
                 {"DSSP": 0.03, "RSA": 0.03}),
}


class ReplayBuffer:
    """Reservoir of instances tagged with the phase that produced them.

    Once full, each newly offered item replaces a random slot with
    probability ``capacity / seen`` (reservoir sampling), so the buffer stays
    a uniform sample of everything offered.
    """

    def __init__(self, capacity: int = 100_000, seed: int = 0):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self._rng = np.random.default_rng(seed)
        self._entries: list[tuple[str, TaskInstance]] = []
        self._seen = 0

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def entries(self) -> list[TaskInstance]:
        return [inst for _, inst in self._entries]

    def phases(self) -> set[str]:
        return {p for p, _ in self._entries}

    def add(self, instance: TaskInstance, phase: str) -> None:
        if phase not in PHASE_ORDER:
            raise ValueError(f"unknown phase {phase!r}")
        self._seen += 1
        if len(self._entries) < self.capacity:
            self._entries.append((phase, instance))
            return
        j = int(self._rng.integers(self._seen))
        if j < self.capacity:
            self._entries[j] = (phase, instance)

    def extend(self, instances: Sequence[TaskInstance], phase: str) -> None:
        for inst in instances:
            self.add(inst, phase)

    def eligible(self, phase: str, task_type: Optional[str] = None) -> list[TaskInstance]:
        """Entries from phases strictly earlier than ``phase``, optionally of one task type."""
        limit = PHASE_ORDER.index(phase)
        return [inst for p, inst in self._entries
                if PHASE_ORDER.index(p) < limit and (task_type is None or inst.task_type == task_type)]


def sample_curriculum_with_sources(phase: CurriculumPhase, buffer: Optional[ReplayBuffer], n: int, seed: int,
                                   pool: Mapping[str, Sequence[TaskInstance]]) -> list[tuple[str, TaskInstance]]:
    """Like :func:`sample_curriculum` but tags each item with its source ("new" or "replay")."""
    rng = np.random.default_rng(seed)
    cats = [c for c in phase.categories() if c[2] > 0]
    replay_pools = {}
    for source, t, _ in cats:
        if source == "replay":
            items = buffer.eligible(phase.name, t) if buffer is not None else []
            if not items:
                raise EmptyBufferWithReplay(f"{phase.name}: replay of {t} requested but the buffer has none")
            replay_pools[t] = items
        elif not pool.get(t):
            raise ValueError(f"{phase.name}: no {t} instances in the pool")
    probs = np.array([w for _, _, w in cats])
    picks = rng.choice(len(cats), size=n, p=probs / probs.sum())
    out = []
    for k in picks:
        source, t, _ = cats[int(k)]
        items = replay_pools[t] if source == "replay" else pool[t]
        out.append((source, items[int(rng.integers(len(items)))]))
    return out


def sample_curriculum(phase: CurriculumPhase, buffer: Optional[ReplayBuffer], n: int, seed: int,
                      pool: Mapping[str, Sequence[TaskInstance]]) -> list[TaskInstance]:
    """Draw ``n`` instances for ``phase``.

    Each item picks a category by a multinomial draw over the phase fractions.
    New items come uniformly, with replacement, from ``pool[task_type]``;
    replay items come uniformly from buffer entries of that task type produced
    by earlier phases.

    Raises
    ------
    EmptyBufferWithReplay
        The phase has replay weight but the buffer holds no eligible entry of
        a replayed task type.
    """
    return [inst for _, inst in sample_curriculum_with_sources(phase, buffer, n, seed, pool)]


def run_curriculum(phases: Sequence[CurriculumPhase], pool: Mapping[str, Sequence[TaskInstance]],
                   counts: Mapping[str, int], global_seed: int,
                   buffer_capacity: int = 100_000) -> dict[str, list[tuple[str, TaskInstance]]]:
    """Sample every phase in order, feeding each phase's new items into the replay buffer afterwards."""
    buffer = ReplayBuffer(buffer_capacity, seed=phase_seed(global_seed, "buffer"))
    out = {}
    for phase in sorted(phases, key=lambda p: p.index):
        drawn = sample_curriculum_with_sources(phase, buffer, counts[phase.name],
                                               phase_seed(global_seed, phase.name), pool)
        buffer.extend([inst for src, inst in drawn if src == "new"], phase.name)
        out[phase.name] = drawn
    return out


def category_counts(phase: CurriculumPhase, n: int, seed: int) -> dict[tuple[str, str], int]:
    """Category tallies the sampler would draw for (phase, n, seed), without touching any pool."""
    rng = np.random.default_rng(seed)
    cats = [c for c in phase.categories() if c[2] > 0]
    probs = np.array([w for _, _, w in cats])
    picks = rng.choice(len(cats), size=n, p=probs / probs.sum())
    tally = np.bincount(picks, minlength=len(cats))
    return {(s, t): int(c) for (s, t, _), c in zip(cats, tally)}


def phase_seed(global_seed: int, phase: str) -> int:
    return instance_seed(global_seed, "<curriculum>", phase, 0)
