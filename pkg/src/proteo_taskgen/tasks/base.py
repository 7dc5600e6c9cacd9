"""The task record, per-instance seeding and JSON serialization."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Any

import numpy as np

RECORD_KEYS = ("task_type", "structure_id", "seed", "prompt", "target", "ordinal")
SEED_MASK = (1 << 63) - 1


def dumps(obj: Any) -> str:
    """Canonical compact JSON used for every emitted payload."""
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def instance_seed(global_seed: int, structure_id: str, task_type: str, ordinal: int) -> int:
    """Stable 63-bit seed for one instance; independent of process or worker layout."""
    msg = f"{int(global_seed)}|{structure_id}|{task_type}|{int(ordinal)}".encode()
    return int.from_bytes(hashlib.blake2b(msg, digest_size=8).digest(), "big") & SEED_MASK


def rng_for(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed))


@dataclass(frozen=True)
class TaskInstance:
    """One supervision record.

    ``prompt`` holds the rendered instruction (``text``) plus the structured
    query it was rendered from; ``target`` is the expected model output.
    ``ordinal`` numbers the instance within its structure and, with
    ``structure_id``, joins model outputs back to the corpus.
    """

    task_type: str
    structure_id: str
    seed: int
    prompt: dict
    target: Any
    ordinal: int = 0

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in RECORD_KEYS}

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "TaskInstance":
        return cls(
            task_type=doc["task_type"], structure_id=doc["structure_id"], seed=int(doc["seed"]),
            prompt=doc["prompt"], target=doc["target"], ordinal=int(doc.get("ordinal", 0)),
        )

    @classmethod
    def from_json(cls, line: str) -> "TaskInstance":
        return cls.from_dict(json.loads(line))

    @property
    def key(self) -> tuple[str, int]:
        return (self.structure_id, self.ordinal)

    @property
    def text(self) -> str:
        return self.prompt["text"]


def residue_phrase(chain: str, pos: int) -> str:
    return f"residue (chain {chain}, position {pos})"


def options(values) -> str:
    return "{" + ",".join(values) + "}"


def spaced_options(values) -> str:
    return "{" + ", ".join(values) + "}"


def header(task_type: str) -> str:
    return f"<TASK={task_type}>\n"
