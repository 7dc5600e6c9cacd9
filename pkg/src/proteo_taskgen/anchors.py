"""Sparse residue-aligned anchoring: identity clamping and embedding injection at key CDR residues.

Parameters live in a small binary tensor file::

    b"PTGT" | uint32 LE header length | UTF-8 JSON header | little-endian float payload

The header is ``{"format_version", "d_gen", "d_LLM", "row_order", "dtype"}``;
the payload holds the embedding rows in ``row_order`` (20 amino acids then
``X`` for the mask row) followed by the ``d_gen x d_LLM`` projection, row-major.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .constants import AA20
from .errors import (AnchorError, DimMismatch, KeyOutsideCdr, MissingHidden, MissingIdentity,
                     ParseError)
from .structure.model import CdrAnnotation, Complex, ResidueKey

MAGIC = b"PTGT"
FORMAT_VERSION = 1
ROW_ORDER = tuple(AA20) + ("X",)
INIT_SCALE = 0.02
_DTYPES = {"<f8": np.dtype("<f8"), "<f4": np.dtype("<f4")}


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    """Identity embeddings e(.) for the 20 amino acids plus the mask row used for X."""

    dim: int
    rows: Mapping[str, np.ndarray]
    mask_row: np.ndarray

    def __post_init__(self):
        if set(self.rows) != set(AA20):
            raise ValueError("embedding table needs exactly the 20 standard amino acids")
        for v in list(self.rows.values()) + [self.mask_row]:
            if v.shape != (self.dim,) or not np.all(np.isfinite(v)):
                raise DimMismatch(f"embedding rows must be finite vectors of length {self.dim}")

    def vector(self, aa: str) -> np.ndarray:
        return self.mask_row if aa == "X" else self.rows[aa]

    def as_matrix(self) -> np.ndarray:
        return np.stack([self.vector(a) for a in ROW_ORDER])

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "EmbeddingTable":
        m = np.asarray(m, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != len(ROW_ORDER):
            raise DimMismatch(f"expected {len(ROW_ORDER)} embedding rows, got shape {m.shape}")
        return cls(m.shape[1], {a: _frozen(m[k]) for k, a in enumerate(AA20)}, _frozen(m[-1]))


@dataclass(frozen=True, eq=False)
class ProjectionMatrix:
    """W_proj of shape (d_gen, d_LLM); maps a hidden vector into the embedding space."""

    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 2 or not np.all(np.isfinite(self.values)):
            raise DimMismatch("projection must be a finite 2-D matrix")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def apply(self, h: np.ndarray) -> np.ndarray:
        return self.values @ h


def init_params(dims: tuple[int, int], seed: int = 0) -> tuple[EmbeddingTable, ProjectionMatrix]:
    """Seeded uniform init in [-0.02, 0.02] for every table row and matrix entry."""
    d_gen, d_llm = (int(d) for d in dims)
    if d_gen < 1 or d_llm < 1:
        raise ValueError("dims must be positive")
    rng = np.random.default_rng(seed)
    emb = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(len(ROW_ORDER), d_gen))
    w = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(d_gen, d_llm))
    return EmbeddingTable.from_matrix(emb), ProjectionMatrix(_frozen(w))


def _pack(header: dict, arrays: Sequence[np.ndarray], dtype: str) -> bytes:
    head = json.dumps(header, separators=(",", ":")).encode()
    payload = b"".join(np.ascontiguousarray(a, dtype=_DTYPES[dtype]).tobytes() for a in arrays)
    return MAGIC + struct.pack("<I", len(head)) + head + payload


def _unpack(data: bytes) -> tuple[dict, memoryview]:
    if len(data) < 8 or data[:4] != MAGIC:
        raise ParseError("not a tensor file (bad magic)")
    (n,) = struct.unpack("<I", data[4:8])
    try:
        header = json.loads(data[8:8 + n].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"bad tensor header: {exc}") from None
    if header.get("dtype") not in _DTYPES:
        raise ParseError(f"unsupported dtype {header.get('dtype')!r}")
    return header, memoryview(data)[8 + n:]


def save_params(path: Union[str, Path], table: EmbeddingTable, proj: ProjectionMatrix, dtype: str = "<f8") -> None:
    if proj.shape[0] != table.dim:
        raise DimMismatch(f"projection rows {proj.shape[0]} != embedding dim {table.dim}")
    header = {"format_version": FORMAT_VERSION, "d_gen": table.dim, "d_LLM": proj.shape[1],
              "row_order": list(ROW_ORDER), "dtype": dtype}
    Path(path).write_bytes(_pack(header, [table.as_matrix(), proj.values], dtype))


def read_params(path: Union[str, Path]) -> tuple[EmbeddingTable, ProjectionMatrix]:
    header, payload = _unpack(Path(path).read_bytes())
    try:
        d_gen, d_llm = int(header["d_gen"]), int(header["d_LLM"])
        order = tuple(header["row_order"])
    except (KeyError, TypeError, ValueError):
        raise ParseError("tensor header needs d_gen, d_LLM and row_order") from None
    if sorted(order) != sorted(ROW_ORDER):
        raise ParseError("row_order must list the 20 amino acids and X")
    dt = _DTYPES[header["dtype"]]
    need = (len(order) * d_gen + d_gen * d_llm) * dt.itemsize
    if len(payload) != need:
        raise ParseError(f"tensor payload has {len(payload)} bytes, expected {need}")
    flat = np.frombuffer(payload, dtype=dt).astype(np.float64)
    emb = flat[:len(order) * d_gen].reshape(len(order), d_gen)
    emb = emb[[order.index(a) for a in ROW_ORDER]]
    w = flat[len(order) * d_gen:].reshape(d_gen, d_llm)
    return EmbeddingTable.from_matrix(emb), ProjectionMatrix(_frozen(w))


def load_or_init_params(source: Optional[Union[str, Path]], dims: tuple[int, int],
                        seed: int = 0) -> tuple[EmbeddingTable, ProjectionMatrix]:
    """Read parameters from ``source`` and check them against ``dims``, or initialize them.

    Raises
    ------
    DimMismatch
        The file's (d_gen, d_LLM) differs from ``dims``.
    ParseError
        The file is not a valid tensor file.
    """
    d_gen, d_llm = (int(d) for d in dims)
    if d_gen < 1 or d_llm < 1:
        raise ValueError("dims must be positive")
    if source is None:
        return init_params(dims, seed)
    table, proj = read_params(source)
    if (table.dim, proj.shape[1]) != (d_gen, d_llm):
        raise DimMismatch(f"{source}: file dims ({table.dim}, {proj.shape[1]}) != requested ({d_gen}, {d_llm})")
    return table, proj


@dataclass(frozen=True, eq=False)
class AnchorSpec:
    """CDR universe, key residues and the external predictions attached to them."""

    cdr_set: frozenset
    key_set: frozenset
    identities: Mapping[ResidueKey, str]
    hidden: Mapping[ResidueKey, np.ndarray]

    def validate(self, d_llm: Optional[int] = None) -> None:
        outside = self.key_set - self.cdr_set
        if outside:
            raise KeyOutsideCdr(f"key residues outside the CDR set: {sorted(outside)[:5]}")
        missing = self.key_set - set(self.hidden)
        if missing:
            raise MissingHidden(f"no hidden vector for key residues {sorted(missing)[:5]}")
        missing = self.key_set - set(self.identities)
        if missing:
            raise MissingIdentity(f"no predicted identity for key residues {sorted(missing)[:5]}")
        extra = (set(self.hidden) | set(self.identities)) - self.key_set
        if extra:
            raise AnchorError(f"predictions given for non-key residues {sorted(extra)[:5]}")
        for key, aa in self.identities.items():
            if aa not in AA20:
                raise AnchorError(f"predicted identity {aa!r} at {key} is not a standard amino acid")
        for key, h in self.hidden.items():
            if d_llm is not None and np.shape(h) != (d_llm,):
                raise DimMismatch(f"hidden vector at {key} has shape {np.shape(h)}, expected ({d_llm},)")

    @classmethod
    def build(cls, cdr_set: Iterable[ResidueKey], identities: Mapping[ResidueKey, str],
              hidden: Mapping[ResidueKey, Sequence[float]],
              key_set: Optional[Iterable[ResidueKey]] = None) -> "AnchorSpec":
        keys = frozenset(tuple(k) for k in (identities if key_set is None else key_set))
        return cls(frozenset(tuple(k) for k in cdr_set), keys,
                   {tuple(k): v for k, v in identities.items()},
                   {tuple(k): np.asarray(v, dtype=np.float64) for k, v in hidden.items()})


@dataclass(frozen=True, eq=False)
class AnchorOutput:
    """Per-residue generator inputs in residue order."""

    keys: tuple[ResidueKey, ...]
    k_gen: tuple[str, ...]
    e_gen: np.ndarray

    def as_array(self, dtype: str = "<f8") -> np.ndarray:
        return self.e_gen.astype(_DTYPES[dtype])

    def to_jsonl(self, dtype: str = "<f8") -> str:
        arr = self.as_array(dtype)
        lines = []
        for (chain, pos), k, e in zip(self.keys, self.k_gen, arr):
            lines.append(json.dumps({"chain": chain, "pos": pos, "k_gen": k, "e_gen": [float(v) for v in e]},
                                    separators=(",", ":")))
        return "\n".join(lines) + ("\n" if lines else "")

    def write_tensor(self, path: Union[str, Path], dtype: str = "<f8") -> None:
        header = {"format_version": FORMAT_VERSION, "n": len(self.keys), "d_gen": int(self.e_gen.shape[1]),
                  "dtype": dtype, "residues": [[c, p, k] for (c, p), k in zip(self.keys, self.k_gen)]}
        Path(path).write_bytes(_pack(header, [self.e_gen], dtype))


def _residue_list(residues) -> list[tuple[ResidueKey, str]]:
    if isinstance(residues, Complex):
        return [((r.chain_id, r.pos), r.aa) for r in residues.residues]
    return [(tuple(k), aa) for k, aa in residues]


def build_anchors(residues: Union[Complex, Sequence[tuple[ResidueKey, str]]], spec: AnchorSpec,
                  table: EmbeddingTable, proj: ProjectionMatrix) -> AnchorOutput:
    """Generator inputs for every residue.

    Key residues get the predicted identity and ``e(k_hat) + W h``; other CDR
    residues get ``X`` and the mask row; everything else keeps its native
    identity and embedding.
    """
    if proj.shape[0] != table.dim:
        raise DimMismatch(f"projection rows {proj.shape[0]} != embedding dim {table.dim}")
    spec.validate(proj.shape[1])
    items = _residue_list(residues)
    universe = {k for k, _ in items}
    unknown = spec.cdr_set - universe
    if unknown:
        raise AnchorError(f"CDR residues not in the structure: {sorted(unknown)[:5]}")
    keys, tokens = [], []
    e = np.empty((len(items), table.dim), dtype=np.float64)
    for n, (key, native) in enumerate(items):
        keys.append(key)
        if key in spec.key_set:
            aa = spec.identities[key]
            tokens.append(aa)
            e[n] = table.vector(aa) + proj.apply(spec.hidden[key])
        elif key in spec.cdr_set:
            tokens.append("X")
            e[n] = table.mask_row
        else:
            tokens.append(native)
            e[n] = table.vector(native)
    return AnchorOutput(tuple(keys), tuple(tokens), e)


def read_hidden_sidecar(path: Union[str, Path]) -> dict[str, dict[ResidueKey, tuple[str, np.ndarray]]]:
    """``{structure_id: {(chain, pos): (identity, hidden)}}`` from a JSONL sidecar.

    Each line is ``{"structure_id", "chain", "pos", "aa", "hidden": [...]}``.
    """
    out: dict[str, dict[ResidueKey, tuple[str, np.ndarray]]] = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                sid, key = str(doc["structure_id"]), (str(doc["chain"]), int(doc["pos"]))
                aa = str(doc["aa"]).upper()
                h = np.asarray(doc["hidden"], dtype=np.float64)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{path}:{n}: {exc}") from None
            if h.ndim != 1 or not np.all(np.isfinite(h)):
                raise ParseError(f"{path}:{n}: hidden must be a finite 1-D list")
            out.setdefault(sid, {})[key] = (aa, h)
    return out


def spec_from_sidecar(cdrs: CdrAnnotation, entries: Mapping[ResidueKey, tuple[str, np.ndarray]]) -> AnchorSpec:
    return AnchorSpec.build(cdrs.index_set(), {k: aa for k, (aa, _) in entries.items()},
                            {k: h for k, (_, h) in entries.items()})
