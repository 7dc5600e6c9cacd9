"""Immutable in-memory representation of a parsed polymer assembly."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterator, Optional

import numpy as np

from ..constants import AA21, BACKBONE, CDR_LOOPS
from ..errors import OutOfRange, UnknownChain

ResidueKey = tuple[str, int]


@dataclass(frozen=True)
class AtomRecord:
    name: str
    element: str
    pos: tuple[float, float, float]
    alt_loc: Optional[str] = None
    occupancy: float = 1.0

    def __post_init__(self):
        if len(self.pos) != 3 or not all(math.isfinite(c) for c in self.pos):
            raise ValueError(f"atom {self.name}: non-finite coordinates {self.pos}")
        if not 0.0 <= self.occupancy <= 1.0:
            raise ValueError(f"atom {self.name}: occupancy {self.occupancy} outside [0, 1]")


@dataclass(frozen=True)
class Residue:
    chain_id: str
    pos: int
    aa: str
    atoms: tuple[AtomRecord, ...]
    name: str = "UNK"
    author_seq: Optional[int] = None
    author_ins: str = ""

    def __post_init__(self):
        if self.pos < 1:
            raise ValueError(f"residue position must be >= 1, got {self.pos}")
        if self.aa not in AA21:
            raise ValueError(f"residue code {self.aa!r} not in the 21-letter alphabet")

    @cached_property
    def atom_map(self) -> dict[str, AtomRecord]:
        return {a.name: a for a in self.atoms}

    @property
    def complete_backbone(self) -> bool:
        names = self.atom_map
        return all(n in names for n in BACKBONE)

    def coord(self, atom_name: str) -> Optional[np.ndarray]:
        atom = self.atom_map.get(atom_name)
        return None if atom is None else np.asarray(atom.pos, dtype=float)

    def reference_atom(self) -> Optional[np.ndarray]:
        """C-beta coordinate, or C-alpha for glycine."""
        return self.coord("CA" if self.aa == "G" else "CB")

    @property
    def key(self) -> ResidueKey:
        return (self.chain_id, self.pos)


@dataclass(frozen=True)
class Chain:
    chain_id: str
    residues: tuple[Residue, ...]

    def __post_init__(self):
        last = 0
        for r in self.residues:
            if r.pos <= last:
                raise ValueError(f"chain {self.chain_id}: positions not strictly increasing")
            if r.chain_id != self.chain_id:
                raise ValueError(f"residue chain {r.chain_id} inside chain {self.chain_id}")
            last = r.pos

    def __len__(self):
        return len(self.residues)

    @property
    def sequence(self) -> str:
        return "".join(r.aa for r in self.residues)


@dataclass(frozen=True)
class AtomTable:
    """Flat per-atom arrays over the whole complex (cached on the complex)."""

    coords: np.ndarray          # (n_atoms, 3)
    elements: np.ndarray        # (n_atoms,) str
    names: np.ndarray           # (n_atoms,) str
    residue_index: np.ndarray   # (n_atoms,) global residue ordinal
    chain_index: np.ndarray     # (n_atoms,) chain ordinal

    def __len__(self):
        return len(self.coords)


@dataclass(frozen=True)
class Complex:
    id: str
    chains: tuple[Chain, ...]
    source_format: str = "mmcif"

    def __post_init__(self):
        if not self.chains:
            raise ValueError("a complex needs at least one chain")
        ids = [c.chain_id for c in self.chains]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate chain ids: {ids}")
        if self.source_format not in ("mmcif", "pdb"):
            raise ValueError(f"unknown source format {self.source_format!r}")

    @property
    def chain_ids(self) -> list[str]:
        return [c.chain_id for c in self.chains]

    def chain(self, chain_id: str) -> Chain:
        try:
            return self._chain_index[chain_id]
        except KeyError:
            raise UnknownChain(f"chain {chain_id!r} not in {self.id}") from None

    def residue(self, chain_id: str, pos: int) -> Residue:
        try:
            return self.residues[self._residue_index[(chain_id, pos)]]
        except KeyError:
            if chain_id not in self._chain_index:
                raise UnknownChain(f"chain {chain_id!r} not in {self.id}") from None
            raise OutOfRange(f"residue ({chain_id}, {pos}) not in {self.id}") from None

    def has_residue(self, chain_id: str, pos: int) -> bool:
        return (chain_id, pos) in self._residue_index

    def residue_ordinal(self, chain_id: str, pos: int) -> int:
        """Index of the residue in :attr:`residues` (global, chain-major order)."""
        self.residue(chain_id, pos)
        return self._residue_index[(chain_id, pos)]

    @cached_property
    def _chain_index(self) -> dict[str, Chain]:
        return {c.chain_id: c for c in self.chains}

    @cached_property
    def _residue_index(self) -> dict[ResidueKey, int]:
        return {r.key: i for i, r in enumerate(self.residues)}

    @cached_property
    def residues(self) -> tuple[Residue, ...]:
        return tuple(r for c in self.chains for r in c.residues)

    @cached_property
    def residue_chain_index(self) -> np.ndarray:
        return np.array([ci for ci, c in enumerate(self.chains) for _ in c.residues], dtype=int)

    def __iter__(self) -> Iterator[Residue]:
        return iter(self.residues)

    def __len__(self):
        return len(self.residues)

    @cached_property
    def atoms(self) -> AtomTable:
        coords, elements, names, res_idx, chain_idx = [], [], [], [], []
        ri = 0
        for ci, chain in enumerate(self.chains):
            for res in chain.residues:
                for a in res.atoms:
                    coords.append(a.pos)
                    elements.append(a.element)
                    names.append(a.name)
                    res_idx.append(ri)
                    chain_idx.append(ci)
                ri += 1
        return AtomTable(
            coords=np.asarray(coords, dtype=float).reshape(-1, 3),
            elements=np.asarray(elements, dtype=object),
            names=np.asarray(names, dtype=object),
            residue_index=np.asarray(res_idx, dtype=int),
            chain_index=np.asarray(chain_idx, dtype=int),
        )

    def sequences(self) -> dict[str, str]:
        return {c.chain_id: c.sequence for c in self.chains}

    def with_residues(self, mapping: dict[ResidueKey, Residue]) -> "Complex":
        """Copy with selected residues replaced, everything else shared."""
        chains = []
        for c in self.chains:
            if any(r.key in mapping for r in c.residues):
                c = Chain(c.chain_id, tuple(mapping.get(r.key, r) for r in c.residues))
            chains.append(c)
        return Complex(self.id, tuple(chains), self.source_format)

    def subset(self, chain_ids) -> "Complex":
        keep = set(chain_ids)
        return Complex(self.id, tuple(c for c in self.chains if c.chain_id in keep), self.source_format)


@dataclass(frozen=True)
class CdrAnnotation:
    """CDR loops as 1-based inclusive (chain, start, end) intervals."""

    loops: dict[str, tuple[str, int, int]] = field(default_factory=dict)

    def __post_init__(self):
        for name in self.loops:
            if name not in CDR_LOOPS:
                raise ValueError(f"unknown CDR loop {name!r}")

    def ordered(self) -> list[tuple[str, tuple[str, int, int]]]:
        return [(n, self.loops[n]) for n in CDR_LOOPS if n in self.loops]

    def residue_keys(self, loop: Optional[str] = None) -> list[ResidueKey]:
        items = self.ordered() if loop is None else [(loop, self.loops[loop])]
        return [(ch, p) for _, (ch, s, e) in items for p in range(s, e + 1)]

    def index_set(self) -> set[ResidueKey]:
        return set(self.residue_keys())

    def loop_of(self, chain_id: str, pos: int) -> Optional[str]:
        for name, (ch, s, e) in self.ordered():
            if ch == chain_id and s <= pos <= e:
                return name
        return None

    def chains(self) -> list[str]:
        seen = []
        for _, (ch, _, _) in self.ordered():
            if ch not in seen:
                seen.append(ch)
        return seen

    def __len__(self):
        return len(self.loops)


def replace_aa(res: Residue, aa: str) -> Residue:
    return replace(res, aa=aa)
