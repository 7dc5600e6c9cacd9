"""Canonical complex JSON, simple writers, file reading with an optional cache."""

from __future__ import annotations

import gzip
import hashlib
import json
import os
from pathlib import Path
from typing import Optional, Union

from ..constants import ONE_TO_THREE
from ..errors import ParseError
from .model import AtomRecord, Chain, Complex, Residue
from .parse import guess_format, parse_structure

CACHE_ENV = "PROTEO_TASKGEN_CACHE"
COMPLEX_SCHEMA_VERSION = 1


def complex_to_dict(cx: Complex) -> dict:
    return {
        "schema_version": COMPLEX_SCHEMA_VERSION,
        "id": cx.id,
        "source_format": cx.source_format,
        "chains": [
            {
                "chain_id": ch.chain_id,
                "residues": [
                    {
                        "pos": r.pos,
                        "aa": r.aa,
                        "name": r.name,
                        "author_seq": r.author_seq,
                        "author_ins": r.author_ins,
                        "atoms": [
                            {
                                "name": a.name,
                                "element": a.element,
                                "pos": list(a.pos),
                                "alt_loc": a.alt_loc,
                                "occupancy": a.occupancy,
                            }
                            for a in r.atoms
                        ],
                    }
                    for r in ch.residues
                ],
            }
            for ch in cx.chains
        ],
    }


def complex_from_dict(doc: dict) -> Complex:
    try:
        chains = []
        for ch in doc["chains"]:
            cid = ch["chain_id"]
            residues = tuple(
                Residue(
                    chain_id=cid,
                    pos=int(r["pos"]),
                    aa=r["aa"],
                    atoms=tuple(
                        AtomRecord(a["name"], a["element"], tuple(float(v) for v in a["pos"]),
                                   a.get("alt_loc"), float(a.get("occupancy", 1.0)))
                        for a in r["atoms"]
                    ),
                    name=r.get("name", "UNK"),
                    author_seq=r.get("author_seq"),
                    author_ins=r.get("author_ins", ""),
                )
                for r in ch["residues"]
            )
            chains.append(Chain(cid, residues))
        return Complex(doc["id"], tuple(chains), doc.get("source_format", "mmcif"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"invalid complex JSON: {exc}") from None


def complex_to_json(cx: Complex) -> str:
    return json.dumps(complex_to_dict(cx), separators=(",", ":"))


def complex_from_json(text: str) -> Complex:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid complex JSON: {exc}") from None
    return complex_from_dict(doc)


def to_pdb(cx: Complex) -> str:
    """Render as PDB ATOM records (dense positions become residue numbers)."""
    lines = []
    serial = 1
    for ch in cx.chains:
        if len(ch.chain_id) != 1:
            raise ValueError(f"PDB format needs one-character chain ids, got {ch.chain_id!r}")
        for r in ch.residues:
            resname = r.name if r.name != "UNK" or r.aa == "X" else ONE_TO_THREE.get(r.aa, "UNK")
            for a in r.atoms:
                name = a.name if len(a.name) == 4 or len(a.element) == 2 else f" {a.name}"
                x, y, z = a.pos
                lines.append(
                    f"ATOM  {serial:5d} {name:<4s}{a.alt_loc or ' '}{resname:>3s} {ch.chain_id}{r.pos:4d}    "
                    f"{x:8.3f}{y:8.3f}{z:8.3f}{a.occupancy:6.2f}{0.0:6.2f}          {a.element:>2s}"
                )
                serial += 1
        lines.append("TER")
    lines.append("END")
    return "\n".join(lines) + "\n"


def to_mmcif(cx: Complex) -> str:
    """Minimal mmCIF with one polypeptide entity per chain."""
    out = [f"data_{cx.id}", f"_entry.id {cx.id}", "#", "loop_", "_entity_poly.entity_id", "_entity_poly.type"]
    for k, _ in enumerate(cx.chains, 1):
        out.append(f"{k} 'polypeptide(L)'")
    out += ["#", "loop_"] + [f"_atom_site.{c}" for c in (
        "group_PDB", "id", "type_symbol", "label_atom_id", "label_alt_id", "label_comp_id", "label_asym_id",
        "label_entity_id", "label_seq_id", "pdbx_PDB_ins_code", "Cartn_x", "Cartn_y", "Cartn_z",
        "occupancy", "auth_seq_id", "auth_asym_id", "pdbx_PDB_model_num")]
    serial = 1
    for k, ch in enumerate(cx.chains, 1):
        for r in ch.residues:
            resname = r.name if r.name != "UNK" or r.aa == "X" else ONE_TO_THREE.get(r.aa, "UNK")
            for a in r.atoms:
                name = f'"{a.name}"' if "'" in a.name else a.name
                x, y, z = a.pos
                out.append(
                    f"ATOM {serial} {a.element} {name} {a.alt_loc or '.'} {resname} {ch.chain_id} {k} {r.pos} ? "
                    f"{x:.3f} {y:.3f} {z:.3f} {a.occupancy:.2f} {r.pos} {ch.chain_id} 1"
                )
                serial += 1
    out.append("#")
    return "\n".join(out) + "\n"


def _read_bytes(path: Path) -> bytes:
    data = path.read_bytes()
    if path.suffix == ".gz":
        data = gzip.decompress(data)
    return data


def structure_id_from_path(path: Union[str, Path]) -> str:
    name = Path(path).name
    for suffix in (".gz", ".cif", ".mmcif", ".pdb", ".ent"):
        if name.lower().endswith(suffix):
            name = name[: -len(suffix)]
    return name


def read_structure(path: Union[str, Path], structure_id: Optional[str] = None,
                   cache_dir: Optional[Union[str, Path]] = None) -> Complex:
    """Read a structure file, consulting the parsed-structure cache when configured.

    The cache directory comes from ``cache_dir`` or the ``PROTEO_TASKGEN_CACHE``
    environment variable; entries are keyed by the SHA-256 of the file bytes.
    """
    path = Path(path)
    sid = structure_id or structure_id_from_path(path)
    data = _read_bytes(path)
    cache = cache_dir or os.environ.get(CACHE_ENV)
    entry = None
    if cache:
        digest = hashlib.sha256(data + b"\0" + sid.encode()).hexdigest()
        entry = Path(cache) / f"{digest}.json"
        if entry.exists():
            try:
                return complex_from_json(entry.read_text())
            except ParseError:
                pass
    cx = parse_structure(data, guess_format(str(path)), structure_id=sid)
    if entry is not None:
        entry.parent.mkdir(parents=True, exist_ok=True)
        tmp = entry.with_suffix(f".{os.getpid()}.tmp")
        tmp.write_text(complex_to_json(cx))
        tmp.replace(entry)
    return cx
