"""mmCIF / PDB readers producing canonical :class:`Complex` objects.

Filtering rules applied to both formats:

* first model only, hydrogens dropped;
* polypeptide residues only (entity information when the file has it,
  otherwise residues that are standard amino acids or carry N/CA/C);
* waters and other non-polymer groups dropped;
* alternate locations: zero-occupancy alternates are discarded, then per
  residue the alternate with the highest mean occupancy is kept, ties broken
  alphabetically by alternate id;
* residues are re-indexed densely from 1 within each chain in file order; the
  author numbering is kept on each residue.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import Optional

from ..constants import THREE_TO_ONE, WATER_NAMES
from ..errors import EmptyComplex, ParseError
from .cif import parse_cif_block
from .model import AtomRecord, Chain, Complex, Residue


@dataclass
class _RawAtom:
    chain: str
    resseq: int
    icode: str
    resname: str
    name: str
    element: str
    alt: str
    x: float
    y: float
    z: float
    occ: float
    hetero: bool
    polymer: Optional[bool]  # None when the format carries no entity information
    subchain: str = ""


_TWO_LETTER = frozenset({"SE", "FE", "ZN", "MG", "CL", "BR", "NA", "CA", "MN", "CU", "CO", "NI", "CD", "HG"})


def _element_from_name(name: str) -> str:
    # columns 13-14 hold a right-justified element symbol in PDB atom names
    if len(name) == 4 and name[0] not in " 0123456789" and name[:2].upper() in _TWO_LETTER:
        return name[:2].upper()
    letters = [ch for ch in name if ch.isalpha()]
    return letters[0].upper() if letters else ""


def _is_hydrogen(element: str) -> bool:
    return element.upper() in ("H", "D")


def _assemble(raw: list[_RawAtom], structure_id: str, source_format: str) -> Complex:
    # group atoms into residues in file order
    residues: "OrderedDict[tuple[str, str, int, str], list[_RawAtom]]" = OrderedDict()
    for a in raw:
        if _is_hydrogen(a.element):
            continue
        if a.resname.upper() in WATER_NAMES:
            continue
        if a.alt and a.occ <= 0.0:
            continue
        residues.setdefault((a.chain, a.subchain, a.resseq, a.icode), []).append(a)

    chains: "OrderedDict[str, list[Residue]]" = OrderedDict()
    for (chain_id, _, resseq, icode), atoms in residues.items():
        atoms = _select_altloc(atoms)
        names = {a.name for a in atoms}
        resname = _dominant_resname(atoms)
        polymer_flags = {a.polymer for a in atoms}
        if False in polymer_flags and True not in polymer_flags:
            continue
        if True not in polymer_flags:
            is_aa = resname in THREE_TO_ONE or {"N", "CA", "C"} <= names
            if not is_aa:
                continue
        seen = set()
        records = []
        for a in atoms:
            if a.name in seen:
                continue
            seen.add(a.name)
            records.append(AtomRecord(
                name=a.name,
                element=a.element.upper() or _element_from_name(a.name),
                pos=(a.x, a.y, a.z),
                alt_loc=a.alt or None,
                occupancy=min(max(a.occ, 0.0), 1.0),
            ))
        chain_res = chains.setdefault(chain_id, [])
        chain_res.append(Residue(
            chain_id=chain_id,
            pos=len(chain_res) + 1,
            aa=THREE_TO_ONE.get(resname, "X"),
            atoms=tuple(records),
            name=resname,
            author_seq=resseq,
            author_ins=icode,
        ))
    if not chains:
        raise EmptyComplex(f"{structure_id}: no polymer residues")
    return Complex(
        id=structure_id,
        chains=tuple(Chain(cid, tuple(res)) for cid, res in chains.items()),
        source_format=source_format,
    )


def _select_altloc(atoms: list[_RawAtom]) -> list[_RawAtom]:
    alts: dict[str, list[float]] = {}
    for a in atoms:
        if a.alt:
            alts.setdefault(a.alt, []).append(a.occ)
    if not alts:
        return atoms
    best = sorted(alts, key=lambda k: (-sum(alts[k]) / len(alts[k]), k))[0]
    return [a for a in atoms if not a.alt or a.alt == best]


def _dominant_resname(atoms: list[_RawAtom]) -> str:
    names = [a.resname.upper() for a in atoms]
    for a in atoms:
        if a.name == "CA":
            return a.resname.upper()
    return max(set(names), key=names.count)


# -- mmCIF --------------------------------------------------------------------

def _col(items, key, n, default=None):
    values = items.get(key)
    if values is None:
        return [default] * n
    if len(values) != n:
        raise ParseError(f"column {key} has {len(values)} rows, expected {n}")
    return values


def _to_float(value, what):
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ParseError(f"bad {what} value {value!r}") from None
    if not math.isfinite(out):
        raise ParseError(f"non-finite {what} value {value!r}")
    return out


def parse_mmcif(text: str, structure_id: Optional[str] = None) -> Complex:
    block, items = parse_cif_block(text)
    if "_atom_site.cartn_x" not in items:
        raise ParseError("mmCIF file has no _atom_site coordinates")
    n = len(items["_atom_site.cartn_x"])

    polymer_entities = None
    if "_entity_poly.entity_id" in items:
        types = items.get("_entity_poly.type", [None] * len(items["_entity_poly.entity_id"]))
        polymer_entities = {
            e for e, t in zip(items["_entity_poly.entity_id"], types)
            if t is None or "polypeptide" in t.lower()
        }
    elif "_entity.id" in items and "_entity.type" in items:
        polymer_entities = {
            e for e, t in zip(items["_entity.id"], items["_entity.type"]) if (t or "").lower() == "polymer"
        }

    group = _col(items, "_atom_site.group_pdb", n, "ATOM")
    element = _col(items, "_atom_site.type_symbol", n, "")
    atom_name = items.get("_atom_site.auth_atom_id") or _col(items, "_atom_site.label_atom_id", n)
    alt = _col(items, "_atom_site.label_alt_id", n)
    comp = items.get("_atom_site.auth_comp_id") or _col(items, "_atom_site.label_comp_id", n)
    label_asym = _col(items, "_atom_site.label_asym_id", n)
    auth_asym = _col(items, "_atom_site.auth_asym_id", n)
    entity = _col(items, "_atom_site.label_entity_id", n)
    label_seq = _col(items, "_atom_site.label_seq_id", n)
    auth_seq = _col(items, "_atom_site.auth_seq_id", n)
    icode = _col(items, "_atom_site.pdbx_pdb_ins_code", n)
    xs, ys, zs = (items["_atom_site.cartn_x"], _col(items, "_atom_site.cartn_y", n),
                  _col(items, "_atom_site.cartn_z", n))
    occ = _col(items, "_atom_site.occupancy", n, "1.0")
    model = _col(items, "_atom_site.pdbx_pdb_model_num", n)

    first_model = next((m for m in model if m is not None), None)
    raw = []
    for k in range(n):
        if model[k] is not None and model[k] != first_model:
            continue
        chain = auth_asym[k] or label_asym[k]
        seq_text = auth_seq[k] if auth_seq[k] is not None else label_seq[k]
        if chain is None or seq_text is None or atom_name[k] is None or comp[k] is None:
            raise ParseError(f"atom_site row {k + 1} lacks chain, residue or atom identifiers")
        try:
            resseq = int(seq_text)
        except ValueError:
            raise ParseError(f"bad residue number {seq_text!r}") from None
        if polymer_entities is not None and entity[k] is not None:
            polymer = entity[k] in polymer_entities
        elif polymer_entities is not None:
            polymer = label_seq[k] is not None
        else:
            polymer = None
        raw.append(_RawAtom(
            chain=chain, resseq=resseq, icode=icode[k] or "", resname=comp[k], name=atom_name[k],
            element=(element[k] or ""), alt=alt[k] or "",
            x=_to_float(xs[k], "Cartn_x"), y=_to_float(ys[k], "Cartn_y"), z=_to_float(zs[k], "Cartn_z"),
            occ=_to_float(occ[k] if occ[k] is not None else "1.0", "occupancy"),
            hetero=(group[k] or "ATOM").upper() == "HETATM", polymer=polymer, subchain=label_asym[k] or "",
        ))
    sid = structure_id or (items.get("_entry.id", [None])[0]) or block
    return _assemble(raw, sid, "mmcif")


# -- PDB ----------------------------------------------------------------------

def parse_pdb(text: str, structure_id: Optional[str] = None) -> Complex:
    raw = []
    header_id = None
    seen_records = False
    for lineno, line in enumerate(text.splitlines(), 1):
        record = line[:6].strip().upper()
        if record == "HEADER" and len(line) >= 66:
            header_id = line[62:66].strip() or None
        if record == "ENDMDL":
            break
        if record not in ("ATOM", "HETATM"):
            if record:
                seen_records = True
            continue
        seen_records = True
        if len(line) < 54:
            raise ParseError(f"line {lineno}: truncated {record} record")
        try:
            resseq = int(line[22:26])
            x, y, z = float(line[30:38]), float(line[38:46]), float(line[46:54])
        except ValueError:
            raise ParseError(f"line {lineno}: malformed {record} record") from None
        occ_text = line[54:60].strip()
        occ = float(occ_text) if occ_text else 1.0
        if not all(math.isfinite(v) for v in (x, y, z, occ)):
            raise ParseError(f"line {lineno}: non-finite value")
        name = line[12:16]
        element = line[76:78].strip() if len(line) >= 78 else ""
        raw.append(_RawAtom(
            chain=line[21].strip() or "A", resseq=resseq, icode=line[26].strip(), resname=line[17:20].strip(),
            name=name.strip(), element=element or _element_from_name(name), alt=line[16].strip(),
            x=x, y=y, z=z, occ=occ, hetero=record == "HETATM", polymer=None,
        ))
    if not raw and not seen_records:
        raise ParseError("no PDB records found")
    return _assemble(raw, structure_id or header_id or "structure", "pdb")


def parse_structure(data, format: str, structure_id: Optional[str] = None) -> Complex:
    """Parse file content (bytes or str) in ``format`` ("mmcif" or "pdb").

    Raises
    ------
    ParseError
        Empty, undecodable or malformed input.
    EmptyComplex
        The file is well-formed but has no polypeptide residues.
    """
    if isinstance(data, (bytes, bytearray)):
        try:
            text = bytes(data).decode("utf-8")
        except UnicodeDecodeError:
            try:
                text = bytes(data).decode("latin-1")
            except UnicodeDecodeError as exc:  # pragma: no cover - latin-1 decodes everything
                raise ParseError(str(exc)) from None
    else:
        text = data
    if not text.strip():
        raise ParseError("empty input")
    fmt = format.lower()
    if fmt in ("mmcif", "cif"):
        return parse_mmcif(text, structure_id)
    if fmt in ("pdb", "ent"):
        return parse_pdb(text, structure_id)
    raise ValueError(f"unknown structure format {format!r}")


def guess_format(path: str) -> str:
    low = path.lower()
    for suffix in (".gz",):
        if low.endswith(suffix):
            low = low[: -len(suffix)]
    if low.endswith((".cif", ".mmcif")):
        return "mmcif"
    if low.endswith((".pdb", ".ent")):
        return "pdb"
    raise ValueError(f"cannot infer structure format from {path!r}")
