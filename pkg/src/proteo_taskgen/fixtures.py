"""Golden checks against published PDB entries.

The entries are not bundled. Point :func:`verify_fixtures` at a directory
holding ``8JRK``, ``6SW1``, ``7RAN``, ``8AF7`` and ``7ATF`` (mmCIF or PDB,
optionally gzipped). Hard checks must match exactly; informational checks
report the fraction of agreeing fields.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional, Union

from .errors import ProteoTaskgenError
from .labels.labelset import LabelRules, LabelSet, compute_labels
from .structure.io import read_structure
from .tasks.stage1 import schema_b1

_SUFFIXES = (".cif", ".cif.gz", ".mmcif", ".pdb", ".pdb.gz", ".ent", ".ent.gz")


def _chain_block(chain, frac, runs):
    return {
        "chain_id": chain, "length_bin": "200-300",
        "secondary_structure_fraction_bins": dict(zip("HEC", frac)),
        "major_secondary_structure": "H",
        "secondary_structure_longest_run_bins": dict(zip("HEC", runs)),
        "secondary_structure_segment_count_bins": {"H": ">5", "E": ">5"},
    }


SCHEMA_8AF7 = {"task_type": "ALIGNMENT_SCHEMA_B1_V2", "global": {"num_chains": 1},
               "chains": [_chain_block("A", ("40-50", "20-30", "20-30"), ("9-15", "16-30", "5-8"))]}
SCHEMA_7ATF = {"task_type": "ALIGNMENT_SCHEMA_B1_V2", "global": {"num_chains": 2},
               "chains": [_chain_block(c, ("50-60", "20-30", "20-30"), ("16-30", "9-15", "9-15")) for c in "AB"]}


@dataclass
class Check:
    entry: str
    name: str
    hard: bool
    expected: Any
    compute: Callable[[LabelSet], Any]


def _window(labels: LabelSet, chain: str, start: int, end: int, kind: str) -> str:
    get = labels.ss3_of if kind == "ss" else labels.rsa_of
    return "".join(get((chain, p)) for p in range(start, end + 1))


CHECKS = [
    Check("8JRK", "residue D22", True, "E", lambda L: L.complex.residue("D", 22).aa),
    Check("6SW1", "residue A143", True, "Q", lambda L: L.complex.residue("A", 143).aa),
    Check("7RAN", "residue C25", True, "C", lambda L: L.complex.residue("C", 25).aa),
    Check("8JRK", "contact C74-D21", True, "Contact",
          lambda L: "Contact" if L.pair(("C", 74), ("D", 21)).contact else "NotContact"),
    Check("8JRK", "dist bin C74-D21", True, "4-6", lambda L: L.pair(("C", 74), ("D", 21)).dist_bin),
    Check("6SW1", "dist bin A70-A223", True, ">16", lambda L: L.pair(("A", 70), ("A", 223)).dist_bin),
    Check("8AF7", "schema AS-B1", True, SCHEMA_8AF7, lambda L: schema_b1(L.complex, L)),
    Check("7ATF", "schema AS-B1", True, SCHEMA_7ATF, lambda L: schema_b1(L.complex, L)),
    Check("8JRK", "dssp B48-52", False, "EECCH", lambda L: _window(L, "B", 48, 52, "ss")),
    Check("8JRK", "rsa E1-5", False, "EEBEM", lambda L: _window(L, "E", 1, 5, "rsa")),
    Check("6SW1", "dssp A277-281", False, "EECCC", lambda L: _window(L, "A", 277, 281, "ss")),
    Check("6SW1", "rsa A195-199", False, "MMEMB", lambda L: _window(L, "A", 195, 199, "rsa")),
    Check("6SW1", "contact A58-A201", False, "NotContact",
          lambda L: "Contact" if L.pair(("A", 58), ("A", 201)).contact else "NotContact"),
    Check("8JRK", "chain pairs", False, [["C", "D"]], lambda L: [list(p) for p in L.chain_pair_graph[0]]),
    Check("8JRK", "top chain pair", False, ["C", "D"], lambda L: list(L.chain_pair_graph[1] or [])),
    Check("8JRK", "interface top-10", False,
          {"C": [73, 52, 9, 5, 82, 7, 96, 69, 51, 143], "D": [6, 7, 9, 8, 11, 20, 89, 33, 151, 13]},
          lambda L: L.rank(("C", "D"), 10, "interface")),
    Check("8JRK", "hotspot top-5", False, {"C": [73, 52, 82, 7, 9], "D": [6, 7, 8, 9, 11]},
          lambda L: L.rank(("C", "D"), 5, "hotspot")),
    Check("8JRK", "salt-bridge bin", False, "6-10", lambda L: L.salt_bridge_bin(("C", "D"))),
]


def _field_agreement(expected, actual) -> float:
    """Fraction of agreeing fields: characters for windows, list slots for rankings, whole value otherwise."""
    if isinstance(expected, str) and isinstance(actual, str) and len(expected) == 5 and expected.isupper() \
            and set(expected) <= set("HECBM"):
        return sum(a == b for a, b in zip(expected, actual)) / len(expected)
    if isinstance(expected, dict) and isinstance(actual, dict) and all(isinstance(v, list) for v in expected.values()):
        total = sum(len(v) for v in expected.values())
        hits = sum(len(set(v) & set(actual.get(k, []))) for k, v in expected.items())
        return hits / total if total else 1.0
    return float(expected == actual)


@dataclass
class CheckResult:
    entry: str
    name: str
    hard: bool
    status: str            # pass, fail, missing or error
    agreement: float = 0.0
    expected: Any = None
    actual: Any = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("entry", "name", "hard", "status", "agreement", "expected",
                                               "actual", "detail")}


def find_entry(fixtures_dir: Union[str, Path], entry: str) -> Optional[Path]:
    d = Path(fixtures_dir)
    if not d.is_dir():
        return None
    for p in sorted(d.iterdir()):
        low = p.name.lower()
        if any(low == entry.lower() + s for s in _SUFFIXES):
            return p
    return None


def verify_fixtures(fixtures_dir: Union[str, Path], rules: Optional[LabelRules] = None) -> list[CheckResult]:
    """Run every golden check whose entry file is present; absent entries are reported as missing."""
    cache: dict[str, Any] = {}
    out = []
    for chk in CHECKS:
        if chk.entry not in cache:
            path = find_entry(fixtures_dir, chk.entry)
            if path is None:
                cache[chk.entry] = None
            else:
                try:
                    cache[chk.entry] = compute_labels(read_structure(path, structure_id=chk.entry), rules)
                except ProteoTaskgenError as exc:
                    cache[chk.entry] = exc
        labels = cache[chk.entry]
        if labels is None:
            out.append(CheckResult(chk.entry, chk.name, chk.hard, "missing", expected=chk.expected,
                                   detail=f"{chk.entry} not found in {fixtures_dir}"))
            continue
        if isinstance(labels, Exception):
            out.append(CheckResult(chk.entry, chk.name, chk.hard, "error", expected=chk.expected, detail=str(labels)))
            continue
        try:
            actual = chk.compute(labels)
        except ProteoTaskgenError as exc:
            out.append(CheckResult(chk.entry, chk.name, chk.hard, "error", expected=chk.expected, detail=str(exc)))
            continue
        agree = _field_agreement(chk.expected, actual)
        out.append(CheckResult(chk.entry, chk.name, chk.hard, "pass" if actual == chk.expected else "fail",
                               agree, chk.expected, actual))
    return out


def summarize(results: list[CheckResult]) -> dict:
    hard = [r for r in results if r.hard]
    info = [r for r in results if not r.hard and r.status in ("pass", "fail")]
    return {
        "hard_passed": sum(r.status == "pass" for r in hard),
        "hard_total": len(hard),
        "hard_missing": sum(r.status == "missing" for r in hard),
        "informational_agreement": sum(r.agreement for r in info) / len(info) if info else None,
    }
