from proteo_taskgen.fixtures import CHECKS, SCHEMA_8AF7, _field_agreement, find_entry, summarize, verify_fixtures
from proteo_taskgen.structure.io import to_mmcif
from proteo_taskgen.synthetic import helix_bundle


def test_missing_entries_are_reported(tmp_path):
    results = verify_fixtures(tmp_path)
    assert len(results) == len(CHECKS)
    assert all(r.status == "missing" for r in results)
    s = summarize(results)
    assert s["hard_missing"] == s["hard_total"] == sum(c.hard for c in CHECKS)
    assert s["informational_agreement"] is None


def test_find_entry(tmp_path):
    (tmp_path / "8jrk.cif.gz").write_bytes(b"")
    assert find_entry(tmp_path, "8JRK").name == "8jrk.cif.gz"
    assert find_entry(tmp_path, "6SW1") is None
    assert find_entry(tmp_path / "nope", "8JRK") is None


def test_wrong_structure_fails_not_crashes(tmp_path):
    (tmp_path / "8AF7.cif").write_text(to_mmcif(helix_bundle([30], seed=0, structure_id="8AF7")))
    results = [r for r in verify_fixtures(tmp_path) if r.entry == "8AF7"]
    assert [r.status for r in results] == ["fail"]
    assert results[0].actual["global"]["num_chains"] == 1


def test_field_agreement():
    assert _field_agreement("EECCH", "EECCC") == 0.8
    assert _field_agreement({"C": [1, 2, 3, 4, 5]}, {"C": [1, 2, 9, 9, 9]}) == 0.4
    assert _field_agreement(SCHEMA_8AF7, SCHEMA_8AF7) == 1.0
