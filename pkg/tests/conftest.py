import numpy as np
import pytest

from proteo_taskgen import compute_labels
from proteo_taskgen.structure.cdr import load_annotation_document
from proteo_taskgen.synthetic import antibody_complex, helix_bundle


@pytest.fixture(scope="session")
def antibody():
    cx, ann = antibody_complex(seed=0, structure_id="ABAG1")
    return cx, ann


@pytest.fixture(scope="session")
def antibody_labels(antibody):
    return compute_labels(antibody[0])


@pytest.fixture(scope="session")
def antibody_doc(antibody):
    cx, ann = antibody
    return load_annotation_document(cx, ann)


@pytest.fixture(scope="session")
def bundle():
    return helix_bundle([20, 20], spacing=10.0, seed=3, structure_id="HB1")


@pytest.fixture(scope="session")
def bundle_labels(bundle):
    return compute_labels(bundle)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance verdict line, printed in the terminal summary."""
    def record(number, passed, detail=""):
        verdict = passed if isinstance(passed, str) else ("PASS" if passed else "FAIL")
        ACCEPTANCE_LINES.append(f"criterion {number:>2}: {verdict}  {detail}".rstrip())
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
