import re
import sys
from pathlib import Path

import pytest

import cbdetect.kernels.reference as reference_kernels

sys.path.insert(0, str(Path(__file__).parent))

try:
    from cbdetect.kernels import _speedups as compiled_kernels
except ImportError:
    compiled_kernels = None

_BACKENDS = [pytest.param(reference_kernels, id="python")]
if compiled_kernels is not None:
    _BACKENDS.append(pytest.param(compiled_kernels, id="compiled"))

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(params=_BACKENDS)
def backend(request):
    """Each available kernel backend in turn."""
    return request.param


@pytest.fixture
def tiny_jsonl() -> str:
    return str(FIXTURES / "tiny.jsonl")


@pytest.fixture
def tiny_csv() -> str:
    return str(FIXTURES / "tiny.csv")


@pytest.fixture
def videometa_dir() -> str:
    return str(FIXTURES / "videometa")


# acceptance criteria get a one-line verdict each at the end of the run
_CRITERION_LABELS = {
    1: "gradient suite matches finite differences",
    2: "metric values match independent oracles",
    3: "reduction identities hold",
    4: "metadata ablation gains >= 10 points",
    5: "separable data reaches target accuracy",
    6: "embeddings capture co-occurrence and masked tokens",
    7: "presets are byte-for-byte deterministic",
    8: "numeric invariants hold",
}
_criterion_outcomes: dict = {}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    m = re.search(r"test_criterion_(\d+)", report.nodeid)
    if m:
        n = int(m.group(1))
        _criterion_outcomes[n] = _criterion_outcomes.get(n, True) and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _criterion_outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criterion_outcomes):
        verdict = "PASS" if _criterion_outcomes[n] else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {verdict} - {_CRITERION_LABELS[n]}")
