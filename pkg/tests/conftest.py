from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bninfo.io import bundled_network, bundled_network_path  # noqa: E402

FIXTURES = (
    "gbn_B",
    "gbn_B_prime",
    "gbn_fitted_B",
    "gbn_fitted_B_prime",
    "dbn_B",
    "dbn_B_prime",
    "clgbn_B",
    "clgbn_B_prime",
)


@pytest.fixture(scope="session")
def nets():
    return {name: bundled_network(name) for name in FIXTURES}


@pytest.fixture(scope="session")
def net_paths():
    return {name: str(bundled_network_path(name)) for name in FIXTURES}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# -- one line per acceptance criterion at the end of the run ---------------

_ACCEPTANCE: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, outcome in _ACCEPTANCE.items():
        name = nodeid.split("::")[-1]
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
