import json
from pathlib import Path

import pytest

from skewtail import SkewTParams

ORACLES = json.loads((Path(__file__).parent / "oracles" / "values.json").read_text())

# the skew test point used throughout
SKEW = SkewTParams(3.0, 0.4, 1.0, -0.5)


@pytest.fixture
def skew():
    return SKEW


@pytest.fixture(scope="session")
def oracles():
    return ORACLES


@pytest.fixture(scope="session")
def skew_sample():
    from skewtail import sample

    return sample(SKEW, 10**6, 20240611)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
