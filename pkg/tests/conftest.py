import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from expobs.torus import SystemDescriptor  # noqa: E402

CAT = [[2, 1], [1, 1]]
DOUBLE = [[2, 0], [0, 2]]
ANOSOV_ENDO = [[3, 1], [1, 1]]

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def doubling():
    return SystemDescriptor.circle_power(2)


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
