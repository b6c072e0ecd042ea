import math

import pytest

from translume import GratingConfig

ACCEPTANCE_LINES: list[str] = []


def record(line: str) -> None:
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def thermal_cfg():
    return GratingConfig(eps_b=1.0, alpha=0.05, g=1.0, Omega=1.0, c0=1.0, d=5 * 2 * math.pi)


@pytest.fixture
def conversion_cfg():
    return GratingConfig(alpha=0.05, g=1.0, Omega=1.0, d=20.0)
