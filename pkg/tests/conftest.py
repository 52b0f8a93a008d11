from __future__ import annotations

import pytest

from krein_spectra.geometry import LShape, Rectangle, rasterize


@pytest.fixture(scope="session")
def square_half():
    return rasterize(Rectangle(1.0, 1.0), 0.5)


@pytest.fixture(scope="session")
def square_quarter():
    return rasterize(Rectangle(1.0, 1.0), 0.25)


@pytest.fixture(scope="session")
def lshape_quarter():
    return rasterize(LShape(1.0, 0.5), 0.25)


@pytest.fixture(scope="session")
def lshape_eighth():
    return rasterize(LShape(1.0, 0.5), 0.125)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
