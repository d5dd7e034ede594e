import functools

import pytest

from stokesreg import generate_nodes, parse_surface

ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def nodes(surface_spec, h):
    """Quadrature set cached across the whole session."""
    return generate_nodes(parse_surface(surface_spec), h)


@pytest.fixture(scope="session")
def sphere16():
    return nodes("sphere", 1 / 16)


@pytest.fixture(scope="session")
def sphere32():
    return nodes("sphere", 1 / 32)


@pytest.fixture(scope="session")
def ellipsoid16():
    return nodes("ellipsoid", 1 / 16)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
