import numpy as np
import pytest

from varchoquard.exponents import default_bundle
from varchoquard.grid import Grid1D, GridFunction


@pytest.fixture(scope="session")
def bundle():
    return default_bundle()


@pytest.fixture(scope="session")
def grid401():
    return Grid1D(-1.0, 1.0, 401)


@pytest.fixture(scope="session")
def grid101():
    return Grid1D(-1.0, 1.0, 101)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def smooth_u(grid, rng, modes=5, scale=0.5):
    """Random zero-boundary sine combination."""
    c = rng.standard_normal(modes) * scale
    t = (grid.nodes - grid.a) / (grid.b - grid.a)
    v = sum(c[k] * np.sin((k + 1) * np.pi * t) for k in range(modes))
    return GridFunction.from_callable(grid, lambda x: v, True)


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
