import numpy as np
import pytest
import sympy as sp

from berslab.diffeo import Diffeo, jacobian
from berslab.families import CORPUS_SPECS, corpus
from berslab.numerics import Decay, Grid, RealFunction

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def grid():
    return Grid()


@pytest.fixture(scope="session")
def diffeos(grid):
    return corpus(grid)


@pytest.fixture(scope="session")
def densities(diffeos):
    return [jacobian(phi) for phi in diffeos]


@pytest.fixture(scope="session")
def corpus_specs():
    return CORPUS_SPECS


class TanhMap:
    """Closed-form diffeomorphism ``phi(x) = x + a (tanh x - tanh x_min)``.

    ``phi' = 1 + a sech^2 x``; derivatives and the Schwarzian come from sympy.
    """

    def __init__(self, grid: Grid, a: float):
        self.grid, self.a = grid, a
        x = sp.symbols("x", real=True)
        phi = x + a * (sp.tanh(x) - np.tanh(grid.x_min))
        d1, d2, d3 = (sp.diff(phi, x, k) for k in (1, 2, 3))
        self.expr = {"phi": phi, "d1": d1, "d2": d2, "d3": d3,
                     "schwarzian": d3 / d1 - sp.Rational(3, 2) * (d2 / d1) ** 2}
        self.symbol = x
        self.fn = {k: sp.lambdify(x, v, "numpy") for k, v in self.expr.items()}

    def __call__(self, name, pts=None):
        pts = self.grid.x if pts is None else pts
        return np.broadcast_to(self.fn[name](pts), np.shape(pts)).astype(float)

    @property
    def diffeo(self) -> Diffeo:
        return Diffeo(RealFunction(self.grid, self("d1") - 1.0, Decay.VANISHES))


@pytest.fixture(scope="session")
def tanh_map(grid):
    return TanhMap(grid, 0.6)


@pytest.fixture(scope="session")
def tanh_map_b(grid):
    return TanhMap(grid, -0.35)


@pytest.fixture
def acceptance():
    def record(criterion: int, passed: bool, detail: str) -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion:>2}: {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
