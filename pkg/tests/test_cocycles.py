import numpy as np
import pytest
import sympy as sp
from scipy.integrate import quad

from berslab.cocycles import (
    VectorFieldPair,
    bott_coboundary_residual,
    bott_cocycle,
    bott_infinitesimal_ratio,
    bott_thurston_coboundary_residual,
    bott_thurston_p,
    bracket,
    flow_step,
    gelfand_fuchs,
    gelfand_fuchs_third,
    gf_jacobi_residual,
    omega_p,
)
from berslab.numerics import Decay, sup_norm


@pytest.fixture(scope="module")
def fields(grid):
    x = grid.x
    return [grid.sample(f, Decay.VANISHES) for f in
            (lambda t: np.exp(-t ** 2), lambda t: t * np.exp(-t ** 2), lambda t: np.exp(-(t - 1) ** 2 / 2))]


def test_gelfand_fuchs_symbolic_value(fields):
    t = sp.symbols("t", real=True)
    u, v = sp.exp(-t ** 2), t * sp.exp(-t ** 2)
    exact = float(sp.integrate(sp.diff(u, t) * sp.diff(v, t, 2), (t, -sp.oo, sp.oo)))
    assert gelfand_fuchs(fields[0], fields[1]) == pytest.approx(exact, abs=1e-10)
    assert gelfand_fuchs_third(fields[0], fields[1]) == pytest.approx(exact, abs=1e-9)
    assert omega_p(fields[0], fields[1], 2.0) == pytest.approx(exact / 4, abs=1e-10)


def test_gelfand_fuchs_is_antisymmetric(fields):
    u, v, _ = fields
    assert gelfand_fuchs(u, v) == pytest.approx(-gelfand_fuchs(v, u), abs=1e-10)


def test_bracket_closed_form(fields, grid):
    x = grid.x
    pair = VectorFieldPair(fields[0], fields[1])
    e = np.exp(-x ** 2)
    exact = e * (1 - 2 * x ** 2) * e - x * e * (-2 * x * e)
    assert sup_norm(pair.bracket().values - exact) < 1e-10
    assert sup_norm(bracket(fields[0], fields[0]).values) == 0


def test_jacobi_identity(fields):
    assert gf_jacobi_residual(*fields) < 1e-9


def test_bott_cocycle_against_quadrature(tanh_map, tanh_map_b):
    phi, psi = tanh_map.diffeo, tanh_map_b.diffeo
    a_phi = tanh_map.a
    b = tanh_map_b.a

    def integrand(x):
        y = tanh_map_b.fn["phi"](x)
        outer = np.log(1 + a_phi / np.cosh(y) ** 2)
        d1 = 1 + b / np.cosh(x) ** 2
        d2 = -2 * b * np.tanh(x) / np.cosh(x) ** 2
        return 0.5 * outer * d2 / d1

    exact = quad(integrand, -20, 20, limit=400, epsabs=1e-14)[0]
    assert bott_cocycle(phi, psi) == pytest.approx(exact, abs=1e-10)


def test_bott_coboundaries(diffeos):
    for i in range(len(diffeos) - 2):
        a, b, c = diffeos[i:i + 3]
        assert bott_coboundary_residual(a, b, c) < 1e-10
        assert bott_thurston_coboundary_residual(a, b, c, 3.0) < 1e-10


def test_bott_thurston_rescales_bott(diffeos):
    phi, psi = diffeos[0], diffeos[3]
    for p in (1.0, 2.0, 5.0):
        assert bott_thurston_p(phi, psi, p) == pytest.approx(2 * bott_cocycle(phi, psi) / p ** 2, abs=1e-14)


def test_bott_linearizes_to_half_gelfand_fuchs(fields):
    u, v, _ = fields
    target = 0.5 * gelfand_fuchs(u, v)
    errs = [abs(bott_infinitesimal_ratio(u, v, t, t) - target) for t in (2e-3, 1e-3)]
    assert errs[1] / abs(target) < 1e-4
    assert errs[1] < errs[0]


def test_flow_step_requires_monotonicity(fields):
    with pytest.raises(ValueError):
        flow_step(fields[0], 10.0)
