import numpy as np
import pytest
import sympy as sp

from berslab.diffeo import Density, jacobian
from berslab.families import bump_test_function
from berslab.numerics import Decay, RealFunction, sup_norm
from berslab.projective import (
    bhattacharyya_bound,
    curvature_norm_gap,
    fisher_information_sqrt,
    infinitesimal_schwarzian_residual,
    liouville_conjugation_residual,
    lp_schwarzian,
    lp_schwarzian_composition_residual,
    lp_schwarzian_definition,
    mean_schwarzian_residual,
    projective_action,
    projective_action_residual,
    schwarzian,
    schwarzian_cocycle_residual,
    schwarzian_ratio,
    score,
    score_curvature,
    sp_asymptotic_residual,
    sturm_liouville_pair,
)


def test_schwarzian_matches_symbolic(tanh_map):
    phi = tanh_map.diffeo
    exact = tanh_map("schwarzian")
    assert sup_norm(schwarzian(phi).values - exact) < 1e-8
    assert sup_norm(schwarzian_ratio(phi).values - exact) < 1e-8


def test_schwarzian_of_identity_vanishes(grid):
    from berslab.diffeo import Diffeo
    assert sup_norm(schwarzian(Diffeo.identity(grid)).values) == 0


def test_schwarzian_cocycle(diffeos, tanh_map, tanh_map_b):
    assert schwarzian_cocycle_residual(tanh_map.diffeo, tanh_map_b.diffeo) < 1e-8
    for phi, psi in zip(diffeos, diffeos[1:]):
        assert schwarzian_cocycle_residual(phi, psi) < 1e-8


@pytest.mark.parametrize("p", [1.0, 2.0, 5.0])
def test_lp_schwarzian_matches_symbolic_definition(tanh_map, p):
    e = tanh_map.expr
    x = tanh_map.symbol
    ratio = e["d2"] / e["d1"]
    defn = (sp.Rational(3, 2) / p * ratio ** 2 + e["schwarzian"]) * e["d1"] ** (1 / sp.Float(p))
    exact = sp.lambdify(x, defn, "numpy")(tanh_map.grid.x)
    phi = tanh_map.diffeo
    assert sup_norm(lp_schwarzian(phi, p).values - exact) < 1e-8
    assert sup_norm(lp_schwarzian_definition(phi, p).values - exact) < 1e-8


def test_lp_schwarzian_composition_law(diffeos):
    cross = {}
    for p in (2.0, 4.0):
        d = lp_schwarzian_composition_residual(diffeos[0], diffeos[1], p)
        assert d.identity_residual < 1e-8
        cross[p] = d.cross_term
    assert cross[4.0] / cross[2.0] == pytest.approx(0.5, rel=0.1)


def test_lp_schwarzian_tends_to_schwarzian(diffeos):
    phi = diffeos[0]
    assert sup_norm(lp_schwarzian(phi, 1e4).values - schwarzian(phi).values) < 1e-3
    with pytest.raises(ValueError):
        lp_schwarzian(phi, np.inf)


@pytest.mark.parametrize("k", [0, 1])
def test_lp_schwarzian_remainder_is_cubic(diffeos, k):
    ratio = sp_asymptotic_residual(diffeos[3], 40.0, k) / sp_asymptotic_residual(diffeos[3], 20.0, k)
    assert ratio == pytest.approx(0.125, rel=0.05)


def test_sturm_liouville_pair(diffeos):
    for phi in diffeos:
        pair = sturm_liouville_pair(phi)
        assert pair.ode_residual < 1e-7
        assert pair.wronskian_defect < 1e-10


@pytest.mark.parametrize("form", ["conjugation", "intertwining"])
def test_liouville_conjugation(diffeos, grid, form):
    q = grid.sample(lambda x: 0.3 * np.exp(-(x - 0.5) ** 2), Decay.VANISHES)
    f = bump_test_function(grid, 0.2, 3.0)
    assert liouville_conjugation_residual(diffeos[0], q, f, form) < 1e-4


def test_liouville_rejects_bad_input(diffeos, grid):
    q = grid.zeros()
    with pytest.raises(ValueError):
        liouville_conjugation_residual(diffeos[0], q, grid.sample(lambda x: np.exp(-x ** 2 / 100),
                                                                  Decay.UNRESTRICTED))
    with pytest.raises(ValueError):
        liouville_conjugation_residual(diffeos[0], q, bump_test_function(grid), "other")


def test_projective_action_is_right_action(diffeos, grid):
    q = grid.sample(lambda x: np.exp(-x ** 2), Decay.VANISHES)
    assert projective_action_residual(q, diffeos[0], diffeos[1]) < 1e-8
    zero = projective_action(grid.zeros(), diffeos[2])
    assert sup_norm(zero.values - schwarzian(diffeos[2]).values) == 0


def test_infinitesimal_schwarzian_is_second_order(grid):
    u = grid.sample(lambda x: np.exp(-x ** 2), Decay.VANISHES)
    ratio = infinitesimal_schwarzian_residual(u, 2e-2) / infinitesimal_schwarzian_residual(u, 1e-2)
    assert ratio == pytest.approx(4.0, rel=0.05)
    with pytest.raises(ValueError):
        infinitesimal_schwarzian_residual(u, 1e-8)


def test_score_of_explicit_density(grid):
    t = sp.symbols("t", real=True)
    s_expr = sp.diff(sp.log(1 + sp.exp(-t ** 2) / 2), t)
    curv_expr = sp.diff(s_expr, t) - s_expr ** 2 / 2
    s_exact, curv_exact = (sp.lambdify(t, e, "numpy")(grid.x) for e in (s_expr, curv_expr))
    mu = Density(grid.sample(lambda x: 0.5 * np.exp(-x ** 2), Decay.VANISHES))
    data = score(mu)
    assert sup_norm(data.s.values - s_exact) < 1e-9
    assert sup_norm(score_curvature(mu).values - curv_exact) < 1e-8
    assert data.I == pytest.approx(fisher_information_sqrt(mu), abs=1e-12)
    assert data.I_flat < data.I  # g >= 1 here


def test_mean_schwarzian_identity(densities):
    for mu in densities:
        assert mean_schwarzian_residual(mu) < 1e-8


def test_gaussian_probability_density(grid):
    x = grid.x
    gauss = RealFunction(grid, np.exp(-0.5 * x ** 2) / np.sqrt(2 * np.pi), Decay.VANISHES)
    # S = -1 - x^2/2 so ||S||_{L^2(mu)} = sqrt(11)/2 while 1.5 I = 1.5
    assert curvature_norm_gap(gauss) == pytest.approx(np.sqrt(11) / 2 - 1.5, abs=1e-8)
    report = bhattacharyya_bound(gauss)
    assert report.bound == pytest.approx(1.0, abs=1e-6)
    assert report.decomposition_residual < 1e-12


def test_probability_checks(grid):
    with pytest.raises(ValueError):
        curvature_norm_gap(grid.sample(lambda x: 2 * np.exp(-x ** 2), Decay.VANISHES))
