"""Schwarzian operators, the Sturm-Liouville pair, Liouville conjugation and
the density-side score and Fisher identities.

The Schwarzian of a diffeomorphism is evaluated in its potential form
``S = u'' - u'^2/2`` with ``u = log phi'``; the ratio form is kept as an
independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffeo import Density, Diffeo, compose, preimages
from .numerics import (
    Decay,
    RealFunction,
    diff_array,
    integral,
    simpson_array,
    sup_norm,
    wk1_seminorm,
)

SUPPORT_MARGIN = 0.1


def _d(values: np.ndarray, grid, order: int = 1) -> np.ndarray:
    return diff_array(values, grid.h, order)


def _vanishing(grid, values) -> RealFunction:
    return RealFunction(grid, values, Decay.VANISHES)


def schwarzian(phi: Diffeo) -> RealFunction:
    """``S(phi) = u'' - u'^2 / 2`` with ``u = log phi'``."""
    u = phi.log_jac
    du = _d(u, phi.grid)
    return _vanishing(phi.grid, _d(u, phi.grid, 2) - 0.5 * du ** 2)


def schwarzian_ratio(phi: Diffeo) -> RealFunction:
    """Ratio form ``phi'''/phi' - 1.5 (phi''/phi')^2`` (cross-check only)."""
    d1 = phi.jac
    d2 = _d(phi.h.values, phi.grid)
    d3 = _d(phi.h.values, phi.grid, 2)
    return _vanishing(phi.grid, d3 / d1 - 1.5 * (d2 / d1) ** 2)


def _log_slope(phi: Diffeo) -> np.ndarray:
    """``phi''/phi' = u'``."""
    return _d(phi.log_jac, phi.grid)


def schwarzian_cocycle_residual(phi: Diffeo, psi: Diffeo) -> float:
    """Sup defect of ``S(phi o psi) = (S(phi) o psi) psi'^2 + S(psi)``."""
    lhs = schwarzian(compose(phi, psi)).values
    rhs = schwarzian(phi).at(psi.positions) * psi.jac ** 2 + schwarzian(psi).values
    return sup_norm(lhs - rhs)


def lp_schwarzian(phi: Diffeo, p: float) -> RealFunction:
    """L^p-Schwarzian evaluated in p-root coordinates.

    With ``f = p (phi'^(1/p) - 1)`` and ``theta = 1 + f/p`` this is
    ``f'' - (p - 1)/(2p) f'^2 / theta``, i.e. ``p theta'' - p(p-1)/2 theta'^2/theta``.
    """
    if not 1 <= p < np.inf:
        raise ValueError(f"need 1 <= p < inf, got {p}")
    g = phi.grid
    f = p * np.expm1(phi.log_jac / p)
    df = _d(f, g)
    theta = 1.0 + f / p
    return _vanishing(g, _d(f, g, 2) - (p - 1) / (2 * p) * df ** 2 / theta)


def lp_schwarzian_definition(phi: Diffeo, p: float) -> RealFunction:
    """``(3/(2p) (phi''/phi')^2 + S(phi)) phi'^(1/p)`` (cross-check form)."""
    ratio = _log_slope(phi)
    vals = (1.5 / p * ratio ** 2 + schwarzian(phi).values) * np.exp(phi.log_jac / p)
    return _vanishing(phi.grid, vals)


@dataclass(frozen=True)
class CompositionDefect:
    """Three-term law residual and the size of the cross term it needs."""

    identity_residual: float
    cross_term: float


def lp_schwarzian_composition_residual(phi: Diffeo, psi: Diffeo, p: float) -> CompositionDefect:
    """Check the composition law of the L^p-Schwarzian.

    ``S_p(phi o psi) = (S_p(phi) o psi) psi'^(2+1/p) + S_p(psi) (phi' o psi)^(1/p)
    + (3/p) ((phi''/phi') o psi) psi'' (phi o psi)'^(1/p)``.  The last term is
    what keeps ``S_p`` from being a cocycle; its sup is reported separately.
    """
    chi = compose(phi, psi)
    g = psi.grid
    y = psi.positions
    ratio_phi = _vanishing(g, _log_slope(phi))
    jac_phi_at = phi.jac_at(y)
    psi2 = _d(psi.h.values, g)
    cross = 3.0 / p * ratio_phi.at(y) * psi2 * chi.jac ** (1.0 / p)
    rhs = (lp_schwarzian(phi, p).at(y) * psi.jac ** (2 + 1.0 / p)
           + lp_schwarzian(psi, p).values * jac_phi_at ** (1.0 / p)
           + cross)
    return CompositionDefect(sup_norm(lp_schwarzian(chi, p).values - rhs), sup_norm(cross))


def sp_asymptotic_residual(phi: Diffeo, p: float, k: int = 0) -> float:
    """``W^{k,1}`` seminorm of ``S_p`` minus its expansion through ``p^-2``."""
    u = phi.log_jac
    du = _d(u, phi.grid)
    s = schwarzian(phi).values
    approx = s + (u * s + 1.5 * du ** 2) / p + (0.5 * u ** 2 * s + 1.5 * u * du ** 2) / p ** 2
    rem = lp_schwarzian(phi, p).values - approx
    return wk1_seminorm(RealFunction(phi.grid, rem), k)


@dataclass(frozen=True)
class SturmLiouvillePair:
    """Solutions ``y1 = phi phi'^(-1/2)``, ``y2 = phi'^(-1/2)`` of ``y'' + S y / 2 = 0``."""

    y1: RealFunction
    y2: RealFunction
    ode_residual: float
    wronskian_defect: float


def sturm_liouville_pair(phi: Diffeo) -> SturmLiouvillePair:
    g = phi.grid
    y2 = np.exp(-0.5 * phi.log_jac)
    y1 = phi.positions * y2
    half_s = 0.5 * schwarzian(phi).values
    ode = max(sup_norm(_d(y, g, 2) + half_s * y) for y in (y1, y2))
    wr = _d(y1, g) * y2 - y1 * _d(y2, g)
    return SturmLiouvillePair(RealFunction(g, y1), RealFunction(g, y2, Decay.TENDS_TO_ONE),
                              ode, sup_norm(wr - 1.0))


def _check_support(f: RealFunction, margin: float = SUPPORT_MARGIN, what: str = "test function"):
    g = f.grid
    edge = margin * g.length
    outside = (g.x < g.x_min + edge) | (g.x > g.x_max - edge)
    if np.any(np.abs(f.values[outside]) > 1e-14):
        raise ValueError(f"{what} must be supported away from the window ends "
                         f"(margin {edge:g})")


def liouville_conjugation_residual(phi: Diffeo, q: RealFunction, testfn: RealFunction,
                                   form: str = "conjugation") -> float:
    """Residual of the Liouville conjugation of ``d^2 + q`` by ``L f = phi'^(-1/2) f o phi``.

    ``form="conjugation"`` applies ``L (d^2 + q) L^{-1}`` to ``testfn`` and
    compares ``phi'^2`` times it with ``(d^2 + q(phi) phi'^2 + S(phi)/2) testfn``.
    ``form="intertwining"`` compares ``(d^2 + A q) L testfn`` with
    ``phi'^2 L (d^2 + q) testfn``, where ``A q = (q o phi) phi'^2 + S(phi)/2``.
    The sup is taken over the nodes away from the window ends.
    """
    _check_support(testfn)
    g = phi.grid
    x = g.x
    f = testfn.values
    half_s = 0.5 * schwarzian(phi).values
    pulled_q = q.at(phi.positions) * phi.jac ** 2
    if form == "conjugation":
        y = preimages(phi, x)
        v = np.sqrt(phi.jac_at(y)) * testfn.at(y)
        w = _vanishing(g, _d(v, g, 2) + q.values * v)
        lhs = phi.jac ** 2 * phi.jac ** -0.5 * w.at(phi.positions)
        rhs = _d(f, g, 2) + (pulled_q + half_s) * f
    elif form == "intertwining":
        lf = phi.jac ** -0.5 * testfn.at(phi.positions)
        lhs = _d(lf, g, 2) + (pulled_q + half_s) * lf
        inner = _vanishing(g, _d(f, g, 2) + q.values * f)
        rhs = phi.jac ** 2 * phi.jac ** -0.5 * inner.at(phi.positions)
    else:
        raise ValueError(f"unknown form {form!r}")
    edge = SUPPORT_MARGIN * g.length / 2
    interior = (x > g.x_min + edge) & (x < g.x_max - edge)
    return sup_norm((lhs - rhs)[interior])


def projective_action(q: RealFunction, psi: Diffeo) -> RealFunction:
    """Right action ``q . psi = (q o psi) psi'^2 + S(psi)``."""
    vals = q.at(psi.positions) * psi.jac ** 2 + schwarzian(psi).values
    return RealFunction(q.grid, vals, q.decay)


def projective_action_residual(q: RealFunction, psi1: Diffeo, psi2: Diffeo) -> float:
    """Sup defect of ``(q . psi1) . psi2 = q . (psi1 o psi2)``."""
    lhs = projective_action(projective_action(q, psi1), psi2)
    rhs = projective_action(q, compose(psi1, psi2))
    return sup_norm(lhs.values - rhs.values)


def infinitesimal_schwarzian_residual(u: RealFunction, t: float) -> float:
    """``sup |S(x + t u) - t u'''|``, which is ``O(t^2)``."""
    if abs(t) < 1e-6:
        raise ValueError("t below 1e-6: cancellation dominates the residual")
    g = u.grid
    du = _d(u.values, g)
    if np.min(1.0 + t * du) <= 0:
        raise ValueError("t too large: x + t u is not monotone")
    phi_t = Diffeo(RealFunction(g, t * du, Decay.VANISHES))
    return sup_norm(schwarzian(phi_t).values - t * _d(u.values, g, 3))


# ---------------------------------------------------------------------------
# density side


@dataclass(frozen=True)
class ScoreData:
    """Score ``s = (log g)'`` with weighted and flat Fisher information."""

    s: RealFunction
    I: float
    I_flat: float


def score(mu: Density) -> ScoreData:
    g = mu.grid
    s = _d(np.log1p(mu.gm1.values), g)
    return ScoreData(_vanishing(g, s), float(simpson_array(s ** 2 * mu.g, g.h)),
                     float(simpson_array(s ** 2, g.h)))


def score_curvature(mu: Density) -> RealFunction:
    """Density Schwarzian ``s' - s^2/2``."""
    s = score(mu).s.values
    return _vanishing(mu.grid, _d(s, mu.grid) - 0.5 * s ** 2)


def fisher_information_sqrt(mu: Density) -> float:
    """Fisher information through ``4 int ((sqrt g)')^2``."""
    root = np.sqrt(mu.g)
    return 4.0 * float(simpson_array(_d(root, mu.grid) ** 2, mu.grid.h))


def mean_schwarzian_residual(mu: Density) -> float:
    """``|int S(mu) g + 1.5 I(mu)|``."""
    mean = float(simpson_array(score_curvature(mu).values * mu.g, mu.grid.h))
    return abs(mean + 1.5 * score(mu).I)


def _probability_score(density: RealFunction) -> np.ndarray:
    gv = density.values
    if np.min(gv) <= 0:
        raise ValueError("probability density must be positive on the window")
    mass = integral(density)
    if abs(mass - 1.0) > 1e-6:
        raise ValueError(f"density integrates to {mass:.9g}, expected 1")
    return _d(np.log(gv), density.grid)


def curvature_norm_gap(density: RealFunction) -> float:
    """``||S(mu)||_{L^2(mu)} - 1.5 I(mu)`` for a probability density on the window."""
    s = _probability_score(density)
    gv, h = density.values, density.grid.h
    curv = _d(s, density.grid) - 0.5 * s ** 2
    return float(np.sqrt(simpson_array(curv ** 2 * gv, h)) - 1.5 * simpson_array(s ** 2 * gv, h))


@dataclass(frozen=True)
class BhattacharyyaReport:
    bound: float
    norm_u1: float
    norm_v2: float
    inner: float
    decomposition_residual: float


def bhattacharyya_bound(density: RealFunction) -> BhattacharyyaReport:
    """Second-order Bhattacharyya bound for location estimation.

    ``u1 = -s`` and ``v2 = s' + s^2`` with ``L^2(mu)`` inner products; the bound
    is ``|v2|^2 / (|u1|^2 |v2|^2 - <u1, v2>^2)``.  Also returns the sup defect of
    the split ``v2 = S(mu) + 1.5 s^2``.
    """
    s = _probability_score(density)
    gv, h = density.values, density.grid.h
    ds = _d(s, density.grid)
    u1 = -s
    v2 = ds + s ** 2
    nu = float(simpson_array(u1 ** 2 * gv, h))
    nv = float(simpson_array(v2 ** 2 * gv, h))
    uv = float(simpson_array(u1 * v2 * gv, h))
    det = nu * nv - uv ** 2
    if not det > 1e-12 * nu * nv:
        raise ValueError("degenerate Gram determinant: u1 and v2 are proportional")
    curv = ds - 0.5 * s ** 2
    return BhattacharyyaReport(nv / det, nu, nv, uv, sup_norm(v2 - curv - 1.5 * s ** 2))
