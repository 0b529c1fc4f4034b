"""Distances, explicit geodesics and Eulerian dynamics of the p-root geometry.

In the p-root chart the geometry is flat, so geodesics are straight lines
``(1-t) f0 + t f1`` and the distance is the ``L^p`` norm of the chart
difference.  The Eulerian velocity ``u = (d phi/dt) o phi^-1`` of a geodesic
satisfies the strain equation ``v_t + u v_x + v^2/p = 0`` with ``v = u_x``;
the residual functions below measure how well the sampled path satisfies it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .diffeo import Density, Diffeo, chart, chart_inverse, preimages
from .numerics import (
    Decay,
    Grid,
    RealFunction,
    cumint_array,
    diff_array,
    lp_norm,
    sup_norm,
)

VELOCITY_DT = 1e-4
# outer step for time derivatives of Eulerian fields; smaller steps amplify the
# ~1e-12 inversion noise once x-derivatives are taken
DYNAMICS_DT = 1e-2


@dataclass(frozen=True)
class GeodesicPath:
    """Straight chart line from ``phi0`` to ``phi1`` for exponent ``p``."""

    p: float
    phi0: Diffeo
    phi1: Diffeo
    t_samples: tuple = (0.0, 0.25, 0.5, 0.75, 1.0)

    def __post_init__(self) -> None:
        if not self.p >= 1:
            raise ValueError(f"need p >= 1, got {self.p}")
        if self.phi0.grid != self.phi1.grid:
            raise ValueError("endpoints must share a grid")
        for t in self.t_samples:
            geodesic_at(self, t)

    @property
    def grid(self) -> Grid:
        return self.phi0.grid


def distance_p(phi0: Diffeo, phi1: Diffeo, p: float) -> float:
    """``|| Phi_p(phi0) - Phi_p(phi1) ||_{L^p}``."""
    if not 1 < p < np.inf:
        raise ValueError(f"distance needs 1 < p < inf, got {p}")
    diff = chart(phi0, p).values - chart(phi1, p).values
    return lp_norm(RealFunction(phi0.grid, diff), p)


def _log_jac_at(path: GeodesicPath, t: float) -> np.ndarray:
    p = path.p
    if np.isinf(p):
        return (1 - t) * path.phi0.log_jac + t * path.phi1.log_jac
    theta = (1 - t) * np.exp(path.phi0.log_jac / p) + t * np.exp(path.phi1.log_jac / p)
    if np.min(theta) <= 0:
        raise ValueError(f"geodesic leaves the group at t={t}: root combination not positive")
    return p * np.log(theta)


def geodesic_at(path: GeodesicPath, t: float) -> Diffeo:
    """``phi'(t) = ((1-t) phi0'^(1/p) + t phi1'^(1/p))^p`` (log-linear for infinite p)."""
    if t == 0:
        return path.phi0
    if t == 1:
        return path.phi1
    return Diffeo(RealFunction(path.grid, np.expm1(_log_jac_at(path, t)), Decay.VANISHES))


def fisher_rao_geodesic_density(mu0: Density, mu1: Density, p: float, t: float) -> np.ndarray:
    """``((1-t) g0^(1/p) + t g1^(1/p))^p`` for densities."""
    if np.isinf(p):
        return np.exp((1 - t) * np.log(mu0.g) + t * np.log(mu1.g))
    return ((1 - t) * mu0.g ** (1 / p) + t * mu1.g ** (1 / p)) ** p


def chart_collinearity_residual(path: GeodesicPath, t: float) -> float:
    f0, f1 = chart(path.phi0, path.p).values, chart(path.phi1, path.p).values
    return sup_norm(chart(geodesic_at(path, t), path.p).values - ((1 - t) * f0 + t * f1))


def _time_derivative(fn: Callable[[float], np.ndarray], t: float, dt: float,
                     richardson: bool = True):
    """Central difference in ``t``, optionally with one Richardson step."""
    d1 = (fn(t + dt) - fn(t - dt)) / (2 * dt)
    if not richardson:
        return d1
    d2 = (fn(t + dt / 2) - fn(t - dt / 2)) / dt
    return (4 * d2 - d1) / 3


def lagrangian_velocity(path: GeodesicPath, t: float, dt: float = VELOCITY_DT) -> np.ndarray:
    """``d phi / dt`` at the nodes (labels), zero at the left end."""
    dh = _time_derivative(lambda s: np.expm1(_log_jac_at(path, s)), t, dt)
    return cumint_array(dh, path.grid.h)


def eulerian_velocity(path: GeodesicPath, t: float, dt: float = VELOCITY_DT) -> RealFunction:
    """``u = (d phi/dt) o phi^-1`` on the grid, pinned to 0 at the left end."""
    grid = path.grid
    phi_t = geodesic_at(path, t)
    lag = RealFunction(grid, lagrangian_velocity(path, t, dt))
    u = lag.at(preimages(phi_t, grid.x))
    return RealFunction(grid, u - u[0])


@dataclass(frozen=True)
class EulerianField:
    """Eulerian velocities ``u(t_j, .)`` at equally spaced times."""

    grid: Grid
    times: np.ndarray
    u: np.ndarray

    @property
    def v(self) -> np.ndarray:
        """Strain ``u_x`` per time sample."""
        return diff_array(self.u, self.grid.h, 1)


def eulerian_field(path: GeodesicPath, times) -> EulerianField:
    times = np.asarray(times, dtype=float)
    u = np.stack([eulerian_velocity(path, t).values for t in times])
    return EulerianField(path.grid, times, u)


def _dx(values, grid, order=1):
    return diff_array(values, grid.h, order)


def strain_residual_field(path: GeodesicPath, t: float, dt: float = DYNAMICS_DT,
                          richardson: bool = True) -> RealFunction:
    """``v_t + u v_x + v^2/p`` with ``v = u_x`` (no quadratic term for infinite p)."""
    grid = path.grid
    inv_p = 0.0 if np.isinf(path.p) else 1.0 / path.p
    strain = lambda s: _dx(eulerian_velocity(path, s).values, grid)
    vt = _time_derivative(strain, t, dt, richardson)
    u = eulerian_velocity(path, t).values
    v = _dx(u, grid)
    return RealFunction(grid, vt + u * _dx(v, grid) + inv_p * v ** 2)


def strain_residual(path: GeodesicPath, t: float, dt: float = DYNAMICS_DT,
                    richardson: bool = True) -> float:
    return sup_norm(strain_residual_field(path, t, dt, richardson))


def hunter_saxton_field(path: GeodesicPath, t: float, dt: float = DYNAMICS_DT,
                        richardson: bool = True) -> RealFunction:
    """``u_txx + u u_xxx + (1 + 2/p) u_x u_xx``."""
    grid = path.grid
    inv_p = 0.0 if np.isinf(path.p) else 1.0 / path.p
    uxx = lambda s: _dx(eulerian_velocity(path, s).values, grid, 2)
    utxx = _time_derivative(uxx, t, dt, richardson)
    u = eulerian_velocity(path, t).values
    return RealFunction(grid, utxx + u * _dx(u, grid, 3)
                        + (1 + 2 * inv_p) * _dx(u, grid) * _dx(u, grid, 2))


def hunter_saxton_residual(path: GeodesicPath, t: float, dt: float = DYNAMICS_DT,
                           richardson: bool = True) -> float:
    return sup_norm(hunter_saxton_field(path, t, dt, richardson))


def covariant_derivative(u_field: EulerianField, a_field: EulerianField, p: float) -> RealFunction:
    """``a_t + u a_x - ((p-1)/p) int_{-inf}^x a_x u_x`` at the middle time sample.

    For infinite ``p`` the coefficient is taken as its limit 1.
    """
    times = a_field.times
    if len(times) < 3 or len(times) % 2 == 0 or not np.allclose(np.diff(times), times[1] - times[0]):
        raise ValueError("need an odd number (>= 3) of equally spaced time samples")
    if not np.array_equal(times, u_field.times):
        raise ValueError("fields must share their time samples")
    grid = a_field.grid
    mid = len(times) // 2
    dt = times[1] - times[0]
    at = (a_field.u[mid + 1] - a_field.u[mid - 1]) / (2 * dt)
    u = u_field.u[mid]
    ax = _dx(a_field.u[mid], grid)
    coeff = 1.0 if np.isinf(p) else (p - 1) / p
    return RealFunction(grid, at + u * ax - coeff * cumint_array(ax * _dx(u, grid), grid.h))


def statistical_velocity(path: GeodesicPath, t: float, dt: float = VELOCITY_DT) -> np.ndarray:
    """``v = d/dt log g`` at fixed label, ``g = phi'(t)``."""
    return _time_derivative(lambda s: _log_jac_at(path, s), t, dt)


def statistical_velocity_riccati_residual(path: GeodesicPath, t: float, dt: float = DYNAMICS_DT,
                                          richardson: bool = True) -> float:
    """``sup |v_t + v^2/p|`` along labels."""
    inv_p = 0.0 if np.isinf(path.p) else 1.0 / path.p
    vt = _time_derivative(lambda s: statistical_velocity(path, s), t, dt, richardson)
    v = statistical_velocity(path, t)
    return sup_norm(vt + inv_p * v ** 2)


def riccati_closed_form_gap(path: GeodesicPath, t: float) -> float:
    """``sup |v(t) - v(0) / (1 + t v(0)/p)|`` (``v`` constant for infinite p)."""
    v0 = statistical_velocity(path, 0.0)
    vt = statistical_velocity(path, t)
    pred = v0 if np.isinf(path.p) else v0 / (1 + t * v0 / path.p)
    return sup_norm(vt - pred)


def finsler_speed(path: GeodesicPath, t: float) -> float:
    """``|| u_x(t) ||_{L^p}`` from the Eulerian velocity."""
    u = eulerian_velocity(path, t)
    return lp_norm(RealFunction(path.grid, _dx(u.values, path.grid)), path.p)


def path_length(path: GeodesicPath, nodes: int = 64) -> float:
    """Gauss-Legendre quadrature of the Finsler speed over ``[0, 1]``."""
    xs, ws = np.polynomial.legendre.leggauss(nodes)
    ts, ws = 0.5 * (xs + 1), 0.5 * ws
    return float(sum(w * finsler_speed(path, t) for t, w in zip(ts, ws)))


@dataclass(frozen=True)
class IsometryCheck:
    chart_norm: float
    eulerian_norm: float

    @property
    def relative_error(self) -> float:
        return abs(self.chart_norm - self.eulerian_norm) / max(self.eulerian_norm, 1e-300)


def isometry_check(phi: Diffeo, delta_f: RealFunction, p: float, eps: float = 1e-5) -> IsometryCheck:
    """Compare both sides of the chart isometry along ``f + e delta_f``.

    The chart side differentiates ``Phi_p`` of the curve by central
    differences; the group side builds ``u = delta_phi o phi^-1`` and takes
    ``|| u' ||_{L^p}``.
    """
    grid = phi.grid
    f = chart(phi, p).values
    plus = chart_inverse(RealFunction(grid, f + eps * delta_f.values, Decay.VANISHES), p)
    minus = chart_inverse(RealFunction(grid, f - eps * delta_f.values, Decay.VANISHES), p)
    dchart = (chart(plus, p).values - chart(minus, p).values) / (2 * eps)
    dphi = (plus.positions - minus.positions) / (2 * eps)
    u = RealFunction(grid, dphi).at(preimages(phi, grid.x))
    return IsometryCheck(lp_norm(RealFunction(grid, dchart), p),
                         lp_norm(RealFunction(grid, _dx(u, grid)), p))
