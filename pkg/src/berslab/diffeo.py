"""Diffeomorphisms of the line that are the identity at infinity.

A diffeomorphism is stored through its Jacobian perturbation ``h = phi' - 1``
and recovered as ``phi(x) = x + int_{-inf}^x h``.  This keeps every chart map
pointwise: the p-root chart, the log chart and the Jacobian density all act
on ``phi'`` alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .numerics import (
    Decay,
    Grid,
    RealFunction,
    cumint_array,
    sup_norm,
    wk1_seminorm,
)

BISECTION_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Diffeo:
    """Diffeomorphism stored by ``h = phi' - 1`` (vanishing at both ends)."""

    h: RealFunction

    def __post_init__(self) -> None:
        if self.h.decay is not Decay.VANISHES:
            raise ValueError("Jacobian perturbation must vanish at both ends")
        if np.min(1.0 + self.h.values) <= 0.0:
            raise ValueError("Jacobian 1 + h must be strictly positive")

    @property
    def grid(self) -> Grid:
        return self.h.grid

    @cached_property
    def jac(self) -> np.ndarray:
        """``phi'`` at the nodes."""
        return 1.0 + self.h.values

    @cached_property
    def log_jac(self) -> np.ndarray:
        """``log phi'`` at the nodes."""
        return np.log1p(self.h.values)

    @cached_property
    def shift(self) -> RealFunction:
        """``phi(x) - x``, zero at the left end."""
        return RealFunction(self.grid, cumint_array(self.h.values, self.grid.h))

    @cached_property
    def positions(self) -> np.ndarray:
        """``phi`` at the nodes."""
        return self.grid.x + self.shift.values

    @cached_property
    def _hermite(self) -> CubicHermiteSpline:
        x, y = self.grid.x, self.positions
        return CubicHermiteSpline(x, y, _fritsch_carlson(x, y, self.jac.copy()))

    def position_at(self, points) -> np.ndarray:
        """Smooth (quintic) evaluation of ``phi``; linear continuation outside."""
        pts = np.asarray(points, dtype=float)
        return pts + self.shift.at(pts)

    def jac_at(self, points) -> np.ndarray:
        """Smooth evaluation of ``phi'``; equal to 1 outside the window."""
        return 1.0 + self.h.at(points)

    @classmethod
    def identity(cls, grid: Grid) -> "Diffeo":
        return cls(grid.zeros())

    @classmethod
    def from_log(cls, u: RealFunction | np.ndarray, grid: Grid | None = None) -> "Diffeo":
        """Diffeomorphism with ``log phi' = u``."""
        if isinstance(u, RealFunction):
            grid, u = u.grid, u.values
        return cls(RealFunction(grid, np.expm1(u), Decay.VANISHES))


def _fritsch_carlson(x: np.ndarray, y: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Limit Hermite slopes so each cubic piece stays monotone."""
    delta = np.diff(y) / np.diff(x)
    alpha, beta = d[:-1] / delta, d[1:] / delta
    r2 = alpha ** 2 + beta ** 2
    bad = np.flatnonzero(r2 > 9.0)
    for k in bad:
        tau = 3.0 / np.sqrt(r2[k])
        d[k] = min(d[k], tau * alpha[k] * delta[k])
        d[k + 1] = min(d[k + 1], tau * beta[k] * delta[k])
    return d


def evaluate(phi: Diffeo, x) -> np.ndarray | float:
    """Evaluate ``phi`` at arbitrary points.

    Monotone cubic Hermite interpolation inside the window (exact slopes
    ``phi'`` with the Fritsch-Carlson limiter); outside, ``phi(x) = x`` on the
    left and ``x + int h`` on the right.
    """
    pts = np.asarray(x, dtype=float)
    g = phi.grid
    out = phi._hermite(np.clip(pts, g.x_min, g.x_max))
    out = np.where(pts < g.x_min, pts, out)
    out = np.where(pts > g.x_max, pts + phi.shift.values[-1], out)
    return float(out) if out.ndim == 0 else out


def _wrap_jacobian(grid: Grid, jac: np.ndarray, what: str) -> Diffeo:
    if np.min(jac) <= 0.0:
        raise ValueError(f"{what}: Jacobian lost positivity (interpolation breakdown)")
    return Diffeo(RealFunction(grid, jac - 1.0, Decay.VANISHES))


def compose(phi: Diffeo, psi: Diffeo) -> Diffeo:
    """``phi o psi`` via the chain rule ``(phi' o psi) psi'``."""
    jac = phi.jac_at(psi.positions) * psi.jac
    return _wrap_jacobian(psi.grid, jac, "compose")


def preimages(phi: Diffeo, targets) -> np.ndarray:
    """Solve ``phi(y) = target`` nodewise by bracketed bisection plus a Newton polish."""
    t = np.asarray(targets, dtype=float)
    s = phi.shift.values
    lo, hi = t - s.max() - 1.0, t - s.min() + 1.0
    while np.max(hi - lo) > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        below = phi.position_at(mid) < t
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(mid == lo) or np.all(mid == hi):
            break
    y = 0.5 * (lo + hi)
    for _ in range(2):
        y = y - (phi.position_at(y) - t) / phi.jac_at(y)
    return y


def invert(phi: Diffeo) -> Diffeo:
    """``phi^{-1}`` with Jacobian ``1 / (phi' o phi^{-1})``."""
    y = preimages(phi, phi.grid.x)
    return _wrap_jacobian(phi.grid, 1.0 / phi.jac_at(y), "invert")


# ---------------------------------------------------------------------------
# charts


@dataclass(frozen=True, eq=False)
class PRootCoord:
    """Image of the p-root chart, ``f = p (phi'^(1/p) - 1) > -p``."""

    p: float
    f: RealFunction

    def __post_init__(self) -> None:
        if not 1.0 <= self.p < np.inf:
            raise ValueError(f"p-root chart needs 1 <= p < inf, got {self.p}")
        if self.f.decay is not Decay.VANISHES:
            raise ValueError("chart coordinate must vanish at both ends")
        if np.min(self.f.values) <= -self.p:
            raise ValueError("chart coordinate must stay above -p")


@dataclass(frozen=True, eq=False)
class LogCoord:
    """Log chart ``u = log phi'``."""

    u: RealFunction

    def __post_init__(self) -> None:
        if self.u.decay is not Decay.VANISHES:
            raise ValueError("log coordinate must vanish at both ends")


@dataclass(frozen=True, eq=False)
class Density:
    """Asymptotically Lebesgue density ``g dx`` stored by ``g - 1``."""

    gm1: RealFunction

    def __post_init__(self) -> None:
        if self.gm1.decay is not Decay.VANISHES:
            raise ValueError("g - 1 must vanish at both ends")
        if np.min(1.0 + self.gm1.values) <= 0.0:
            raise ValueError("density must be strictly positive")

    @property
    def grid(self) -> Grid:
        return self.gm1.grid

    @cached_property
    def g(self) -> np.ndarray:
        return 1.0 + self.gm1.values

    @classmethod
    def lebesgue(cls, grid: Grid) -> "Density":
        return cls(grid.zeros())


def phi_p(phi: Diffeo, p: float) -> PRootCoord:
    """p-root chart ``p (phi'^(1/p) - 1)``."""
    if p < 1:
        raise ValueError(f"need p >= 1, got {p}")
    f = phi.h.values if p == 1 else p * np.expm1(phi.log_jac / p)
    return PRootCoord(p, phi.h.with_values(f))


def phi_p_inverse(coord: PRootCoord) -> Diffeo:
    """Inverse chart: ``h = (1 + f/p)^p - 1``."""
    p, f = coord.p, coord.f.values
    h = f if p == 1 else np.expm1(p * np.log1p(f / p))
    return Diffeo(coord.f.with_values(h))


def phi_inf(phi: Diffeo) -> LogCoord:
    return LogCoord(phi.h.with_values(phi.log_jac))


def phi_inf_inverse(coord: LogCoord) -> Diffeo:
    return Diffeo(coord.u.with_values(np.expm1(coord.u.values)))


def chart(phi: Diffeo, p: float) -> RealFunction:
    """Chart coordinate for any ``p`` in ``[1, inf]``."""
    return phi_inf(phi).u if np.isinf(p) else phi_p(phi, p).f


def chart_inverse(f: RealFunction, p: float) -> Diffeo:
    return phi_inf_inverse(LogCoord(f)) if np.isinf(p) else phi_p_inverse(PRootCoord(p, f))


def p_to_infty_expansion_residual(phi: Diffeo, p: float, k: int = 0) -> float:
    """``W^{k,1}`` seminorm of the chart remainder past the ``p^-2`` term."""
    if p < 10:
        raise ValueError("expansion residual is meant for p >= 10")
    u = phi.log_jac
    rem = phi_p(phi, p).f.values - (u + u ** 2 / (2 * p) + u ** 3 / (6 * p ** 2))
    return wk1_seminorm(phi.h.with_values(rem, Decay.UNRESTRICTED), k)


def theta_p(phi: Diffeo, p: float) -> np.ndarray:
    """Multiplicative cocycle ``phi'^(1/p)`` at the nodes."""
    return np.exp(phi.log_jac / p)


def theta_p_cocycle_residual(phi: Diffeo, psi: Diffeo, p: float) -> float:
    """Sup defect of ``Theta(phi o psi) = (Theta(phi) o psi) Theta(psi)``.

    For infinite ``p`` the additive law for ``log phi'`` is checked instead.
    """
    comp = compose(phi, psi)
    if np.isinf(p):
        log_phi = phi.h.with_values(phi.log_jac)
        rhs = log_phi.at(psi.positions) + psi.log_jac
        return sup_norm(comp.log_jac - rhs)
    theta_phi_m1 = phi.h.with_values(np.expm1(phi.log_jac / p))
    rhs = (1.0 + theta_phi_m1.at(psi.positions)) * theta_p(psi, p)
    return sup_norm(theta_p(comp, p) - rhs)


def jacobian(phi: Diffeo) -> Density:
    """Density ``phi' dx``; shares the stored samples."""
    return Density(phi.h)


def jacobian_inverse(mu: Density) -> Diffeo:
    return Diffeo(mu.gm1)


def psi_p_density(mu: Density, p: float) -> RealFunction:
    """Density chart ``p (g^(1/p) - 1)``, or ``log g`` for infinite ``p``."""
    if p < 1:
        raise ValueError(f"need p >= 1, got {p}")
    log_g = np.log1p(mu.gm1.values)
    if np.isinf(p):
        return mu.gm1.with_values(log_g)
    f = mu.gm1.values if p == 1 else p * np.expm1(log_g / p)
    return mu.gm1.with_values(f)
