"""One-dimensional Schroedinger scattering for ``-y'' - q y = k^2 y``.

Jost solutions are handled through their normalized profiles
``m_+ = e^{-ikx} f_+`` and ``m_- = e^{ikx} f_-``, which satisfy
``m'' +- 2ik m' + q m = 0`` and tend to 1 at their normalization end.  The
profiles are integrated by RK4 (vectorized across wavenumbers); a Picard
iteration on the Volterra equation is kept as an independent check.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .bers import MembershipError, reconstruct_diffeo, refined_samples, rk4_linear
from .diffeo import Diffeo
from .numerics import (
    ComplexFunction,
    Decay,
    RealFunction,
    cumint_array,
    diff_array,
    integral,
    simpson_array,
    sup_norm,
)

SUBSTEPS = 2
MEMBERSHIP_TOL = 1e-4


@dataclass(frozen=True)
class KGrid:
    """Wavenumbers ``+-k`` with ``k`` log-spaced on ``[k_min, k_max]``."""

    k_min: float = 1e-3
    k_max: float = 40.0
    n_k: int = 512

    def __post_init__(self) -> None:
        if not 0 < self.k_min < self.k_max:
            raise ValueError("need 0 < k_min < k_max")
        if self.n_k < 8 or self.n_k % 2:
            raise ValueError("n_k must be an even integer >= 8")

    @cached_property
    def positive(self) -> np.ndarray:
        return np.geomspace(self.k_min, self.k_max, self.n_k // 2)

    @cached_property
    def k(self) -> np.ndarray:
        return np.concatenate([-self.positive[::-1], self.positive])


@dataclass(frozen=True)
class JostSolution:
    """Normalized Jost profile ``m`` and its slope on the grid."""

    k: complex
    m: ComplexFunction
    dm: ComplexFunction


def _check_k(k) -> None:
    k = complex(k)
    if k.imag < 0 or (k.imag == 0 and k.real == 0):
        raise ValueError(f"Jost solutions need k != 0 with Im k >= 0, got {k}")


def _profiles(q: RealFunction, ks: np.ndarray, side: str, stop: int):
    """RK4 profiles from one window end to node ``stop`` for every ``k``.

    Returns arrays of shape ``(nodes, len(ks))`` ordered from the starting
    end; ``side="+"`` starts at the right end, ``"-"`` at the left end.
    """
    x = q.grid.x
    nodes = x[stop:][::-1] if side == "+" else x[:stop + 1]
    sign = -1.0 if side == "+" else 1.0
    b = -refined_samples(q, nodes, SUBSTEPS)
    a = sign * 2j * np.asarray(ks, dtype=complex)
    ones = np.ones(len(ks), dtype=complex)
    return rk4_linear(nodes, b, a, ones, 0 * ones, SUBSTEPS)


def _jost(q: RealFunction, k, side: str) -> JostSolution:
    _check_k(k)
    ks = np.array([complex(k)])
    m, dm = _profiles(q, ks, side, 0 if side == "+" else q.grid.n - 1)
    if side == "+":
        m, dm = m[::-1], dm[::-1]
    return JostSolution(complex(k), ComplexFunction(q.grid, m[:, 0]), ComplexFunction(q.grid, dm[:, 0]))


def jost_plus(q: RealFunction, k) -> JostSolution:
    """Profile ``m_+`` normalized to 1 at the right end."""
    return _jost(q, k, "+")


def jost_minus(q: RealFunction, k) -> JostSolution:
    """Profile ``m_-`` normalized to 1 at the left end."""
    return _jost(q, k, "-")


def jost_plus_picard(q: RealFunction, k, tol: float = 1e-13, max_iter: int = 500) -> ComplexFunction:
    """Picard iteration for ``m_+ = 1 - int_x^inf (e^{2ik(t-x)} - 1)/(2ik) q m_+ dt``.

    The kernel is the one for ``m + 2ik m' + q m = 0``, independent of the
    shooting integrator used by :func:`jost_plus`.
    """
    _check_k(k)
    k = complex(k)
    grid = q.grid
    x = grid.x
    phase = np.exp(2j * k * x)
    back = np.exp(-2j * k * x)
    m = np.ones(grid.n, dtype=complex)
    for _ in range(max_iter):
        qm = q.values * m
        tail_osc = cumint_array(phase * qm, grid.h, reverse=True)
        tail = cumint_array(qm, grid.h, reverse=True)
        new = 1.0 - (back * tail_osc - tail) / (2j * k)
        change = sup_norm(new - m)
        m = new
        if not np.all(np.isfinite(m)):
            break
        if change < tol:
            return ComplexFunction(grid, m)
    raise RuntimeError(f"Picard iteration for the Jost profile did not converge (k={k})")


def _origin_index(q: RealFunction) -> int:
    return int(np.argmin(np.abs(q.grid.x)))


def _coefficients(q: RealFunction, ks: np.ndarray, threads: int = 1):
    """``a(k)`` and the Wronskian pieces needed for ``b``, evaluated near ``x = 0``."""
    i0 = _origin_index(q)
    chunks = np.array_split(np.arange(len(ks)), max(1, min(threads, len(ks))))

    def run(idx):
        mp, dmp = _profiles(q, ks[idx], "+", i0)
        mm, dmm = _profiles(q, ks[idx], "-", i0)
        return mp[-1], dmp[-1], mm[-1], dmm[-1]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(idx) for idx in chunks]
    mp, dmp, mm, dmm = (np.concatenate([p[j] for p in parts]) for j in range(4))
    a = mm * mp + (mm * dmp - dmm * mp) / (2j * ks)
    return a, (mp, dmp, mm, dmm), q.grid.x[i0]


@dataclass(frozen=True)
class ScatteringData:
    """``a, b, R = b/a, T = 1/a`` on a symmetric k-grid."""

    kgrid: KGrid
    a: np.ndarray
    b: np.ndarray
    R: np.ndarray = field(init=False)
    T: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "R", self.b / self.a)
        object.__setattr__(self, "T", 1.0 / self.a)

    @property
    def k(self) -> np.ndarray:
        return self.kgrid.k

    def flux_residual(self) -> float:
        return float(np.max(np.abs(np.abs(self.a) ** 2 - np.abs(self.b) ** 2 - 1.0)))

    def symmetry_residual(self) -> float:
        n = len(self.a) // 2
        neg, pos = self.a[:n][::-1], self.a[n:]
        return float(np.max(np.abs(neg - np.conj(pos))))

    def reflection_symmetry_residual(self) -> float:
        n = len(self.R) // 2
        return float(np.max(np.abs(self.R[:n][::-1] - np.conj(self.R[n:]))))

    def max_abs_R(self) -> float:
        return float(np.max(np.abs(self.R)))

    def log_defect(self) -> np.ndarray:
        """``log(1 - |R|^2)`` on the positive half of the grid."""
        r2 = np.abs(self.R[len(self.R) // 2:]) ** 2
        if np.any(r2 >= 1):
            raise ValueError("|R| >= 1 at some wavenumber")
        return np.log1p(-r2)


def scattering_coefficients(q: RealFunction, kgrid: KGrid | None = None,
                            threads: int = 1) -> ScatteringData:
    """Scattering data from Wronskians of the Jost profiles near ``x = 0``.

    ``a = m_- m_+ + (m_- m_+' - m_-' m_+)/(2ik)`` and
    ``b = e^{-2ikx} (m~_+ m_-' - m~_+' m_-)/(2ik)`` with ``m~_+ = m_+(., -k)``.
    Work is split into ``threads`` chunks of wavenumbers; the result does not
    depend on the split.
    """
    kgrid = kgrid or KGrid()
    ks = kgrid.k.astype(complex)
    a, (mp, dmp, mm, dmm), x0 = _coefficients(q, ks, threads)
    flip = np.arange(len(ks))[::-1]
    b = np.exp(-2j * ks * x0) * (mp[flip] * dmm - dmp[flip] * mm) / (2j * ks)
    return ScatteringData(kgrid, a, b)


def a_direct(q: RealFunction, z) -> np.ndarray:
    """``a(z)`` from the Wronskian at complex ``z`` (``Im z >= 0``)."""
    zs = np.atleast_1d(np.asarray(z, dtype=complex))
    for zz in zs:
        _check_k(zz)
    a, _, _ = _coefficients(q, zs)
    return a if np.ndim(z) else a[0]


# ---------------------------------------------------------------------------
# k-space quadrature


def _half_line_integral(kgrid: KGrid, values: np.ndarray, weight0=None) -> float | complex:
    """``int_0^inf F(k) dk`` from samples on the positive log grid.

    Simpson in ``log k`` on ``[k_min, k_max]`` plus the cell ``[0, k_min]``,
    where ``F`` is continued by the quadratic through the first three nodes.
    """
    kp = kgrid.positive
    ds = np.log(kp[1] / kp[0])
    body = simpson_array(values * kp, ds)
    coeffs = np.polyfit(kp[:3], values[:3], 2)
    gx, gw = np.polynomial.legendre.leggauss(6)
    nodes = 0.5 * kgrid.k_min * (gx + 1)
    cell = 0.5 * kgrid.k_min * np.sum(gw * np.polyval(coeffs, nodes))
    return body + cell


@dataclass(frozen=True)
class TraceReport:
    lhs: float
    rhs: float
    residual: float
    relative: float
    tail_bound: float


def _trace_report(lhs: float, rhs: float, tail: float) -> TraceReport:
    res = abs(lhs - rhs)
    return TraceReport(lhs, rhs, res, res / max(abs(lhs), 1e-300), tail)


def first_trace(q: RealFunction, sd: ScatteringData) -> TraceReport:
    """``int q = (1/pi) int log(1 - |R|^2) dk`` over the whole line."""
    ell = sd.log_defect()
    rhs = 2.0 / np.pi * _half_line_integral(sd.kgrid, ell)
    tail = 2.0 / np.pi * abs(ell[-1]) * sd.kgrid.k_max
    return _trace_report(integral(q), float(rhs), tail)


def second_trace(q: RealFunction, sd: ScatteringData) -> TraceReport:
    """``int q^2 = -(4/pi) int k^2 log(1 - |R|^2) dk``."""
    ell = sd.log_defect()
    kp = sd.kgrid.positive
    rhs = -8.0 / np.pi * _half_line_integral(sd.kgrid, kp ** 2 * ell)
    tail = 8.0 / np.pi * abs(ell[-1]) * sd.kgrid.k_max ** 3
    return _trace_report(float(simpson_array(q.values ** 2, q.grid.h)), float(rhs), tail)


def first_trace_residual(q: RealFunction, kgrid: KGrid | None = None) -> float:
    """Relative residual of the first trace identity."""
    return first_trace(q, scattering_coefficients(q, kgrid)).relative


def second_trace_residual(q: RealFunction, kgrid: KGrid | None = None) -> float:
    """Relative residual of the second trace identity."""
    return second_trace(q, scattering_coefficients(q, kgrid)).relative


def score_fisher_trace(s: RealFunction, sd: ScatteringData) -> TraceReport:
    """Score form of the first identity: ``int s^2 = -(4/pi) int log(1 - |R|^2) dk``."""
    rhs = -8.0 / np.pi * _half_line_integral(sd.kgrid, sd.log_defect())
    return _trace_report(float(simpson_array(s.values ** 2, s.grid.h)), float(rhs), 0.0)


def score_square_identity_residual(q: RealFunction, s: RealFunction) -> float:
    """``|int q^2 - 1/4 int s'^2 - 1/16 int s^4|`` (pure quadrature)."""
    h = q.grid.h
    ds = diff_array(s.values, h)
    return abs(float(simpson_array(q.values ** 2, h))
               - 0.25 * float(simpson_array(ds ** 2, h))
               - float(simpson_array(s.values ** 4, h)) / 16.0)


def outer_function(sd: ScatteringData, z) -> complex:
    """``exp(-(1/(2 pi i)) int log(1 - |R|^2) / (xi - z) dxi)`` for ``Im z > 0``.

    The defect is even in ``xi``, so the line integral folds to
    ``int_0^inf log(1 - |R|^2) 2z / (xi^2 - z^2) dxi``.
    """
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("outer function needs Im z > 0")
    kp = sd.kgrid.positive
    ell = sd.log_defect()
    cauchy = _half_line_integral(sd.kgrid, ell * 2 * z / (kp ** 2 - z ** 2))
    return complex(np.exp(-cauchy / (2j * np.pi)))


def odd_moment(sd: ScatteringData) -> float:
    """``int xi log(1 - |R(xi)|^2) dxi`` using both halves of the grid separately."""
    n = len(sd.R) // 2
    kp = sd.kgrid.positive
    pos = np.log1p(-np.abs(sd.R[n:]) ** 2)
    neg = np.log1p(-np.abs(sd.R[:n][::-1]) ** 2)
    return float(_half_line_integral(sd.kgrid, kp * pos) - _half_line_integral(sd.kgrid, kp * neg))


@dataclass(frozen=True)
class LogAExpansion:
    kappa: np.ndarray
    remainder: np.ndarray
    exponent: float


def log_a_expansion_check(q: RealFunction, kappas=None) -> LogAExpansion:
    """Remainder of ``log a(z) - int q/(2iz) - int q^2/(2iz)^3`` on ``z = i kappa``.

    The decay exponent is the negative log-log slope of the remainder.
    """
    kappas = np.geomspace(10, 100, 7) if kappas is None else np.asarray(kappas, dtype=float)
    z = 1j * kappas
    a = a_direct(q, z)
    m1 = integral(q)
    m2 = float(simpson_array(q.values ** 2, q.grid.h))
    rem = np.abs(np.log(a) - m1 / (2j * z) - m2 / (2j * z) ** 3)
    good = rem > 0
    if np.count_nonzero(good) < 3:
        return LogAExpansion(kappas, rem, np.inf)
    slope = np.polyfit(np.log(kappas[good]), np.log(rem[good]), 1)[0]
    return LogAExpansion(kappas, rem, float(-slope))


def rapid_decay_check(sd: ScatteringData, floor: float = 1e-10) -> float:
    """Measured power-law decay exponent of ``|b(k)|`` for ``k >= 1``.

    The fit runs over the samples from ``k = 1`` up to the first one at or
    below ``floor`` (the quadrature noise level).  For super-polynomial decay
    the log-log slope steepens with ``k``, so the value is a lower bound for
    every exponent the coefficient actually beats.  Returns ``inf`` when
    ``b`` is below the floor from ``k = 1`` on.
    """
    kp = sd.kgrid.positive
    bp = np.abs(sd.b[len(sd.b) // 2:])
    sel = kp >= 1.0
    kp, bp = kp[sel], bp[sel]
    below = np.nonzero(bp <= floor)[0]
    stop = below[0] if below.size else len(bp)
    if stop == 0:
        return np.inf
    if stop < 3:
        raise ValueError(f"too few samples above {floor:g} for k >= 1 to fit a decay exponent")
    slope = np.polyfit(np.log(kp[:stop]), np.log(bp[:stop]), 1)[0]
    return float(-slope)


def no_bound_state_check(q: RealFunction) -> float:
    """Smallest eigenvalue of the Dirichlet 3-point discretization of ``-d^2 - q``."""
    h = q.grid.h
    diag = 2.0 / h ** 2 - q.values[1:-1]
    off = np.full(len(diag) - 1, -1.0 / h ** 2)
    w = eigh_tridiagonal(diag, off, eigvals_only=True, select="i", select_range=(0, 0))
    return float(w[0])


@dataclass(frozen=True)
class MembershipReport:
    member: bool
    positive: bool
    end_gap: float
    phi: Diffeo | None
    cross_check: float | None


def zero_energy_solution(q: RealFunction, tol: float = 1e-13, max_iter: int = 500) -> np.ndarray:
    """Picard solution of ``y = 1 - int_x^inf (t - x) q y dt``, i.e. ``y'' + q y = 0``, ``y(+inf) = 1``."""
    grid = q.grid
    x = grid.x
    y = np.ones(grid.n)
    for _ in range(max_iter):
        qy = q.values * y
        new = 1.0 - (cumint_array(x * qy, grid.h, reverse=True) - x * cumint_array(qy, grid.h, reverse=True))
        change = sup_norm(new - y)
        y = new
        if not np.all(np.isfinite(y)):
            break
        if change < tol * max(1.0, sup_norm(y)):
            return y
    raise RuntimeError("zero-energy Picard iteration diverged")


def zero_energy_membership(q: RealFunction, tol: float = MEMBERSHIP_TOL) -> MembershipReport:
    """Bers-image test from the zero-energy Jost solution.

    Members have a positive solution whose ``y^-2`` returns to 1 at the left
    end.  For members the diffeomorphism with ``phi' = y^-2`` is rebuilt and
    compared with the left-normalized reconstruction.
    """
    y = zero_energy_solution(q)
    positive = bool(np.min(y) > 0)
    gap = abs(y[0] ** -2 - 1.0) if positive else np.inf
    if not positive or gap > tol:
        return MembershipReport(False, positive, float(gap), None, None)
    phi = Diffeo(RealFunction(q.grid, y ** -2 - 1.0, Decay.VANISHES, boundary_tol=max(1e-8, 3 * tol)))
    try:
        other = reconstruct_diffeo(q)
        cross = sup_norm(other.h.values - phi.h.values)
    except MembershipError:
        cross = np.inf
    return MembershipReport(True, positive, float(gap), phi, cross)
