"""Density-side sign structure, Hardy inequalities and the Fisher non-control experiment.

For a density ``g dx`` with score ``s = (log g)'`` the potential
``beta = s'/2 - s^2/4`` is the Bers potential of the distribution function.
The checks here classify the sign of ``beta`` on the grid, relate it to the
critical points of ``g``, test the Hardy inequality ``int q f^2 <= int f'^2``
for Bers potentials, and run the oscillating-density experiment in which the
Fisher information stays fixed while the positive part of ``beta`` grows.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.linalg import solveh_banded
from scipy.optimize import brentq

from .bers import beta_potential, bers_map
from .diffeo import Density, Diffeo
from .families import plateau
from .numerics import Decay, Grid, RealFunction, diff_array, simpson_array
from .projective import score

DEAD_BAND = 1e-10
DEGENERATE_CURVATURE = 1e-10
LEBESGUE_TOL = 1e-12
EIG_TOL = 1e-13
EIG_MAX_ITER = 5000


@dataclass(frozen=True)
class SignReport:
    """Sign structure of ``beta`` on the grid."""

    pos_measure: float
    neg_measure: float
    zero_count: int
    beta_plus_integral: float
    omega_minus_in_pi_minus: bool


def _banded_signs(values: np.ndarray, dead_band: float) -> np.ndarray:
    return np.where(values > dead_band, 1, np.where(values < -dead_band, -1, 0))


def _sign_changes(values: np.ndarray, dead_band: float = DEAD_BAND) -> int:
    """Strict alternations of sign, skipping samples inside the dead-band."""
    signs = _banded_signs(values, dead_band)
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def _positive_part(a: np.ndarray, b: np.ndarray):
    """Per-interval length fraction and area where the linear interpolant is positive."""
    top = np.maximum(a, b)
    mixed = (top > 0) & (np.minimum(a, b) <= 0)
    frac = np.where((a > 0) & (b > 0), 1.0, 0.0)
    frac[mixed] = top[mixed] / np.abs(a - b)[mixed]
    area = np.where(frac == 1.0, 0.5 * (a + b), 0.5 * top.clip(min=0) * frac)
    return frac, area


def _linear_parts(values: np.ndarray, h: float):
    """Measures of ``{v > 0}``, ``{v < 0}`` and ``int [v]_+`` for the piecewise linear interpolant."""
    a, b = values[:-1], values[1:]
    frac_pos, area = _positive_part(a, b)
    frac_neg, _ = _positive_part(-a, -b)
    return float(h * frac_pos.sum()), float(h * frac_neg.sum()), float(h * area.sum())


def _is_lebesgue(mu: Density) -> bool:
    return float(np.max(np.abs(mu.gm1.values))) <= LEBESGUE_TOL


def sign_stats(beta: np.ndarray, h: float, dead_band: float = DEAD_BAND):
    """``(pos_measure, neg_measure, zero_count, beta_plus_integral)`` of a sampled ``beta``.

    Samples inside the dead-band are set to zero before the linear crossing
    refinement so that round-off in the tails adds neither measure nor zeros.
    """
    clean = np.where(np.abs(beta) > dead_band, beta, 0.0)
    pos, neg, plus = _linear_parts(clean, h)
    return pos, neg, _sign_changes(beta, dead_band), plus


def sign_report(mu: Density) -> SignReport:
    """Classify the sign of ``beta = s'/2 - s^2/4``.

    The log-concave region ``{s' < 0}`` must lie inside ``{beta < 0}``; this
    is checked at every node whose ``s'`` is below the dead-band.  Lebesgue
    measure returns the all-zero report.
    """
    if _is_lebesgue(mu):
        return SignReport(0.0, 0.0, 0, 0.0, True)
    grid = mu.grid
    beta = beta_potential(mu).values
    kappa = diff_array(score(mu).s.values, grid.h)
    pos, neg, zeros, plus = sign_stats(beta, grid.h)
    inclusion = bool(np.all(beta[kappa < -DEAD_BAND] < 0))
    return SignReport(pos, neg, zeros, plus, inclusion)


def integrated_beta_residual(mu: Density) -> float:
    """``|int beta dx + (1/4) int s^2 dx|``."""
    h = mu.grid.h
    s = score(mu).s.values
    return abs(float(simpson_array(beta_potential(mu).values, h)) + 0.25 * float(simpson_array(s ** 2, h)))


@dataclass(frozen=True)
class CriticalPoint:
    x: float
    kind: str  # "max", "min" or "unclassified"
    g_second: float
    beta: float
    formula_gap: float

    @property
    def consistent(self) -> bool:
        if self.kind == "max":
            return self.beta < 0
        if self.kind == "min":
            return self.beta > 0
        return True


@dataclass(frozen=True)
class CriticalPointReport:
    points: tuple[CriticalPoint, ...]

    @property
    def all_consistent(self) -> bool:
        return all(p.consistent for p in self.points)

    @property
    def max_formula_gap(self) -> float:
        return max((p.formula_gap for p in self.points), default=0.0)

    def count(self, kind: str) -> int:
        return sum(p.kind == kind for p in self.points)


def critical_point_sign_check(mu: Density) -> CriticalPointReport:
    """Locate zeros of ``g'`` and compare ``beta`` there with ``g''/(2g)``.

    Brackets come from strict sign changes of ``g'`` outside the dead-band;
    each root is refined by Brent's method on a quintic spline of ``g'``.
    Points with ``|g''| < 1e-10`` are reported unclassified.
    """
    grid = mu.grid
    x, h = grid.x, grid.h
    g = mu.g
    dg = diff_array(g, h)
    d2g = diff_array(g, h, 2)
    beta = beta_potential(mu).values
    spl = {name: make_interp_spline(x, v, k=5) for name, v in
           (("g", g), ("dg", dg), ("d2g", d2g), ("beta", beta))}
    signs = _banded_signs(dg, DEAD_BAND)
    idx = np.nonzero(signs)[0]
    points = []
    for i, j in zip(idx[:-1], idx[1:]):
        if signs[i] == signs[j]:
            continue
        x0 = brentq(lambda t: float(spl["dg"](t)), x[i], x[j], xtol=1e-14)
        g0, g2, b0 = (float(spl[k](x0)) for k in ("g", "d2g", "beta"))
        kind = "unclassified" if abs(g2) < DEGENERATE_CURVATURE else ("max" if g2 < 0 else "min")
        points.append(CriticalPoint(float(x0), kind, g2, b0, abs(b0 - g2 / (2 * g0))))
    return CriticalPointReport(tuple(points))


def no_global_logconcavity_check(mu: Density) -> bool:
    """True iff ``s'`` takes both signs, or ``mu`` is Lebesgue."""
    if _is_lebesgue(mu):
        return True
    kappa = _banded_signs(diff_array(score(mu).s.values, mu.grid.h), DEAD_BAND)
    return bool(np.any(kappa > 0) and np.any(kappa < 0))


def score_balance(mu: Density) -> tuple[bool, float]:
    """Whether the score takes both signs, and ``|int s dx|``."""
    s = score(mu).s.values
    signs = _banded_signs(s, DEAD_BAND)
    return bool(np.any(signs > 0) and np.any(signs < 0)), abs(float(simpson_array(s, mu.grid.h)))


@dataclass(frozen=True)
class HardyReport:
    """Hardy margin, ground-state identity and windowed spectral gap.

    ``energy_gap`` compares the ground-state energy ``int psi^2 ((f/psi)')^2``
    with the integrated-by-parts form ``int f'^2 - int q f^2``.
    """

    hardy_margin: float
    gs_identity_residual: float
    lambda_R: float
    lambda_R_bound: float
    energy_gap: float


def ground_state(phi: Diffeo) -> np.ndarray:
    """``psi = phi'^(-1/2)``, the positive zero-energy solution."""
    return np.exp(-0.5 * phi.log_jac)


def _check_window(f: RealFunction, radius: float) -> None:
    grid = f.grid
    if not (0 < radius < min(-grid.x_min, grid.x_max)):
        raise ValueError(f"window radius {radius} must lie inside the grid")
    outside = np.abs(grid.x) >= radius
    if np.any(np.abs(f.values[outside]) > 1e-14):
        raise ValueError("test function must be supported inside (-R, R)")


def ground_state_energy(phi: Diffeo, f: RealFunction) -> float:
    """``E_q(f) = int psi^2 ((f/psi)')^2``."""
    psi = ground_state(phi)
    ratio = diff_array(f.values / psi, phi.grid.h)
    return float(simpson_array(psi ** 2 * ratio ** 2, phi.grid.h))


def hardy_margin(q: RealFunction, f: RealFunction) -> float:
    """``int f'^2 - int q f^2``."""
    h = q.grid.h
    df = diff_array(f.values, h)
    return float(simpson_array(df ** 2, h) - simpson_array(q.values * f.values ** 2, h))


def window_spectral_gap(phi: Diffeo, radius: float) -> tuple[float, float]:
    """Smallest quotient ``E_{q,R}(f) / int_{I_R} |f - c_R(f) psi|^2`` and its lower bound.

    With ``f = psi g`` the quotient is ``int psi^2 g'^2 / int psi^2 (g - mean)^2``
    where the mean is ``psi^2``-weighted.  ``g`` is discretized by P1 elements
    on the grid nodes of ``[-R, R]`` with ``g(+-R) = 0``; the projected mass
    matrix is ``M - w w^T / W`` and the smallest generalized eigenvalue is found
    by inverse iteration with a banded Cholesky solve.

    Returns
    -------
    (lambda_R, bound)
        ``bound = pi^2 / (4 R^2) * inf psi^2 / sup psi^2`` on the window, with
        ``R`` the half-length actually spanned by the nodes.
    """
    grid = phi.grid
    x = grid.x
    inside = np.nonzero(np.abs(x) <= radius + 1e-9 * grid.h)[0]
    if len(inside) < 5 or inside[0] == 0 or inside[-1] == grid.n - 1:
        raise ValueError(f"window radius {radius} must lie inside the grid")
    nodes = x[inside]
    h = grid.h
    half = 0.5 * (nodes[-1] - nodes[0])
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    weight = 1.0 / phi.jac_at(mids)  # psi^2 at element midpoints
    psi2 = 1.0 / phi.jac[inside]
    bound = np.pi ** 2 / (4 * half ** 2) * float(psi2.min() / psi2.max())

    # interior unknowns 1..m; element e joins nodes e and e+1
    stiff_diag = (weight[:-1] + weight[1:]) / h
    stiff_off = -weight[1:-1] / h
    mass_diag = (weight[:-1] + weight[1:]) * h / 3
    mass_off = weight[1:-1] * h / 6
    w = 0.5 * h * (weight[:-1] + weight[1:])
    total = float(weight.sum() * h)
    banded = np.zeros((2, len(stiff_diag)))
    banded[0, 1:] = stiff_off
    banded[1] = stiff_diag

    def stiff(v):
        out = stiff_diag * v
        out[:-1] += stiff_off * v[1:]
        out[1:] += stiff_off * v[:-1]
        return out

    def mass(v):
        out = mass_diag * v
        out[:-1] += mass_off * v[1:]
        out[1:] += mass_off * v[:-1]
        return out - w * (w @ v) / total

    inner = nodes[1:-1]
    v = np.cos(0.5 * np.pi * inner / half) + inner / half
    lam_old = np.inf
    for _ in range(EIG_MAX_ITER):
        v = solveh_banded(banded, mass(v))
        v /= np.sqrt(v @ mass(v))
        lam = float(v @ stiff(v))
        if abs(lam - lam_old) <= EIG_TOL * lam:
            return lam, bound
        lam_old = lam
    raise RuntimeError(f"inverse iteration did not converge for R={radius}")


def ground_state_identity_residual(phi: Diffeo, f: RealFunction) -> float:
    """``|E_q(f) - int (f' - (psi'/psi) f)^2|``."""
    h = phi.grid.h
    psi = ground_state(phi)
    direct = float(simpson_array((diff_array(f.values, h) - diff_array(psi, h) / psi * f.values) ** 2, h))
    return abs(ground_state_energy(phi, f) - direct)


def hardy_report(phi: Diffeo, f: RealFunction, R_window: float) -> HardyReport:
    _check_window(f, R_window)
    margin = hardy_margin(bers_map(phi), f)
    lam, bound = window_spectral_gap(phi, R_window)
    return HardyReport(margin, ground_state_identity_residual(phi, f), lam, bound,
                       abs(ground_state_energy(phi, f) - margin))


@dataclass(frozen=True)
class CriticalityRow:
    radius: float
    energy: float
    energy_by_parts: float
    norm_sq: float

    @property
    def energy_times_radius(self) -> float:
        return self.energy * self.radius

    @property
    def norm_ratio(self) -> float:
        return self.norm_sq / (2 * self.radius)


@dataclass(frozen=True)
class CriticalityTable:
    rows: tuple[CriticalityRow, ...]

    def energy_scaling_ok(self, factor: float = 2.0) -> bool:
        ref = self.rows[0].energy_times_radius
        return all(ref / factor <= r.energy_times_radius <= ref * factor for r in self.rows)

    def norm_scaling_ok(self, factor: float = 2.0) -> bool:
        return all(1 / factor <= r.norm_ratio <= factor for r in self.rows)

    def norm_limit_gap(self) -> float:
        """``| ||f_R||^2 / (2R) - 1 |`` at the largest radius."""
        return abs(self.rows[-1].norm_ratio - 1)


def criticality_demo(phi: Diffeo, R_list=(5.0, 10.0, 15.0), ramp: float = 0.1) -> CriticalityTable:
    """Energies of ``f_R = chi(x/R) psi`` for a fixed smooth plateau ``chi``.

    ``chi`` is 1 on ``|y| <= 1 - ramp`` and 0 beyond ``1 + ramp``, so
    ``int chi^2 ~ 2`` and ``||f_R||^2 / (2R) -> 1`` while the ground-state
    energy scales like ``1/R``.
    """
    grid = phi.grid
    psi = ground_state(phi)
    rows = []
    for radius in R_list:
        if radius * (1 + ramp) >= min(-grid.x_min, grid.x_max):
            raise ValueError(f"R={radius} does not fit in the grid")
        chi = plateau(grid.x / radius, 1 - ramp, 2 * ramp)
        f = RealFunction(grid, chi * psi, Decay.UNRESTRICTED)
        energy = ground_state_energy(phi, f)
        rows.append(CriticalityRow(float(radius), energy, hardy_margin(bers_map(phi), f),
                                   float(simpson_array(f.values ** 2, grid.h))))
    return CriticalityTable(tuple(rows))


@dataclass(frozen=True)
class NoncontrolRow:
    lam: float
    alpha: float
    fisher: float
    beta_plus_integral: float
    zero_count: int
    plateau_zero_count: int
    calibration: float


def oscillating_density(grid: Grid, lam: float, alpha: float, profile: np.ndarray,
                        dprofile: np.ndarray, d2profile: np.ndarray):
    """``g = 1 + (alpha/lam) chi sin(lam x)`` with exact ``g'`` and ``g''``."""
    x = grid.x
    sn, cs = np.sin(lam * x), np.cos(lam * x)
    g = 1.0 + alpha / lam * profile * sn
    dg = alpha / lam * dprofile * sn + alpha * profile * cs
    d2g = alpha / lam * d2profile * sn + 2 * alpha * dprofile * cs - alpha * lam * profile * sn
    return g, dg, d2g


def _fisher(grid, g, dg) -> float:
    return float(simpson_array(dg ** 2 / g, grid.h))


def _noncontrol_row(grid: Grid, lam: float, I0: float, profile, dprofile, d2profile,
                    plateau_mask) -> NoncontrolRow:
    alpha_max = lam / (2 * float(np.max(np.abs(profile))))

    def gap(alpha):
        g, dg, _ = oscillating_density(grid, lam, alpha, profile, dprofile, d2profile)
        return _fisher(grid, g, dg) - I0

    if gap(alpha_max) < 0:
        raise ValueError(f"alpha_max={alpha_max:g} too small to reach I0={I0:g} at lambda={lam:g}")
    alpha = brentq(gap, 0.0, alpha_max, xtol=1e-15, maxiter=500)
    g, dg, d2g = oscillating_density(grid, lam, alpha, profile, dprofile, d2profile)
    fisher = _fisher(grid, g, dg)
    if abs(fisher - I0) >= 1e-8:
        raise RuntimeError(f"Fisher calibration missed: |I - I0| = {abs(fisher - I0):.3g}")
    s = dg / g
    beta = 0.5 * (d2g / g - s ** 2) - 0.25 * s ** 2
    _, _, zeros, plus = sign_stats(beta, grid.h)
    calibration = 0.5 * alpha ** 2 * float(simpson_array(profile ** 2, grid.h))
    return NoncontrolRow(float(lam), float(alpha), fisher, plus, zeros,
                         _sign_changes(beta[plateau_mask]), calibration)


def fisher_noncontrol_experiment(I0: float = 1.0, lambda_list=(5.0, 10.0, 20.0, 40.0),
                                 grid: Grid | None = None, half_width: float = 4.0,
                                 ramp: float = 1.0, threads: int = 1) -> list[NoncontrolRow]:
    """Calibrate ``alpha`` so ``I = I0`` for each frequency and record ``beta``.

    The profile is a smooth plateau equal to 1 on ``|x| <= half_width``; its
    derivatives are taken numerically while the oscillating factor is
    differentiated exactly.  Rows are returned in the order of ``lambda_list``.
    """
    if not I0 > 0:
        raise ValueError("I0 must be positive")
    lams = [float(v) for v in lambda_list]
    if any(b <= a for a, b in zip(lams, lams[1:])):
        raise ValueError("lambda_list must be strictly increasing")
    grid = grid or Grid()
    profile = plateau(grid.x, half_width, ramp)
    dprofile = diff_array(profile, grid.h)
    d2profile = diff_array(profile, grid.h, 2)
    mask = np.abs(grid.x) <= half_width
    job = lambda lam: _noncontrol_row(grid, lam, I0, profile, dprofile, d2profile, mask)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(job, lams))
    return [job(lam) for lam in lams]


def linear_zero_growth(rows: list[NoncontrolRow], half_width: float = 4.0, slack: float = 0.9) -> bool:
    """Plateau zero count at least ``slack * (2 half_width / pi) * lam`` in every row."""
    return all(r.plateau_zero_count >= slack * 2 * half_width / np.pi * r.lam for r in rows)
