"""Bers potentials, Miura factorization and reconstruction of a diffeomorphism
from its potential.

The Bers potential of ``phi`` is ``q = S(phi)/2 = u''/2 - u'^2/4`` with
``u = log phi'``.  Going back, the solution of ``y'' + q y = 0`` that equals 1
with zero slope at the left end is ``y = phi'^(-1/2)``, so ``phi' = y^-2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffeo import Density, Diffeo, LogCoord, compose
from .families import bump_test_function
from .numerics import (
    Decay,
    Grid,
    RealFunction,
    cumint_array,
    diff_array,
    integral,
    simpson_array,
    sup_norm,
)
from .projective import _check_support, schwarzian, score

PICARD_TOL = 1e-12
PICARD_MAX_ITER = 200
MEMBERSHIP_TOL = 1e-4


class MembershipError(ValueError):
    """The potential is not (numerically) in the image of the Bers map."""


def _d(values, grid, order: int = 1):
    return diff_array(values, grid.h, order)


def bers_map(phi: Diffeo) -> RealFunction:
    """``q = S(phi) / 2``."""
    s = schwarzian(phi)
    return s.with_values(0.5 * s.values)


def energy_identity_residual(phi: Diffeo) -> float:
    """``|int q + 1/4 int u'^2|``."""
    du = _d(phi.log_jac, phi.grid)
    return abs(integral(bers_map(phi)) + 0.25 * float(simpson_array(du ** 2, phi.grid.h)))


def miura_residual(phi: Diffeo) -> float:
    """``sup |y2'' + q y2|`` with ``y2 = phi'^(-1/2)``."""
    y2 = np.exp(-0.5 * phi.log_jac)
    return sup_norm(_d(y2, phi.grid, 2) + bers_map(phi).values * y2)


def miura_first_order_residual(phi: Diffeo) -> float:
    """``sup |(d + u'/2) y2|``."""
    y2 = np.exp(-0.5 * phi.log_jac)
    du = _d(phi.log_jac, phi.grid)
    return sup_norm(_d(y2, phi.grid) + 0.5 * du * y2)


# ---------------------------------------------------------------------------
# right inverse of the linearized map


def _log_values(u) -> tuple[Grid, np.ndarray]:
    if isinstance(u, LogCoord):
        u = u.u
    return u.grid, u.values


def volterra_right_inverse(u: LogCoord | RealFunction, v: RealFunction) -> RealFunction:
    """``(R v)(x) = int^x e^u int^t e^-u v``, a right inverse of ``d^2 - u' d``."""
    if v.decay is not Decay.VANISHES:
        raise ValueError("right inverse needs a vanishing input")
    grid, uv = _log_values(u)
    inner = cumint_array(np.exp(-uv) * v.values, grid.h)
    return RealFunction(grid, cumint_array(np.exp(uv) * inner, grid.h))


def right_inverse_defect(u: LogCoord | RealFunction, v: RealFunction) -> float:
    """``sup |(R v)'' - u' (R v)' - v|``."""
    grid, uv = _log_values(u)
    r = volterra_right_inverse(u, v).values
    return sup_norm(_d(r, grid, 2) - _d(uv, grid) * _d(r, grid) - v.values)


def _wk1_norm(values, grid, k: int) -> float:
    total = float(simpson_array(np.abs(values), grid.h))
    for j in range(1, k + 1):
        total += float(simpson_array(np.abs(_d(values, grid, j)), grid.h))
    return total


def tame_norm_table(u: LogCoord | RealFunction, inputs: list[RealFunction], kmax: int = 2):
    """Measured operator ratios of the right inverse.

    For each ``k <= kmax`` and each input ``v`` records
    ``sum_{1<=j<=k+2} int |(R v)^(j)|`` divided by ``||v||_{W^{k,1}}``.  The
    zeroth derivative is left out because ``R v`` tends to a nonzero linear
    function at the right end of the line.
    """
    grid, _ = _log_values(u)
    rows = []
    for k in range(kmax + 1):
        ratios = []
        for v in inputs:
            r = volterra_right_inverse(u, v).values
            num = sum(float(simpson_array(np.abs(_d(r, grid, j)), grid.h)) for j in range(1, k + 3))
            ratios.append(num / _wk1_norm(v.values, grid, k))
        rows.append({"k": k, "max_ratio": max(ratios), "min_ratio": min(ratios)})
    return rows


# ---------------------------------------------------------------------------
# distinguished solution and reconstruction


def distinguished_solution(q: RealFunction, tol: float = PICARD_TOL,
                           max_iter: int = PICARD_MAX_ITER) -> RealFunction:
    """Solve ``y = 1 - int_{x_min}^x (x - t) q(t) y(t) dt`` by Picard iteration.

    Raises
    ------
    MembershipError
        If the iteration does not settle or ``y`` loses positivity.
    """
    grid = q.grid
    x = grid.x - grid.x_min
    qv = q.values
    y = np.ones(grid.n)
    for _ in range(max_iter):
        qy = qv * y
        new = 1.0 - (x * cumint_array(qy, grid.h) - cumint_array(x * qy, grid.h))
        change = sup_norm(new - y)
        y = new
        if not np.all(np.isfinite(y)):
            break
        if change < tol * max(1.0, sup_norm(y)):
            if np.min(y) <= 0:
                raise MembershipError("distinguished solution changes sign")
            return RealFunction(grid, y)
    raise MembershipError(f"Picard iteration did not converge in {max_iter} steps")


def rk4_linear(nodes: np.ndarray, coeff_b: np.ndarray, coeff_a, y0, dy0, substeps: int = 1):
    """Integrate ``y'' = a y' + b(x) y`` across ``nodes`` with classical RK4.

    Parameters
    ----------
    nodes : ndarray
        Equally spaced abscissae (either direction); the values at each node
        are returned.
    coeff_b : ndarray
        ``b`` sampled at ``2*substeps`` points per interval (plus the last
        node), i.e. on the grid refined by ``2*substeps``.
    coeff_a : scalar or ndarray
        Constant ``a`` (broadcast against the state, e.g. one value per k).
    y0, dy0 : array_like
        Initial value and slope at ``nodes[0]``.
    substeps : int
        RK4 steps per node interval.
    """
    step = (nodes[1] - nodes[0]) / substeps
    y = np.array(y0, dtype=np.result_type(y0, coeff_a, complex if np.iscomplexobj(coeff_a) else float))
    dy = np.array(dy0, dtype=y.dtype)
    y, dy = np.broadcast_arrays(y, dy)
    y, dy = y.copy(), dy.copy()
    out_y = np.empty((len(nodes),) + y.shape, dtype=y.dtype)
    out_dy = np.empty_like(out_y)
    out_y[0], out_dy[0] = y, dy
    a = coeff_a
    half = 0.5 * step
    for i in range(len(nodes) - 1):
        for j in range(substeps):
            base = 2 * (i * substeps + j)
            b0, b1, b2 = coeff_b[base], coeff_b[base + 1], coeff_b[base + 2]
            k1y, k1d = dy, a * dy + b0 * y
            y2, d2 = y + half * k1y, dy + half * k1d
            k2y, k2d = d2, a * d2 + b1 * y2
            y3, d3 = y + half * k2y, dy + half * k2d
            k3y, k3d = d3, a * d3 + b1 * y3
            y4, d4 = y + step * k3y, dy + step * k3d
            k4y, k4d = d4, a * d4 + b2 * y4
            y = y + step / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
            dy = dy + step / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d)
        out_y[i + 1], out_dy[i + 1] = y, dy
    return out_y, out_dy


def refined_samples(q: RealFunction, nodes: np.ndarray, substeps: int) -> np.ndarray:
    """``q`` on ``nodes`` refined ``2*substeps`` times (quintic spline)."""
    fine = np.linspace(nodes[0], nodes[-1], 2 * substeps * (len(nodes) - 1) + 1)
    return q.at(fine)


def distinguished_solution_rk4(q: RealFunction, substeps: int = 2) -> RealFunction:
    """Independent route: RK4 on ``y'' = -q y`` from ``(1, 0)`` at the left end."""
    x = q.grid.x
    b = -refined_samples(q, x, substeps)
    y, _ = rk4_linear(x, b, 0.0, 1.0, 0.0, substeps)
    return RealFunction(q.grid, y)


def reconstruct_diffeo(q: RealFunction, tol: float = MEMBERSHIP_TOL) -> Diffeo:
    """Diffeomorphism with ``phi' = y^-2`` for the distinguished solution ``y``.

    Raises
    ------
    MembershipError
        If ``y`` loses positivity or fails to return to 1 with zero slope at
        the right end within ``tol``.
    """
    y = distinguished_solution(q).values
    grid = q.grid
    gap = abs(y[-1] - 1.0)
    slope = abs(_d(y, grid)[-1])
    if gap > tol or slope > tol:
        raise MembershipError(f"right-end limit misses 1 by {gap:.3e} (slope {slope:.3e})")
    h = y ** -2 - 1.0
    return Diffeo(RealFunction(grid, h, Decay.VANISHES, boundary_tol=max(1e-8, 3 * tol)))


def is_bers_potential(q: RealFunction) -> bool:
    try:
        reconstruct_diffeo(q)
    except MembershipError:
        return False
    return True


@dataclass(frozen=True)
class MiuraWitness:
    """``w = -y'/y`` with ``q = w' - w^2`` and ``int w = 0``."""

    w: RealFunction
    zero_mean_defect: float
    riccati_residual: float


def riccati_miura_witness(q: RealFunction) -> MiuraWitness:
    y = distinguished_solution(q).values
    grid = q.grid
    w = -_d(y, grid) / y
    riccati = sup_norm(_d(w, grid) - w ** 2 - q.values)
    return MiuraWitness(RealFunction(grid, w, Decay.VANISHES, boundary_tol=1e-6),
                        abs(float(simpson_array(w, grid.h))), riccati)


def affine_action_on_potentials(q: RealFunction, phi: Diffeo) -> RealFunction:
    """``A_phi q = (q o phi) phi'^2 + S(phi)/2``."""
    vals = q.at(phi.positions) * phi.jac ** 2 + bers_map(phi).values
    return RealFunction(q.grid, vals, q.decay)


def affine_action_residual(q: RealFunction, phi: Diffeo, psi: Diffeo) -> float:
    """Sup defect of ``A_{phi o psi} = A_psi o A_phi``."""
    lhs = affine_action_on_potentials(q, compose(phi, psi)).values
    rhs = affine_action_on_potentials(affine_action_on_potentials(q, phi), psi).values
    return sup_norm(lhs - rhs)


def beta_potential(mu: Density) -> RealFunction:
    """``beta = s'/2 - s^2/4`` for the score ``s`` of ``mu``."""
    s = score(mu).s.values
    return RealFunction(mu.grid, 0.5 * _d(s, mu.grid) - 0.25 * s ** 2, Decay.VANISHES)


@dataclass(frozen=True)
class FactorizationCheck:
    form: float
    energy: float
    residual: float


def factorization_form_residual(mu: Density, f: RealFunction) -> FactorizationCheck:
    """Compare ``<f, (-d^2 - beta) f>`` with ``int (f' + s f / 2)^2``."""
    _check_support(f)
    grid = mu.grid
    fv = f.values
    s = score(mu).s.values
    form = float(simpson_array(fv * (-_d(fv, grid, 2) - beta_potential(mu).values * fv), grid.h))
    energy = float(simpson_array((_d(fv, grid) + 0.5 * s * fv) ** 2, grid.h))
    return FactorizationCheck(form, energy, abs(form - energy))


def membership_corpus(grid: Grid, bers_diffeos: list[Diffeo]):
    """Labelled potentials for the membership classifier.

    Members are Bers potentials of the given diffeomorphisms.  Non-members are
    built so the label is certain: a potential with positive integral violates
    the energy identity, and a strictly negative one makes the left-normalized
    solution convex and increasing, so it cannot return to 1.
    """
    items = [(f"bers[{i}]", bers_map(phi), True) for i, phi in enumerate(bers_diffeos)]
    x = grid.x
    nonmembers = {
        "well_0.5": 0.5 * np.exp(-x ** 2),
        "well_2": 2.0 * np.exp(-x ** 2),
        "barrier_0.3": -0.3 * np.exp(-x ** 2),
        "barrier_1": -1.0 * np.exp(-(x - 1) ** 2),
        "sech_well_1.5": 1.5 / np.cosh(x) ** 2,
    }
    for name, vals in nonmembers.items():
        items.append((name, RealFunction(grid, vals, Decay.VANISHES), False))
    return items


def default_right_inverse_inputs(grid: Grid) -> list[RealFunction]:
    return [bump_test_function(grid, c, r) for c, r in ((0.0, 2.0), (-1.0, 1.0), (2.0, 3.0))]
