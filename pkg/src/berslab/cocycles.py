"""Gelfand-Fuchs, Bott and p-root Bott-Thurston cocycles by quadrature."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffeo import Diffeo, compose
from .numerics import Decay, RealFunction, diff_array, simpson_array


@dataclass(frozen=True)
class VectorFieldPair:
    """Two vector fields ``u d/dx``, ``v d/dx`` sharing a grid."""

    u: RealFunction
    v: RealFunction

    def bracket(self) -> RealFunction:
        return bracket(self.u, self.v)


def _d(f: RealFunction, order: int = 1) -> np.ndarray:
    return diff_array(f.values, f.grid.h, order)


def bracket(u: RealFunction, v: RealFunction) -> RealFunction:
    """``[u, v] = u v' - v u'``."""
    return RealFunction(u.grid, u.values * _d(v) - v.values * _d(u), Decay.UNRESTRICTED)


def gelfand_fuchs(u: RealFunction, v: RealFunction) -> float:
    """``omega(u, v) = int u' v''``."""
    return float(simpson_array(_d(u) * _d(v, 2), u.grid.h))


def gelfand_fuchs_third(u: RealFunction, v: RealFunction) -> float:
    """Integrated-by-parts form ``int u''' v``."""
    return float(simpson_array(_d(u, 3) * v.values, u.grid.h))


def gf_jacobi_residual(u: RealFunction, v: RealFunction, w: RealFunction) -> float:
    """``|omega([u,v],w) + omega([v,w],u) + omega([w,u],v)|``."""
    return abs(gelfand_fuchs(bracket(u, v), w) + gelfand_fuchs(bracket(v, w), u)
               + gelfand_fuchs(bracket(w, u), v))


def omega_p(u: RealFunction, v: RealFunction, p: float) -> float:
    """Infinitesimal p-root cocycle ``p^-2 int u' v''``."""
    return gelfand_fuchs(u, v) / p ** 2


def _log_jac_fn(phi: Diffeo) -> RealFunction:
    return RealFunction(phi.grid, phi.log_jac, Decay.VANISHES)


def bott_cocycle(phi: Diffeo, psi: Diffeo) -> float:
    """``B(phi, psi) = 1/2 int log(phi' o psi) d log psi'``."""
    outer = _log_jac_fn(phi).at(psi.positions)
    return 0.5 * float(simpson_array(outer * diff_array(psi.log_jac, psi.grid.h), psi.grid.h))


def _coboundary(cocycle, phi: Diffeo, psi: Diffeo, chi: Diffeo) -> float:
    return abs(cocycle(psi, chi) - cocycle(compose(phi, psi), chi)
               + cocycle(phi, compose(psi, chi)) - cocycle(phi, psi))


def bott_coboundary_residual(phi: Diffeo, psi: Diffeo, chi: Diffeo) -> float:
    """``|delta B (phi, psi, chi)|``."""
    return _coboundary(bott_cocycle, phi, psi, chi)


def bott_thurston_p(phi: Diffeo, psi: Diffeo, p: float) -> float:
    """``B_p = int (sigma(phi) o psi) sigma(psi)'`` with ``sigma = (1/p) log phi'``."""
    outer = _log_jac_fn(phi).at(psi.positions) / p
    inner = diff_array(psi.log_jac, psi.grid.h) / p
    return float(simpson_array(outer * inner, psi.grid.h))


def bott_thurston_coboundary_residual(phi: Diffeo, psi: Diffeo, chi: Diffeo, p: float) -> float:
    return _coboundary(lambda a, b: bott_thurston_p(a, b, p), phi, psi, chi)


def flow_step(u: RealFunction, t: float) -> Diffeo:
    """``x + t u(x)``; requires ``|t| sup |u'| < 1``."""
    du = _d(u)
    if np.max(np.abs(t * du)) >= 1:
        raise ValueError("flow step too large for monotonicity")
    return Diffeo(RealFunction(u.grid, t * du, Decay.VANISHES))


def bott_infinitesimal_ratio(u: RealFunction, v: RealFunction, t: float, s: float) -> float:
    """``B(x + t u, x + s v) / (t s)``, which tends to ``omega(u, v) / 2``."""
    return bott_cocycle(flow_step(u, t), flow_step(v, s)) / (t * s)
