"""Grid, differentiation, quadrature and norms for decaying functions on a line window.

Functions are sampled on a uniform grid over a finite window ``[x_min, x_max]``
that stands in for the real line.  Each sampled function carries a decay tag
saying what happens at both ends of the window, which decides whether the
left tail can be dropped when integrating.

Differentiation uses sixth-order finite differences (central in the interior,
one-sided near the ends).  Primitives use a sixth-order cell rule and definite
integrals use composite Simpson quadrature.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Callable, Union

import numpy as np
from scipy.interpolate import CubicSpline, make_interp_spline

BOUNDARY_TOL = 1e-8
FD_ACCURACY = 6


class Decay(enum.Enum):
    """Behaviour of a sampled function at both ends of the window."""

    VANISHES = "VanishesAtBothEnds"
    TENDS_TO_ONE = "TendsToOneAtBothEnds"
    UNRESTRICTED = "Unrestricted"


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``x_i = x_min + i*h`` on ``[x_min, x_max]``."""

    x_min: float = -20.0
    x_max: float = 20.0
    n: int = 4001

    def __post_init__(self) -> None:
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise ValueError("grid ends must be finite")
        if not self.x_min < self.x_max:
            raise ValueError(f"need x_min < x_max, got {self.x_min}, {self.x_max}")
        if int(self.n) != self.n or self.n < 16:
            raise ValueError(f"need an integer n >= 16, got {self.n}")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @cached_property
    def x(self) -> np.ndarray:
        xs = self.x_min + self.h * np.arange(self.n)
        xs[-1] = self.x_max
        xs.flags.writeable = False
        return xs

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    def sample(self, func: Callable[[np.ndarray], np.ndarray],
               decay: Decay = Decay.UNRESTRICTED, **kwargs) -> "RealFunction":
        """Evaluate ``func`` on the nodes and wrap the result."""
        return RealFunction(self, np.asarray(func(self.x), dtype=float), decay, **kwargs)

    def zeros(self, decay: Decay = Decay.VANISHES) -> "RealFunction":
        return RealFunction(self, np.zeros(self.n), decay)


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class RealFunction:
    """Real samples on a grid, tagged with their end behaviour.

    Parameters
    ----------
    grid : Grid
    values : array_like
        One value per grid node.
    decay : Decay
        ``VANISHES`` requires both end values within ``boundary_tol`` of 0,
        ``TENDS_TO_ONE`` within ``boundary_tol`` of 1.
    boundary_tol : float
        Tolerance used by the end checks.
    """

    grid: Grid
    values: np.ndarray
    decay: Decay = Decay.UNRESTRICTED
    boundary_tol: float = field(default=BOUNDARY_TOL, repr=False)

    def __post_init__(self) -> None:
        vals = _frozen(self.values, float)
        if vals.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "values", vals)
        _check_decay(vals, self.decay, self.boundary_tol)

    def with_values(self, values, decay: Decay | None = None) -> "RealFunction":
        return RealFunction(self.grid, values, self.decay if decay is None else decay,
                            self.boundary_tol)

    @cached_property
    def _spline(self):
        return make_interp_spline(self.grid.x, self.values, k=5)

    def at(self, points) -> np.ndarray:
        """Quintic-spline evaluation; outside the window the end value is held."""
        pts = np.asarray(points, dtype=float)
        out = self._spline(np.clip(pts, self.grid.x_min, self.grid.x_max))
        out = np.where(pts < self.grid.x_min, self.values[0], out)
        return np.where(pts > self.grid.x_max, self.values[-1], out)


@dataclass(frozen=True, eq=False)
class ComplexFunction:
    """Complex samples on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = _frozen(self.values, complex)
        if vals.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "values", vals)


Sampled = Union[RealFunction, ComplexFunction]


def _check_decay(vals: np.ndarray, decay: Decay, tol: float) -> None:
    if decay is Decay.VANISHES:
        ends = np.abs(vals[[0, -1]])
    elif decay is Decay.TENDS_TO_ONE:
        ends = np.abs(vals[[0, -1]] - 1.0)
    else:
        return
    if np.any(ends > tol):
        raise ValueError(f"end values {vals[0]:.3e}, {vals[-1]:.3e} violate {decay.value} "
                         f"(tolerance {tol:.1e})")


# ---------------------------------------------------------------------------
# finite differences


@lru_cache(maxsize=None)
def _fd_weights(offsets: tuple[int, ...], order: int) -> np.ndarray:
    """Weights ``w`` with ``sum w_j f(x + o_j h) = h**order f^(order)(x) + O(h^len)``."""
    o = np.asarray(offsets, dtype=float)
    m = len(o)
    vander = o[None, :] ** np.arange(m)[:, None]
    rhs = np.zeros(m)
    rhs[order] = float(np.prod(np.arange(1, order + 1)))
    return np.linalg.solve(vander, rhs)


def _stencil_width(order: int, accuracy: int = FD_ACCURACY) -> int:
    return (order + 1) // 2 + accuracy // 2 - 1


def diff_array(values: np.ndarray, h: float, order: int = 1) -> np.ndarray:
    """Finite-difference derivative of a sample array.

    Interior nodes use the centred stencil of half width ``m``; the ``m``
    nodes at each end use a one-sided stencil of ``order + 6`` points.
    """
    vals = np.asarray(values)
    n = vals.shape[-1]
    m = _stencil_width(order)
    side = order + FD_ACCURACY
    if order < 1 or 4 * order >= n or side > n:
        raise ValueError(f"grid of {n} nodes is too coarse for derivative order {order}")
    out = np.zeros_like(vals, dtype=np.result_type(vals, float))
    w = _fd_weights(tuple(range(-m, m + 1)), order)
    for j, wj in enumerate(w):
        out[..., m:n - m] += wj * vals[..., j:n - 2 * m + j]
    for i in range(m):
        wl = _fd_weights(tuple(range(-i, side - i)), order)
        out[..., i] = vals[..., :side] @ wl
        wr = _fd_weights(tuple(range(-(side - 1 - i), i + 1)), order)
        out[..., n - 1 - i] = vals[..., n - side:] @ wr
    return out / h ** order


def derivative(f: Sampled, order: int = 1) -> Sampled:
    """Derivative of a sampled function.

    Parameters
    ----------
    f : RealFunction or ComplexFunction
    order : int
        Positive derivative order.

    Returns
    -------
    RealFunction or ComplexFunction
        For real input the result vanishes at both ends whenever the input
        vanishes or tends to one there; otherwise it is unrestricted.
    """
    if order < 1:
        raise ValueError("derivative order must be positive")
    vals = diff_array(f.values, f.grid.h, order)
    if isinstance(f, ComplexFunction):
        return ComplexFunction(f.grid, vals)
    decay = Decay.UNRESTRICTED if f.decay is Decay.UNRESTRICTED else Decay.VANISHES
    return RealFunction(f.grid, vals, decay, f.boundary_tol)


# ---------------------------------------------------------------------------
# quadrature


@lru_cache(maxsize=None)
def _cell_weights(offsets: tuple[int, ...]) -> np.ndarray:
    """Weights integrating the interpolant through ``offsets`` over ``[0, 1]``."""
    o = np.asarray(offsets, dtype=float)
    m = len(o)
    vander = o[None, :] ** np.arange(m)[:, None]
    moments = 1.0 / np.arange(1, m + 1)
    return np.linalg.solve(vander, moments)


def cumint_array(values: np.ndarray, h: float, reverse: bool = False) -> np.ndarray:
    """Primitive ``F(x_i) = int_{x_0}^{x_i} f`` with a sixth-order cell rule.

    With ``reverse=True`` returns ``int_{x_i}^{x_{n-1}} f`` instead.
    """
    vals = np.asarray(values)
    n = vals.shape[-1]
    width = FD_ACCURACY
    if n < width:
        raise ValueError("too few samples for cumulative integration")
    cells = np.zeros(vals.shape[:-1] + (n - 1,), dtype=np.result_type(vals, float))
    lo = width // 2 - 1
    w = _cell_weights(tuple(range(-lo, width - lo)))
    stop = n - width + lo + 1
    for j, wj in enumerate(w):
        cells[..., lo:stop] += wj * vals[..., j:j + stop - lo]
    for i in list(range(lo)) + list(range(stop, n - 1)):
        s = min(max(i - lo, 0), n - width)
        cw = _cell_weights(tuple(range(s - i, s - i + width)))
        cells[..., i] = vals[..., s:s + width] @ cw
    cells *= h
    out = np.zeros_like(vals, dtype=cells.dtype)
    if reverse:
        out[..., :-1] = np.cumsum(cells[..., ::-1], axis=-1)[..., ::-1]
    else:
        out[..., 1:] = np.cumsum(cells, axis=-1)
    return out


def cumulative_integral(f: RealFunction) -> RealFunction:
    """Primitive vanishing at the left end of the window.

    Parameters
    ----------
    f : RealFunction
        Must vanish at both ends, so the dropped left tail is negligible.

    Returns
    -------
    RealFunction
        Unrestricted primitive ``F`` with ``F(x_min) = 0``.
    """
    if f.decay is not Decay.VANISHES:
        raise ValueError(f"cumulative_integral needs a vanishing integrand, got {f.decay.value}")
    return RealFunction(f.grid, cumint_array(f.values, f.grid.h), Decay.UNRESTRICTED)


@lru_cache(maxsize=None)
def _simpson_weights(n: int) -> np.ndarray:
    w = np.zeros(n)
    m = n if n % 2 == 1 else n - 3
    w[:m:2] = 2.0
    w[1:m:2] = 4.0
    w[0] = w[m - 1] = 1.0
    w /= 3.0
    if m < n:
        # three-eighths rule on the last three intervals keeps cubic exactness
        w[m - 1:] += np.array([3.0, 9.0, 9.0, 3.0]) / 8.0
    return w


def simpson_array(values: np.ndarray, h: float) -> float | complex:
    """Composite Simpson rule along the last axis (3/8 tail for even counts)."""
    vals = np.asarray(values)
    return (vals @ _simpson_weights(vals.shape[-1])) * h


def integral(f: Sampled) -> float:
    """Composite Simpson integral over the window."""
    return simpson_array(f.values, f.grid.h)


def lp_norm(f: Sampled, p: float = 2.0) -> float:
    """``(int |f|^p)^(1/p)``; the sup norm when ``p`` is infinite."""
    if not p >= 1:
        raise ValueError(f"need p >= 1, got {p}")
    a = np.abs(f.values)
    if np.isinf(p):
        return float(a.max())
    return float(simpson_array(a ** p, f.grid.h)) ** (1.0 / p)


def wk1_seminorm(f: RealFunction, k: int = 0) -> float:
    """``int |f^(k)|``."""
    if k < 0:
        raise ValueError("seminorm order must be nonnegative")
    vals = f.values if k == 0 else diff_array(f.values, f.grid.h, k)
    return float(simpson_array(np.abs(vals), f.grid.h))


def sup_norm(values) -> float:
    return float(np.max(np.abs(np.asarray(getattr(values, "values", values)))))


# ---------------------------------------------------------------------------
# ingestion


def read_csv(path: str | Path, grid: Grid, decay: Decay = Decay.VANISHES) -> RealFunction:
    """Load an ``x,value`` CSV and resample it onto ``grid``.

    The x column must be strictly increasing and uniform.  Resampling is by
    cubic spline; outside the data range the function is continued by 0
    (vanishing), 1 (tending to one) or its end values (unrestricted).
    """
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=float)
    names = data.dtype.names or ()
    if names != ("x", "value"):
        raise ValueError(f"{path}: expected columns x,value, got {names}")
    xs, ys = np.atleast_1d(data["x"]), np.atleast_1d(data["value"])
    if xs.size < 4 or not np.all(np.isfinite(xs)) or not np.all(np.isfinite(ys)):
        raise ValueError(f"{path}: need at least 4 finite rows")
    dx = np.diff(xs)
    if np.any(dx <= 0):
        raise ValueError(f"{path}: x must be strictly increasing")
    if np.max(np.abs(dx - dx.mean())) > 1e-9 * max(1.0, abs(dx.mean())):
        raise ValueError(f"{path}: x must be uniformly spaced")
    spline = CubicSpline(xs, ys)
    gx = grid.x
    out = spline(np.clip(gx, xs[0], xs[-1]))
    fill = {Decay.VANISHES: (0.0, 0.0), Decay.TENDS_TO_ONE: (1.0, 1.0)}.get(decay, (ys[0], ys[-1]))
    out = np.where(gx < xs[0], fill[0], out)
    out = np.where(gx > xs[-1], fill[1], out)
    return RealFunction(grid, out, decay)
