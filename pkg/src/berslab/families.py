"""Named test families and the standard corpus.

Every family is a log coordinate ``u = log phi'`` given by a closed formula,
so derived quantities (``u'``, ``u''``, ...) have analytic oracles.  Families
are addressed by strings such as ``gauss_bump{0.5,0,1}`` or
``gauss_bump{a=0.5,c=0,s=1}``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .diffeo import Density, Diffeo, jacobian
from .numerics import Decay, Grid, RealFunction, read_csv


def gauss_bump(x, a=0.5, c=0.0, s=1.0):
    return a * np.exp(-(((x - c) / s) ** 2))


def double_bump(x, a1=0.4, c1=-1.5, s1=0.8, a2=0.4, c2=1.5, s2=0.8):
    return gauss_bump(x, a1, c1, s1) + gauss_bump(x, a2, c2, s2)


def sech_bump(x, a=0.4, c=0.0, s=1.0):
    return a / np.cosh((x - c) / s) ** 2


def odd_bump(x, a=0.6, c=0.0, s=1.0):
    y = (x - c) / s
    return a * y * np.exp(-y ** 2)


FAMILIES: dict[str, Callable] = {
    "gauss_bump": gauss_bump,
    "double_bump": double_bump,
    "sech_bump": sech_bump,
    "odd_bump": odd_bump,
}

_PARAM_NAMES = {
    "gauss_bump": ("a", "c", "s"),
    "double_bump": ("a1", "c1", "s1", "a2", "c2", "s2"),
    "sech_bump": ("a", "c", "s"),
    "odd_bump": ("a", "c", "s"),
}

_SPEC = re.compile(r"^\s*([a-z_]+)\s*(?:\{(.*)\})?\s*$", re.S)


@dataclass(frozen=True)
class FamilySpec:
    """Parsed family name plus keyword parameters (or a CSV path)."""

    name: str
    params: dict = field(default_factory=dict)
    path: str | None = None

    def label(self) -> str:
        if self.path is not None:
            return f"sampled{{{self.path}}}"
        inner = ",".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"{self.name}{{{inner}}}"


def parse_family(text: str) -> FamilySpec:
    """Parse ``name{params}``; raises ``ValueError`` on anything unknown."""
    m = _SPEC.match(text)
    if not m:
        raise ValueError(f"malformed family spec {text!r}")
    name, body = m.group(1), (m.group(2) or "").strip()
    if name == "sampled":
        if not body:
            raise ValueError("sampled{path} needs a path")
        return FamilySpec(name, {}, body)
    if name not in FAMILIES:
        raise ValueError(f"unknown family {name!r}; known: {sorted(FAMILIES) + ['sampled']}")
    names = _PARAM_NAMES[name]
    params: dict[str, float] = {}
    if body:
        for i, item in enumerate(body.split(",")):
            item = item.strip()
            key, _, val = item.rpartition("=")
            if not key:
                if i >= len(names):
                    raise ValueError(f"too many parameters for {name}")
                key = names[i]
            key = key.strip()
            if key not in names:
                raise ValueError(f"unknown parameter {key!r} for {name}")
            try:
                params[key] = float(val)
            except ValueError as exc:
                raise ValueError(f"parameter {key!r} of {name} is not a number: {val!r}") from exc
    if name in ("gauss_bump", "sech_bump", "odd_bump", "double_bump"):
        for key, val in params.items():
            if key.startswith("s") and val <= 0:
                raise ValueError(f"width {key} must be positive")
    return FamilySpec(name, params)


def log_coordinate(spec: FamilySpec | str, grid: Grid) -> RealFunction:
    """Sampled ``u = log phi'`` of a family (a sampled CSV holds ``u`` directly)."""
    if isinstance(spec, str):
        spec = parse_family(spec)
    if spec.path is not None:
        return read_csv(spec.path, grid, Decay.VANISHES)
    fn = FAMILIES[spec.name]
    return grid.sample(lambda x: fn(x, **spec.params), Decay.VANISHES)


def family_diffeo(spec: FamilySpec | str, grid: Grid) -> Diffeo:
    return Diffeo.from_log(log_coordinate(spec, grid))


CORPUS_SPECS = (
    "gauss_bump{0.5,0,1}",
    "gauss_bump{-0.4,1,1.5}",
    "gauss_bump{0.3,-2,0.7}",
    "double_bump",
    "sech_bump{0.4,0.5,1.2}",
    "odd_bump{0.6,0,1}",
)


def corpus(grid: Grid) -> list[Diffeo]:
    """Six nontrivial diffeomorphisms used throughout the checks."""
    return [family_diffeo(s, grid) for s in CORPUS_SPECS]


def density_corpus(grid: Grid) -> list[Density]:
    return [jacobian(phi) for phi in corpus(grid)]


def smooth_step(t):
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``."""
    t = np.asarray(t, dtype=float)
    a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
    b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def plateau(x, half_width: float, ramp: float):
    """Smooth cutoff equal to 1 on ``|x| <= half_width`` and 0 beyond ``half_width + ramp``."""
    return smooth_step((half_width + ramp - np.abs(np.asarray(x, dtype=float))) / ramp)


def bump_test_function(grid: Grid, center: float = 0.0, radius: float = 2.0,
                       amplitude: float = 1.0) -> RealFunction:
    """Compactly supported smooth bump ``exp(-1/(1-r^2))``."""
    r = (grid.x - center) / radius
    inside = np.abs(r) < 1
    vals = np.zeros(grid.n)
    vals[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return RealFunction(grid, vals, Decay.VANISHES)


def random_test_functions(grid: Grid, count: int, seed: int, span: float = 6.0):
    """Random sums of compact bumps supported in ``[-span, span]``."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        vals = np.zeros(grid.n)
        for _ in range(int(rng.integers(1, 4))):
            radius = rng.uniform(0.5, 2.5)
            center = rng.uniform(-span + radius, span - radius)
            vals += bump_test_function(grid, center, radius, rng.normal()).values
        out.append(RealFunction(grid, vals, Decay.VANISHES))
    return out
