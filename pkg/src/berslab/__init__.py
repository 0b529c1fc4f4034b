"""Numerical toolkit for p-root geometry of diffeomorphisms of the line, the
Schwarzian and Bers map, scattering of Bers potentials and density-side
curvature diagnostics."""

from .diffeo import Density, Diffeo
from .numerics import ComplexFunction, Decay, Grid, RealFunction

__all__ = ["ComplexFunction", "Decay", "Density", "Diffeo", "Grid", "RealFunction"]
__version__ = "0.1.0"
