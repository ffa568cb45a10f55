"""Exact loop-gas and cluster-expansion computations for decorated hexagonal AKLT models."""

from .lattice import A, B, DualSite, Vertex, build_volume
from .spherecalc import DotPoly

__all__ = ["A", "B", "DotPoly", "DualSite", "Vertex", "build_volume"]
__version__ = "0.1.0"
