"""Curvature operators, invariant cones and their reaction ODEs on metric Lie algebras."""

from .curvop import SymOperator, hermitian_form, ricci, scalar, sharp, square
from .liealg import ComplexVector, MetricLieAlgebra, ParameterError, build_algebra

__version__ = "0.1.0"

__all__ = [
    "ComplexVector",
    "MetricLieAlgebra",
    "ParameterError",
    "SymOperator",
    "build_algebra",
    "hermitian_form",
    "ricci",
    "scalar",
    "sharp",
    "square",
]
