"""Exact truncated series and matrices of series."""

from .linalg import inverse as constant_inverse
from .matrix import MatrixSeries, commutator, derive, matrix_inverse
from .numbers import I, ONE, ZERO, RationalComplex
from .parse import ParseError, parse_scalar, parse_series
from .series import (Truncation, TruncatedSeries, TruncationMismatch, compose, divide_by_degree, exp_series,
                     homotopy_integral, substitute_sqrt)

__all__ = [
    "I", "ONE", "ZERO", "MatrixSeries", "ParseError", "RationalComplex", "Truncation",
    "TruncatedSeries", "TruncationMismatch", "commutator", "compose", "constant_inverse", "derive",
    "divide_by_degree", "homotopy_integral",
    "exp_series", "matrix_inverse", "parse_scalar", "parse_series", "substitute_sqrt",
]
