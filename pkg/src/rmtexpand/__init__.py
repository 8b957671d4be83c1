"""Exact and Monte Carlo multi-trace statistics of classical random matrices.

The package computes E[tr h_1(P_1) ... tr h_r(P_r)] for GUE, GOE, GSE and
Haar unitary matrices as exact functions of x = 1/N, extracts the 1/N
expansion coefficients for polynomial and smooth test functions, and checks
cumulant scaling, CLT behaviour and matrix-integral coefficients.
"""

__version__ = "0.1.0"

from .errors import (
    ConsistencyError,
    EnsembleError,
    NumericError,
    PoleError,
    SizeError,
)

__all__ = [
    "__version__",
    "ConsistencyError",
    "EnsembleError",
    "NumericError",
    "PoleError",
    "SizeError",
]
