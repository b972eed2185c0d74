"""Numerical laboratory for the p-Laplacian evolution equation with absorption,
``u_t - div(|grad u|^(p-2) grad u) + f(u) = 0``, in radial symmetry."""

__version__ = "0.1.0"

from .errors import DomainError, NumericalError, PreconditionError
from .nonlinearity import (
    PowerLog,
    Tabulated,
    Verdict,
    classify,
    classify_CFS,
    classify_J,
    classify_K,
    no_absorption,
)

__all__ = [
    "__version__",
    "DomainError",
    "NumericalError",
    "PreconditionError",
    "PowerLog",
    "Tabulated",
    "Verdict",
    "classify",
    "classify_CFS",
    "classify_J",
    "classify_K",
    "no_absorption",
]
