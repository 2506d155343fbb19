"""
pathint - path-integral quantum mechanics in one dimension.

This package provides time-sliced propagators, Euclidean partition functions,
Wick contractions of the quartic perturbation series, path-integral Monte
Carlo, a finite-difference spectral oracle, instanton dilute-gas sums and the
phase bookkeeping of multiply connected configuration spaces.
"""

from .errors import (
    CapacityError,
    CausticError,
    ConfigurationError,
    DomainError,
    GridTooSmallError,
    PathIntegralError,
    PreconditionError,
    QuadratureError,
    StructuralError,
    UnsupportedSignatureError,
)
from .model import (
    FixedEndpoints,
    Lattice,
    Path,
    PeriodicBoundary,
    Potential,
    PotentialKind,
    Signature,
    discrete_action,
)

__version__ = "0.1.0"

__all__ = [
    # Model
    "FixedEndpoints",
    "Lattice",
    "Path",
    "PeriodicBoundary",
    "Potential",
    "PotentialKind",
    "Signature",
    "discrete_action",
    # Errors
    "CapacityError",
    "CausticError",
    "ConfigurationError",
    "DomainError",
    "GridTooSmallError",
    "PathIntegralError",
    "PreconditionError",
    "QuadratureError",
    "StructuralError",
    "UnsupportedSignatureError",
    # Version
    "__version__",
]
