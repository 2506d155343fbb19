"""
Exception hierarchy for pathint.

Every failure raised by the numerical modules derives from PathIntegralError so
that callers (the CLI in particular) can map them onto exit codes uniformly.
"""


class PathIntegralError(Exception):
    """Base class for all pathint errors."""

    pass


class DomainError(PathIntegralError, ValueError):
    """An argument lies outside the domain of the operation."""

    pass


class StructuralError(PathIntegralError):
    """Objects that must agree in shape or lattice do not."""

    pass


class CausticError(DomainError):
    """Real-time harmonic propagator evaluated where sin(omega T) = 0."""

    pass


class CapacityError(PathIntegralError):
    """A combinatorial or size guard was exceeded."""

    pass


class PreconditionError(PathIntegralError):
    """A documented precondition of an approximation does not hold."""

    pass


class ConfigurationError(PathIntegralError):
    """A required parameter has not been set."""

    pass


class UnsupportedSignatureError(PathIntegralError):
    """The operation is not defined for the requested time signature."""

    pass


class GridTooSmallError(PathIntegralError):
    """Eigenfunctions have not decayed at the edges of the position grid."""

    def __init__(self, message: str, edge_amplitude: float) -> None:
        super().__init__(message)
        self.edge_amplitude = edge_amplitude


class QuadratureError(PathIntegralError):
    """Numerical quadrature failed to converge."""

    def __init__(self, message: str, residual: float) -> None:
        super().__init__(message)
        self.residual = residual
