"""
Potentials, lattices, paths and discretized actions.

This module holds the vocabulary shared by every other module: the family of
closed-form one-dimensional potentials, the time lattice, lattice paths with
their boundary conditions, and the midpoint-rule discrete action in both real
and imaginary time.
"""

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DomainError, StructuralError

FloatArray = NDArray[np.float64]


class PotentialKind(str, Enum):
    """Closed-form potential families."""

    FREE = "free"
    HARMONIC = "harmonic"
    ANHARMONIC = "anharmonic"
    DOUBLE_WELL = "double_well"
    PERIODIC = "periodic"

    @property
    def code(self) -> int:
        """Integer tag used by the compiled Monte Carlo kernel."""
        return list(PotentialKind).index(self)


class Signature(str, Enum):
    """Time signature of a lattice."""

    REAL_TIME = "real"
    EUCLIDEAN = "euclidean"


@dataclass(frozen=True)
class Potential:
    """
    A one-dimensional potential with analytic V, V' and V''.

    Conventions:
        harmonic     V = m w^2 q^2 / 2
        anharmonic   V = m w^2 q^2 / 2 + lam q^4 / 4!
        double_well  V = lam (q^2 - a^2)^2 / 4!     (w = sqrt(lam a^2 / 3))
        periodic     V = depth (1 - cos(2 pi q / period))
    """

    kind: PotentialKind
    m: float = 1.0
    omega: float = 0.0
    lam: float = 0.0
    a: float = 1.0
    period: float = 2.0 * math.pi
    depth: float = 1.0
    hbar: float = 1.0

    def __post_init__(self) -> None:
        """Validate parameters and derive the double-well frequency."""
        object.__setattr__(self, "kind", PotentialKind(self.kind))
        for name in ("m", "omega", "lam", "a", "period", "depth", "hbar"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"Potential parameter '{name}' must be finite")
        if self.m <= 0:
            raise DomainError(f"Mass must be positive, got {self.m}")
        if self.hbar <= 0:
            raise DomainError(f"hbar must be positive, got {self.hbar}")
        if self.omega < 0:
            raise DomainError(f"omega must be non-negative, got {self.omega}")
        if self.lam < 0:
            raise DomainError(f"lam must be non-negative, got {self.lam}")

        if self.kind is PotentialKind.DOUBLE_WELL:
            if self.a <= 0:
                raise DomainError(f"Well separation a must be positive, got {self.a}")
            if self.lam <= 0:
                raise DomainError("Double well requires lam > 0")
            object.__setattr__(self, "omega", math.sqrt(self.lam * self.a**2 / 3.0))
        elif self.kind is PotentialKind.PERIODIC:
            if self.period <= 0 or self.depth <= 0:
                raise DomainError("Periodic potential requires period > 0, depth > 0")

    # Named constructors

    @classmethod
    def free(cls, m: float = 1.0, hbar: float = 1.0) -> "Potential":
        return cls(PotentialKind.FREE, m=m, hbar=hbar)

    @classmethod
    def harmonic(
        cls, m: float = 1.0, omega: float = 1.0, hbar: float = 1.0
    ) -> "Potential":
        return cls(PotentialKind.HARMONIC, m=m, omega=omega, hbar=hbar)

    @classmethod
    def anharmonic(
        cls, m: float = 1.0, omega: float = 1.0, lam: float = 0.0, hbar: float = 1.0
    ) -> "Potential":
        return cls(PotentialKind.ANHARMONIC, m=m, omega=omega, lam=lam, hbar=hbar)

    @classmethod
    def double_well(
        cls, lam: float = 1.0, a: float = 1.0, m: float = 1.0, hbar: float = 1.0
    ) -> "Potential":
        return cls(PotentialKind.DOUBLE_WELL, m=m, lam=lam, a=a, hbar=hbar)

    @classmethod
    def periodic(
        cls,
        period: float = 2.0 * math.pi,
        depth: float = 1.0,
        m: float = 1.0,
        hbar: float = 1.0,
    ) -> "Potential":
        return cls(PotentialKind.PERIODIC, m=m, period=period, depth=depth, hbar=hbar)

    # Analytic values

    def value(self, q: ArrayLike) -> FloatArray:
        """V(q), vectorized over q."""
        x = np.asarray(q, dtype=np.float64)
        kind = self.kind
        if kind is PotentialKind.FREE:
            return np.zeros_like(x)
        if kind is PotentialKind.HARMONIC:
            return 0.5 * self.m * self.omega**2 * x**2
        if kind is PotentialKind.ANHARMONIC:
            return 0.5 * self.m * self.omega**2 * x**2 + self.lam * x**4 / 24.0
        if kind is PotentialKind.DOUBLE_WELL:
            return self.lam * (x**2 - self.a**2) ** 2 / 24.0
        k = 2.0 * math.pi / self.period
        return self.depth * (1.0 - np.cos(k * x))

    def derivative(self, q: ArrayLike) -> FloatArray:
        """V'(q), vectorized over q."""
        x = np.asarray(q, dtype=np.float64)
        kind = self.kind
        if kind is PotentialKind.FREE:
            return np.zeros_like(x)
        if kind is PotentialKind.HARMONIC:
            return self.m * self.omega**2 * x
        if kind is PotentialKind.ANHARMONIC:
            return self.m * self.omega**2 * x + self.lam * x**3 / 6.0
        if kind is PotentialKind.DOUBLE_WELL:
            return self.lam * x * (x**2 - self.a**2) / 6.0
        k = 2.0 * math.pi / self.period
        return self.depth * k * np.sin(k * x)

    def second_derivative(self, q: ArrayLike) -> FloatArray:
        """V''(q), vectorized over q."""
        x = np.asarray(q, dtype=np.float64)
        kind = self.kind
        if kind is PotentialKind.FREE:
            return np.zeros_like(x)
        if kind is PotentialKind.HARMONIC:
            return np.full_like(x, self.m * self.omega**2)
        if kind is PotentialKind.ANHARMONIC:
            return self.m * self.omega**2 + self.lam * x**2 / 2.0
        if kind is PotentialKind.DOUBLE_WELL:
            return self.lam * (3.0 * x**2 - self.a**2) / 6.0
        k = 2.0 * math.pi / self.period
        return self.depth * k**2 * np.cos(k * x)

    def minima(self) -> tuple[float, ...]:
        """Classical minima inside one period / of the whole real line."""
        if self.kind is PotentialKind.FREE:
            return ()
        if self.kind is PotentialKind.DOUBLE_WELL:
            return (-self.a, self.a)
        return (0.0,)

    @property
    def curvature_frequency(self) -> float:
        """sqrt(V''(q_min) / m) at a classical minimum; 0 for the free particle."""
        minima = self.minima()
        if not minima:
            return 0.0
        return math.sqrt(float(self.second_derivative(minima[-1])) / self.m)

    def kernel_parameters(self) -> FloatArray:
        """Packed parameters for the compiled kernel: m, omega, lam, a, period, depth."""
        return np.array(
            [self.m, self.omega, self.lam, self.a, self.period, self.depth],
            dtype=np.float64,
        )


def potential_derivatives(potential: Potential, q: float) -> tuple[float, float, float]:
    """Return (V, V', V'') at a single finite point."""
    if not math.isfinite(q):
        raise DomainError(f"Position must be finite, got {q}")
    return (
        float(potential.value(q)),
        float(potential.derivative(q)),
        float(potential.second_derivative(q)),
    )


@dataclass(frozen=True)
class Lattice:
    """Uniform time discretization with N slices over a total extent."""

    n_slices: int
    extent: float
    signature: Signature = Signature.EUCLIDEAN

    def __post_init__(self) -> None:
        object.__setattr__(self, "signature", Signature(self.signature))
        if int(self.n_slices) != self.n_slices or self.n_slices < 1:
            raise DomainError(f"n_slices must be a positive integer, got {self.n_slices}")
        if not math.isfinite(self.extent) or self.extent <= 0:
            raise DomainError(f"Lattice extent must be positive, got {self.extent}")

    @property
    def spacing(self) -> float:
        return self.extent / self.n_slices

    def times(self) -> FloatArray:
        """The N+1 slice times 0, delta, ..., extent."""
        return np.linspace(0.0, self.extent, self.n_slices + 1)


@dataclass(frozen=True)
class FixedEndpoints:
    """Dirichlet boundary: q_0 = q and q_N = q_prime."""

    q: float
    q_prime: float


@dataclass(frozen=True)
class PeriodicBoundary:
    """Closed paths: q_0 = q_N."""

    pass


Boundary = FixedEndpoints | PeriodicBoundary


@dataclass(frozen=True, eq=False)
class Path:
    """N+1 lattice positions q_0 ... q_N with boundary metadata."""

    positions: FloatArray
    boundary: Boundary = field(default_factory=PeriodicBoundary)

    def __post_init__(self) -> None:
        positions = np.array(self.positions, dtype=np.float64)
        if positions.ndim != 1 or positions.size < 2:
            raise StructuralError("A path needs at least two positions (one slice)")
        positions.flags.writeable = False
        object.__setattr__(self, "positions", positions)

        if isinstance(self.boundary, PeriodicBoundary):
            if positions[0] != positions[-1]:
                raise StructuralError("Periodic boundary requires q_0 = q_N")
        elif positions[0] != self.boundary.q or positions[-1] != self.boundary.q_prime:
            raise StructuralError("Path endpoints disagree with FixedEndpoints")

    @property
    def n_slices(self) -> int:
        return int(self.positions.size - 1)

    def check_lattice(self, lattice: Lattice) -> None:
        """Raise StructuralError unless len(positions) == lattice.n_slices + 1."""
        if self.positions.size != lattice.n_slices + 1:
            raise StructuralError(
                f"Path has {self.positions.size} positions but lattice needs "
                f"{lattice.n_slices + 1}"
            )

    def reversed(self) -> "Path":
        boundary: Boundary = self.boundary
        if isinstance(boundary, FixedEndpoints):
            boundary = FixedEndpoints(boundary.q_prime, boundary.q)
        return Path(self.positions[::-1], boundary)

    @classmethod
    def constant(cls, value: float, lattice: Lattice) -> "Path":
        return cls(np.full(lattice.n_slices + 1, value), PeriodicBoundary())

    @classmethod
    def linear(cls, q: float, q_prime: float, lattice: Lattice) -> "Path":
        positions = np.linspace(q, q_prime, lattice.n_slices + 1)
        positions[0], positions[-1] = q, q_prime
        return cls(positions, FixedEndpoints(q, q_prime))

    @classmethod
    def sample(
        cls,
        func: Callable[[FloatArray], ArrayLike],
        lattice: Lattice,
        boundary: Boundary | None = None,
    ) -> "Path":
        """Sample a callable q(t) at the lattice times."""
        values = np.asarray(func(lattice.times()), dtype=np.float64)
        if boundary is None:
            boundary = FixedEndpoints(float(values[0]), float(values[-1]))
        return cls(values, boundary)


def discrete_action(path: Path, lattice: Lattice, potential: Potential) -> float:
    """
    Midpoint-rule discrete action.

    Real time sums delta [m qdot_j^2 / 2 - V(qbar_j)], imaginary time sums
    delta [m qdot_j^2 / 2 + V(qbar_j)], with qdot_j = (q_{j+1} - q_j) / delta
    and qbar_j = (q_j + q_{j+1}) / 2, over j = 0 ... N-1.

    Args:
        path: Positions on the lattice
        lattice: Time lattice; its signature selects the formula
        potential: Potential evaluated at slice midpoints

    Returns:
        The action (Euclidean) or the real-time phase argument
    """
    path.check_lattice(lattice)
    q = path.positions
    if not np.all(np.isfinite(q)):
        raise DomainError("Path contains non-finite positions")

    delta = lattice.spacing
    steps = np.diff(q)
    midpoints = 0.5 * (q[:-1] + q[1:])
    kinetic = 0.5 * potential.m * steps**2 / delta
    potential_term = delta * potential.value(midpoints)

    if lattice.signature is Signature.EUCLIDEAN:
        return float(np.sum(kinetic + potential_term))
    return float(np.sum(kinetic - potential_term))
