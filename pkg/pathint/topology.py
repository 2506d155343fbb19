"""
Phase bookkeeping for non-simply-connected configuration spaces.

Aharonov-Bohm interference, exchange-statistics phases in two and three
dimensions, winding-sector sums and Dirac charge quantization, all in
Gaussian units with explicit hbar and c. Sector amplitudes are supplied by
the caller; nothing here computes dynamics.
"""

import cmath
import math
from collections.abc import Mapping
from dataclasses import dataclass

from .errors import DomainError

TWO_PI = 2.0 * math.pi
PHASE_TOLERANCE = 1e-12


def wrap_phase(phase: float) -> float:
    """phase mod 2 pi in [0, 2 pi)."""
    wrapped = math.fmod(phase, TWO_PI)
    if wrapped < 0:
        wrapped += TWO_PI
    return 0.0 if wrapped >= TWO_PI else wrapped


@dataclass(frozen=True)
class InterferenceSetup:
    """Two-path geometry enclosing magnetic flux."""

    base_phase: float = 0.0
    flux: float = 0.0
    charge: float = 1.0
    hbar: float = 1.0
    c: float = 1.0

    def __post_init__(self) -> None:
        for name in ("base_phase", "flux", "charge", "hbar", "c"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.charge <= 0 or self.hbar <= 0 or self.c <= 0:
            raise DomainError("charge, hbar and c must be positive")

    @property
    def flux_phase(self) -> float:
        """e Phi / (hbar c)."""
        return self.charge * self.flux / (self.hbar * self.c)


@dataclass(frozen=True)
class PhaseResult:
    raw: float
    wrapped: float


def ab_relative_phase(setup: InterferenceSetup) -> PhaseResult:
    """phi'_12 = phi_12 - e Phi / (hbar c), raw and mod 2 pi."""
    raw = setup.base_phase - setup.flux_phase
    return PhaseResult(raw, wrap_phase(raw))


def two_slit_intensity(a1: complex, a2: complex, setup: InterferenceSetup) -> float:
    """|A_1 + exp(-i e Phi / hbar c) A_2|^2."""
    amplitude = a1 + cmath.exp(-1j * setup.flux_phase) * a2
    return abs(amplitude) ** 2


def flux_quantum(setup: InterferenceSetup) -> float:
    """The flux period 2 pi hbar c / e of every interference observable."""
    return TWO_PI * setup.hbar * setup.c / setup.charge


@dataclass(frozen=True)
class StatisticsPhase:
    """
    Phase weighting exchange sectors, C_n = exp(i n phi).

    In three dimensions phi is restricted to 0 (bosons) or pi (fermions).
    """

    dimension: int
    phi: float

    def __post_init__(self) -> None:
        allowed = statistics_solutions(self.dimension)
        if not allowed.contains(self.phi):
            raise DomainError(
                f"phi = {self.phi} is not an allowed statistics phase in "
                f"{self.dimension} dimensions"
            )

    def coefficient(self, n: int) -> complex:
        return cmath.exp(1j * n * self.phi)

    @property
    def exchange_sign(self) -> complex:
        """C_1, the factor of a single exchange."""
        return self.coefficient(1)


@dataclass(frozen=True)
class AllowedPhases:
    """Discrete allowed phases, or the whole circle when discrete is None."""

    dimension: int
    discrete: tuple[float, ...] | None

    def contains(self, phi: float) -> bool:
        if not math.isfinite(phi):
            return False
        if self.discrete is None:
            return True
        wrapped = wrap_phase(phi)
        return any(
            min(abs(wrapped - p), TWO_PI - abs(wrapped - p)) < PHASE_TOLERANCE
            for p in self.discrete
        )


def statistics_solutions(dimension: int) -> AllowedPhases:
    """
    Consistent statistics phases.

    Three dimensions: exp(2 i phi) = 1, so phi in {0, pi}. Two dimensions: C_n
    = exp(i phi) C_{n-1} only, so any phi in [0, 2 pi).
    """
    if dimension == 3:
        return AllowedPhases(3, (0.0, math.pi))
    if dimension == 2:
        return AllowedPhases(2, None)
    raise DomainError(f"Unsupported dimension {dimension}; only 2 and 3 are defined")


def winding_amplitude(sector_amplitudes: Mapping[int, complex], phi: float) -> complex:
    """A = sum_n exp(i n phi) A_n over the supplied winding sectors."""
    return sum(
        (cmath.exp(1j * n * phi) * amplitude for n, amplitude in sector_amplitudes.items()),
        start=0j,
    )


def shift_sectors(sector_amplitudes: Mapping[int, complex], shift: int = 1) -> dict[int, complex]:
    """Relabel B_n = A_{n + shift}; the winding sum picks up exp(-i shift phi)."""
    return {n - shift: amplitude for n, amplitude in sector_amplitudes.items()}


def dirac_charge_unit(n: int, g: float, hbar: float = 1.0, c: float = 1.0) -> float:
    """e = n hbar c / (2 g)."""
    if g == 0 or not math.isfinite(g):
        raise DomainError(f"Magnetic charge must be finite and non-zero, got {g}")
    return n * hbar * c / (2.0 * g)


def dirac_string_phase(e: float, g: float, hbar: float = 1.0, c: float = 1.0) -> float:
    """Phase -4 pi e g / (hbar c) picked up by a charge circling the Dirac string."""
    return -2.0 * TWO_PI * e * g / (hbar * c)


def string_is_invisible(phase: float) -> bool:
    """True when the string phase is a multiple of 2 pi."""
    wrapped = wrap_phase(phase)
    return min(wrapped, TWO_PI - wrapped) < PHASE_TOLERANCE * max(1.0, abs(phase))
