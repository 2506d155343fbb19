"""
Ground-state energy estimates.

The large-beta log-slope estimator, the closed-form first-order anharmonic
correction, the same correction routed through the Wick expansion, and the
spectral oracle, side by side.
"""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import Enum

from .errors import DomainError
from .gaussian import ho_propagator
from .model import Potential, Signature
from .spectral import SpectralGrid, diagonalize
from .wick import MIN_BETA_OMEGA, euclidean_first_order_ke_ratio

logger = logging.getLogger(__name__)

# Multiples of 1/omega; every rung satisfies the large-beta guard of the Wick route.
DEFAULT_LADDER = (MIN_BETA_OMEGA, 1.5 * MIN_BETA_OMEGA, 2.0 * MIN_BETA_OMEGA)


class EstimateOrder(str, Enum):
    EXACT_QUADRATIC = "exact-quadratic"
    FIRST_ORDER = "first-order"
    ORACLE = "oracle"


@dataclass(frozen=True)
class EnergyEstimate:
    """A ground-state energy with its provenance and uncertainty."""

    value: float
    order: EstimateOrder
    error_bar: float = 0.0

    def __post_init__(self) -> None:
        if self.error_bar < 0:
            raise DomainError(f"error_bar must be non-negative, got {self.error_bar}")


def _check_positive(**values: float) -> None:
    for name, value in values.items():
        if not value > 0:
            raise DomainError(f"{name} must be positive, got {value}")


def anharmonic_e0_first_order(
    m: float = 1.0, omega: float = 1.0, lam: float = 0.0, hbar: float = 1.0
) -> EnergyEstimate:
    """E_0 = hbar w / 2 + hbar^2 lam / (32 m^2 w^2)."""
    _check_positive(m=m, omega=omega, hbar=hbar)
    if lam < 0:
        raise DomainError(f"lam must be non-negative, got {lam}")
    value = 0.5 * hbar * omega + hbar**2 * lam / (32.0 * m**2 * omega**2)
    order = EstimateOrder.FIRST_ORDER if lam else EstimateOrder.EXACT_QUADRATIC
    return EnergyEstimate(value, order)


def log_slope_energy(
    propagator_diag: Callable[[float], float],
    beta_ladder: Sequence[float],
    hbar: float = 1.0,
    order: EstimateOrder = EstimateOrder.EXACT_QUADRATIC,
) -> EnergyEstimate:
    """
    E_0 = -hbar lim (1/beta) ln K_E(0, beta; 0, 0) from successive differences.

    The last difference -[ln K(b_{i+1}) - ln K(b_i)] / (b_{i+1} - b_i) is the
    value; its change from the previous difference is the error bar.

    Raises:
        DomainError: ladder not increasing or shorter than three rungs, or a
            non-positive propagator value
    """
    ladder = [float(b) for b in beta_ladder]
    if len(ladder) < 3:
        raise DomainError(f"beta ladder needs at least 3 rungs, got {len(ladder)}")
    if any(b2 <= b1 for b1, b2 in zip(ladder, ladder[1:])) or ladder[0] <= 0:
        raise DomainError(f"beta ladder must be positive and increasing: {ladder}")

    logs = []
    for beta in ladder:
        value = float(propagator_diag(beta))
        if not (math.isfinite(value) and value > 0):
            raise DomainError(f"Propagator value {value} at beta={beta} is not positive")
        logs.append(math.log(value))

    slopes = [
        -(l2 - l1) / (b2 - b1)
        for (b1, l1), (b2, l2) in zip(zip(ladder, logs), zip(ladder[1:], logs[1:]))
    ]
    logger.debug("Log-slope differences: %s", slopes)
    return EnergyEstimate(hbar * slopes[-1], order, hbar * abs(slopes[-1] - slopes[-2]))


def first_order_log_slope_energy(
    m: float = 1.0,
    omega: float = 1.0,
    lam: float = 0.0,
    hbar: float = 1.0,
    beta_ladder: Sequence[float] | None = None,
) -> EnergyEstimate:
    """
    Log slope of K_E^HO(0, beta; 0, 0) exp(-beta r(beta)), r from the Wick route.

    Ladder rungs are Euclidean times; the default scales DEFAULT_LADDER by 1/w.
    """
    _check_positive(m=m, omega=omega, hbar=hbar)
    if beta_ladder is None:
        beta_ladder = [b / omega for b in DEFAULT_LADDER]

    def diagonal(beta: float) -> float:
        free = float(ho_propagator(0.0, 0.0, beta, m, omega, Signature.EUCLIDEAN, hbar).value)
        ratio = euclidean_first_order_ke_ratio(beta, m, omega, lam, hbar)
        return free * math.exp(-beta * ratio)

    return log_slope_energy(diagonal, beta_ladder, hbar, EstimateOrder.FIRST_ORDER)


def oracle_ground_state(
    m: float = 1.0,
    omega: float = 1.0,
    lam: float = 0.0,
    hbar: float = 1.0,
    grid: SpectralGrid | None = None,
) -> EnergyEstimate:
    """Finite-difference ground state of the anharmonic oscillator."""
    potential = Potential.anharmonic(m=m, omega=omega, lam=lam, hbar=hbar)
    spectrum = diagonalize(potential, grid, n_states=1)
    return EnergyEstimate(
        spectrum.ground_energy,
        EstimateOrder.ORACLE,
        float(spectrum.eigenvalue_errors[0]),
    )


def ground_state_routes(
    m: float = 1.0,
    omega: float = 1.0,
    lam: float = 0.0,
    hbar: float = 1.0,
    beta_ladder: Sequence[float] | None = None,
) -> dict[str, EnergyEstimate]:
    """The formula, Wick log-slope and oracle estimates keyed by route name."""
    routes = {
        "formula": anharmonic_e0_first_order(m, omega, lam, hbar),
        "wick_log_slope": first_order_log_slope_energy(m, omega, lam, hbar, beta_ladder),
        "oracle": oracle_ground_state(m, omega, lam, hbar),
    }
    spread = max(r.value for r in routes.values()) - min(r.value for r in routes.values())
    logger.info("Ground-state routes spread %.3e", spread)
    return routes
