"""
Semiclassical tunneling: instanton action, dilute-gas sums, energy
splitting, the theta band of a periodic potential, and calibration of the
fluctuation ratio R against the spectral oracle.

R (per unit imaginary time) is never derived from fluctuation determinants;
it is either supplied or calibrated, and carries its provenance.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum

from scipy import special

from .errors import ConfigurationError, DomainError
from .gaussian import checked_quad, instanton_frequency, instanton_profile, instanton_velocity
from .model import Potential, PotentialKind
from .spectral import SpectralGrid, splitting

logger = logging.getLogger(__name__)

PROFILE_RANGE = 40.0
SERIES_TOLERANCE = 1e-17
MAX_SECTORS = 1000
R_STABILITY_LIMIT = 0.25


class RProvenance(str, Enum):
    UNSET = "unset"
    USER = "user"
    ORACLE = "oracle"


def _closed_form_action(lam: float, a: float) -> float:
    return math.sqrt(lam / 3.0) * 2.0 * a**3 / 3.0


def profile_action(lam: float, a: float) -> float:
    """Quadrature of [q'^2/2 + V(q)] along the instanton profile over +-40/w."""
    omega = instanton_frequency(a, lam)
    well = Potential.double_well(lam=lam, a=a)
    half = PROFILE_RANGE / omega

    def density(tau: float) -> float:
        q = instanton_profile(tau, a, lam)
        velocity = instanton_velocity(tau, a, lam)
        return float(0.5 * velocity**2 + well.value(q))

    value, _ = checked_quad(density, -half, half, epsabs=0.0, epsrel=1e-10, limit=200)
    return value


def instanton_action(lam: float, a: float, verify: bool = True) -> tuple[float, float]:
    """
    (S_inst, w) with S_inst = sqrt(lam/3) 2 a^3 / 3 and w = sqrt(lam a^2 / 3).

    With verify the closed form is compared against profile_action.
    """
    omega = instanton_frequency(a, lam)
    action = _closed_form_action(lam, a)
    if verify:
        numeric = profile_action(lam, a)
        if abs(numeric - action) > 1e-8 * action:
            logger.warning(
                "Profile quadrature %.12g disagrees with closed-form action %.12g",
                numeric,
                action,
            )
    return action, omega


def well_to_well_action(potential: Potential) -> float:
    """Integral of sqrt(2 m V) between adjacent classical minima."""
    if potential.kind is PotentialKind.DOUBLE_WELL:
        low, high = -potential.a, potential.a
    elif potential.kind is PotentialKind.PERIODIC:
        low, high = 0.0, potential.period
    else:
        raise DomainError(f"No degenerate minima for a {potential.kind.value} potential")

    def momentum(q: float) -> float:
        return math.sqrt(max(2.0 * potential.m * float(potential.value(q)), 0.0))

    value, _ = checked_quad(momentum, low, high, epsabs=0.0, epsrel=1e-10)
    return value


@dataclass(frozen=True)
class InstantonParams:
    """
    Curvature frequency w, one-instanton action S and the fluctuation ratio R.

    Build double-well parameters with InstantonParams.double_well and
    periodic-potential parameters with InstantonParams.periodic.
    """

    omega: float
    action: float
    hbar: float = 1.0
    r: float | None = None
    provenance: RProvenance = RProvenance.UNSET
    a: float | None = None
    lam: float | None = None

    def __post_init__(self) -> None:
        if self.omega <= 0 or self.action <= 0 or self.hbar <= 0:
            raise DomainError("InstantonParams needs omega, action and hbar > 0")
        if self.r is not None:
            if not math.isfinite(self.r) or self.r < 0:
                raise DomainError(f"R must be finite and non-negative, got {self.r}")
            if self.provenance is RProvenance.UNSET:
                object.__setattr__(self, "provenance", RProvenance.USER)

    @classmethod
    def double_well(
        cls, lam: float, a: float, hbar: float = 1.0, r: float | None = None
    ) -> "InstantonParams":
        action, omega = instanton_action(lam, a, verify=False)
        return cls(omega, action, hbar, r, a=a, lam=lam)

    @classmethod
    def periodic(cls, potential: Potential, r: float | None = None) -> "InstantonParams":
        if potential.kind is not PotentialKind.PERIODIC:
            raise DomainError(f"Expected a periodic potential, got {potential.kind.value}")
        return cls(
            potential.curvature_frequency,
            well_to_well_action(potential),
            potential.hbar,
            r,
        )

    def with_r(self, r: float, provenance: RProvenance = RProvenance.USER) -> "InstantonParams":
        return replace(self, r=r, provenance=provenance)

    def potential(self) -> Potential:
        if self.a is None or self.lam is None:
            raise ConfigurationError("Parameters were not built from a double well")
        return Potential.double_well(lam=self.lam, a=self.a, hbar=self.hbar)

    def require_r(self) -> float:
        if self.r is None:
            raise ConfigurationError("Fluctuation ratio R is not set; supply or calibrate it")
        return self.r

    @property
    def tunneling_rate(self) -> float:
        """R exp(-S / hbar)."""
        return self.require_r() * math.exp(-self.action / self.hbar)


class Endpoints(str, Enum):
    SAME_WELL = "same"
    OPPOSITE_WELL = "opposite"


@dataclass(frozen=True)
class DiluteGasResult:
    """
    Instanton-sector decomposition of the Euclidean propagator between wells.

    sector_weights maps the total instanton count k to prefactor Q^k / k!;
    same-well endpoints populate even k only, opposite-well odd k only.
    """

    beta: float
    endpoints: Endpoints
    prefactor: float
    q: float
    sector_weights: dict[int, float] = field(repr=False)
    closed_form: float
    energies: tuple[float, float]

    def partial_sums(self) -> list[float]:
        """Running sums over the sectors in increasing k."""
        sums, total = [], 0.0
        for k in sorted(self.sector_weights):
            total += self.sector_weights[k]
            sums.append(total)
        return sums


def dilute_gas_propagator(
    beta: float,
    params: InstantonParams,
    endpoints: Endpoints = Endpoints.SAME_WELL,
    max_instantons: int | None = None,
) -> DiluteGasResult:
    """
    K_E between the well bottoms summed over instanton sectors.

    Same well: (w / pi hbar)^(1/2) exp(-beta w / 2) cosh(Q); opposite wells:
    the same with sinh(Q), Q = beta R exp(-S / hbar).

    Raises:
        ConfigurationError: R unset
    """
    if beta <= 0:
        raise DomainError(f"beta must be positive, got {beta}")
    endpoints = Endpoints(endpoints)
    q = beta * params.tunneling_rate
    prefactor = math.sqrt(params.omega / (math.pi * params.hbar)) * math.exp(
        -0.5 * beta * params.omega
    )
    parity = 0 if endpoints is Endpoints.SAME_WELL else 1
    limit = MAX_SECTORS if max_instantons is None else max_instantons

    weights: dict[int, float] = {}
    running = 0.0
    for k in range(parity, limit + 1, 2):
        if q == 0.0:
            if k == 0:
                weights[0] = prefactor
            break
        weight = prefactor * math.exp(k * math.log(q) - math.lgamma(k + 1))
        weights[k] = weight
        running += weight
        if max_instantons is None and k > q and weight < SERIES_TOLERANCE * running:
            break

    closed = prefactor * (math.cosh(q) if parity == 0 else math.sinh(q))
    shift = params.hbar * params.tunneling_rate
    ground = 0.5 * params.hbar * params.omega
    return DiluteGasResult(
        beta=beta,
        endpoints=endpoints,
        prefactor=prefactor,
        q=q,
        sector_weights=weights,
        closed_form=closed,
        energies=(ground - shift, ground + shift),
    )


def energy_splitting(params: InstantonParams) -> float:
    """Delta E = 2 hbar R exp(-S / hbar)."""
    return 2.0 * params.hbar * params.tunneling_rate


def calibrate_r(params: InstantonParams, oracle_splitting: float) -> InstantonParams:
    """R = Delta E exp(S / hbar) / (2 hbar), tagged with oracle provenance."""
    if not oracle_splitting > 0:
        raise DomainError(f"Oracle splitting must be positive, got {oracle_splitting}")
    r = oracle_splitting * math.exp(params.action / params.hbar) / (2.0 * params.hbar)
    return params.with_r(r, RProvenance.ORACLE)


def calibrate_from_oracle(
    params: InstantonParams, grid: SpectralGrid | None = None
) -> InstantonParams:
    """Calibrate R from the finite-difference splitting of the same double well."""
    delta = splitting(params.potential(), grid, params.hbar)
    logger.info("Oracle splitting %.10g at hbar=%g", delta, params.hbar)
    return calibrate_r(params, delta)


@dataclass(frozen=True)
class RStability:
    hbars: tuple[float, ...]
    r_values: tuple[float, ...]
    variation: float

    @property
    def stable(self) -> bool:
        return self.variation < R_STABILITY_LIMIT


def r_stability(
    lam: float,
    a: float,
    hbars: tuple[float, ...] = (0.6, 0.8, 1.0),
    grid: SpectralGrid | None = None,
) -> RStability:
    """Calibrated R across hbar; variation is (max - min) / max."""
    values = tuple(
        calibrate_from_oracle(InstantonParams.double_well(lam, a, hbar), grid).require_r()
        for hbar in hbars
    )
    variation = (max(values) - min(values)) / max(values)
    if variation >= R_STABILITY_LIMIT:
        logger.warning(
            "Calibrated R varies by %.0f%% over hbar=%s; the dilute-gas picture is "
            "not quantitatively reliable here",
            100 * variation,
            hbars,
        )
    return RStability(tuple(hbars), values, variation)


def periodic_band_energy(theta: float, params: InstantonParams) -> float:
    """E(theta) = hbar w / 2 - 2 hbar R exp(-S / hbar) cos(theta)."""
    if not 0.0 <= theta < 2.0 * math.pi:
        raise DomainError(f"theta must lie in [0, 2 pi), got {theta}")
    return 0.5 * params.hbar * params.omega - 2.0 * params.hbar * params.tunneling_rate * math.cos(
        theta
    )


def band_width(params: InstantonParams) -> float:
    """E(pi) - E(0) = 4 hbar R exp(-S / hbar)."""
    return 4.0 * params.hbar * params.tunneling_rate


def periodic_sector_sum(q: float) -> float:
    """sum_n Q^(2n) / (n!)^2, the return amplitude with equal instanton and anti-instanton counts."""
    if q < 0:
        raise DomainError(f"Q must be non-negative, got {q}")
    if q == 0.0:
        return 1.0
    total = 0.0
    for n in range(MAX_SECTORS + 1):
        term = math.exp(2 * n * math.log(q) - 2.0 * math.lgamma(n + 1))
        total += term
        if n > q and term < SERIES_TOLERANCE * total:
            break
    return total


def periodic_theta_integral(q: float) -> float:
    """integral_0^{2 pi} dtheta / 2 pi exp(2 Q cos theta) by quadrature."""
    if q < 0:
        raise DomainError(f"Q must be non-negative, got {q}")
    value, _ = checked_quad(
        lambda theta: math.exp(2.0 * q * math.cos(theta)),
        0.0,
        2.0 * math.pi,
        epsabs=0.0,
        epsrel=1e-12,
        limit=200,
    )
    return value / (2.0 * math.pi)


def bessel_reference(q: float) -> float:
    """I_0(2Q), the closed form of both periodic sums."""
    return float(special.i0(2.0 * q))


def sector_table(result: DiluteGasResult) -> list[dict[str, float]]:
    """Rows of (k, weight, partial_sum) for output."""
    rows = []
    for (k, weight), partial in zip(sorted(result.sector_weights.items()), result.partial_sums()):
        rows.append({"instantons": k, "weight": weight, "partial_sum": partial})
    return rows

