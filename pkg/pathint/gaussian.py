"""
Closed-form results for quadratic actions.

Free and harmonic propagators in both signatures, partition functions,
Green's functions with Dirichlet and Feynman boundary conditions, the source
term exponent of the Euclidean generating functional, and the instanton
profile. Lattice evaluations of the same objects (exact Gaussian elimination,
transfer matrices, lattice covariances) live here too so that every closed
form has a discrete counterpart to be checked against.
"""

import cmath
import logging
import math
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate

from .errors import (
    CausticError,
    DomainError,
    QuadratureError,
    StructuralError,
    UnsupportedSignatureError,
)
from .model import FloatArray, Lattice, Potential, PotentialKind, Signature

logger = logging.getLogger(__name__)

# |sin(omega T)| below this is treated as a caustic
CAUSTIC_TOLERANCE = 1e-12

DEFAULT_EPSILON_LADDER = (1e-2, 1e-3, 1e-4)


@dataclass(frozen=True)
class PropagatorValue:
    """
    A propagator factored as prefactor x phase x exp(action).

    Real time reconstructs as prefactor * phase * exp(i S / hbar); imaginary
    time as prefactor * exp(-S_E / hbar) with phase = +1.
    """

    prefactor_modulus: float
    phase: complex
    classical_action: float
    signature: Signature
    hbar: float = 1.0

    @property
    def value(self) -> complex | float:
        if self.signature is Signature.EUCLIDEAN:
            return self.prefactor_modulus * math.exp(-self.classical_action / self.hbar)
        return (
            self.prefactor_modulus
            * self.phase
            * cmath.exp(1j * self.classical_action / self.hbar)
        )

    @property
    def modulus(self) -> float:
        return abs(self.value)


@dataclass(frozen=True, eq=False)
class SourceFunction:
    """Samples J(tau_j), j = 0 ... N, of an external source on a lattice."""

    lattice: Lattice
    samples: FloatArray = field(repr=False)

    def __post_init__(self) -> None:
        samples = np.array(self.samples, dtype=np.float64)
        if samples.shape != (self.lattice.n_slices + 1,):
            raise StructuralError(
                f"Source has {samples.size} samples, lattice needs "
                f"{self.lattice.n_slices + 1}"
            )
        if not np.all(np.isfinite(samples)):
            raise DomainError("Source samples must be finite")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_callable(
        cls, func: Callable[[FloatArray], ArrayLike], lattice: Lattice
    ) -> "SourceFunction":
        return cls(lattice, np.asarray(func(lattice.times()), dtype=np.float64))

    @classmethod
    def spike(cls, lattice: Lattice, tau: float, strength: float) -> "SourceFunction":
        """Discretized delta function strength * delta(t - tau) at the nearest slice."""
        samples = np.zeros(lattice.n_slices + 1)
        index = int(round(tau / lattice.spacing))
        index = min(max(index, 0), lattice.n_slices)
        samples[index] = strength / lattice.spacing
        return cls(lattice, samples)


@dataclass(frozen=True)
class PolePrescription:
    """Small positive regulator epsilon of the Feynman pole prescription."""

    epsilon: float = 1e-3

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")


def _check_extent(extent: float) -> None:
    if not math.isfinite(extent) or extent <= 0:
        raise DomainError(f"Time extent must be positive, got {extent}")


def _log_sinh(x: float) -> float:
    return x + math.log1p(-math.exp(-2.0 * x)) - math.log(2.0)


# Propagators


def free_propagator(
    q: float,
    q_prime: float,
    extent: float,
    m: float = 1.0,
    signature: Signature = Signature.EUCLIDEAN,
    hbar: float = 1.0,
) -> PropagatorValue:
    """
    Free-particle propagator K(q', T; q, 0).

    Real time: (m / 2 pi i hbar T)^(1/2) exp(i m (q'-q)^2 / 2 hbar T).
    Imaginary time: (m / 2 pi hbar beta)^(1/2) exp(-m (q'-q)^2 / 2 hbar beta).
    """
    _check_extent(extent)
    signature = Signature(signature)
    prefactor = math.sqrt(m / (2.0 * math.pi * hbar * extent))
    action = m * (q_prime - q) ** 2 / (2.0 * extent)
    phase = 1.0 + 0j if signature is Signature.EUCLIDEAN else cmath.exp(-0.25j * math.pi)
    return PropagatorValue(prefactor, phase, action, signature, hbar)


def ho_propagator(
    q: float,
    q_prime: float,
    extent: float,
    m: float = 1.0,
    omega: float = 1.0,
    signature: Signature = Signature.EUCLIDEAN,
    hbar: float = 1.0,
) -> PropagatorValue:
    """
    Harmonic-oscillator propagator.

    Real time uses S = (m w / 2 sin wT)((q'^2 + q^2) cos wT - 2 q' q) with
    prefactor (m w / 2 pi i hbar sin wT)^(1/2) on the principal branch; the
    Euclidean form is the continuation T -> -i beta.

    Raises:
        CausticError: real time with sin(omega T) = 0
    """
    _check_extent(extent)
    signature = Signature(signature)
    if omega < 0:
        raise DomainError(f"omega must be non-negative, got {omega}")
    if omega == 0:
        return free_propagator(q, q_prime, extent, m, signature, hbar)

    x = omega * extent
    if signature is Signature.EUCLIDEAN:
        log_prefactor = 0.5 * (
            math.log(m * omega / (2.0 * math.pi * hbar)) - _log_sinh(x)
        )
        inv_sinh = 2.0 * math.exp(-x) / (-math.expm1(-2.0 * x))
        coth = 1.0 / math.tanh(x)
        action = 0.5 * m * omega * ((q**2 + q_prime**2) * coth - 2.0 * q * q_prime * inv_sinh)
        return PropagatorValue(math.exp(log_prefactor), 1.0 + 0j, action, signature, hbar)

    sin_x = math.sin(x)
    if abs(sin_x) < CAUSTIC_TOLERANCE:
        raise CausticError(
            f"Caustic: sin(omega T) = {sin_x:.3e} at omega T = {x}; the propagator "
            "is singular there"
        )
    prefactor = math.sqrt(m * omega / (2.0 * math.pi * hbar * abs(sin_x)))
    phase = cmath.exp(-0.25j * math.pi * math.copysign(1.0, sin_x))
    action = (
        m * omega / (2.0 * sin_x) * ((q_prime**2 + q**2) * math.cos(x) - 2.0 * q_prime * q)
    )
    return PropagatorValue(prefactor, phase, action, signature, hbar)


def ho_partition_function(beta: float, omega: float, hbar: float = 1.0) -> float:
    """Z = exp(-beta hbar w / 2) / (1 - exp(-beta hbar w))."""
    if beta <= 0 or omega <= 0:
        raise DomainError("ho_partition_function requires beta > 0 and omega > 0")
    x = beta * hbar * omega
    return math.exp(-0.5 * x) / -math.expm1(-x)


def partition_function_quadrature(
    beta: float, m: float = 1.0, omega: float = 1.0, hbar: float = 1.0
) -> float:
    """Z = integral dq K_E(q, beta hbar; q, 0), by adaptive quadrature."""
    if beta <= 0 or omega <= 0:
        raise DomainError("partition_function_quadrature requires beta > 0, omega > 0")
    tau = beta * hbar

    def diagonal(q: float) -> float:
        return float(ho_propagator(q, q, tau, m, omega, Signature.EUCLIDEAN, hbar).value)

    value, _ = checked_quad(diagonal, -np.inf, np.inf, epsabs=0.0, epsrel=1e-11)
    return value


# Green's functions


def dirichlet_green(
    tau: ArrayLike, tau_prime: ArrayLike, beta: float, m: float = 1.0, omega: float = 1.0
) -> FloatArray:
    """
    Green's function of m (d^2/dtau^2 - w^2) with G(0, t') = G(beta, t') = 0.

    G = -sinh(w t_<) sinh(w (beta - t_>)) / (m w sinh(w beta)), evaluated in an
    overflow-free exponential form. Broadcasts over tau and tau_prime.
    """
    _check_extent(beta)
    if omega <= 0 or m <= 0:
        raise DomainError("dirichlet_green requires m > 0 and omega > 0")
    t1 = np.asarray(tau, dtype=np.float64)
    t2 = np.asarray(tau_prime, dtype=np.float64)
    slack = 1e-12 * beta
    for t in (t1, t2):
        if np.any(t < -slack) or np.any(t > beta + slack):
            raise DomainError(f"Green's function arguments must lie in [0, {beta}]")

    lower = np.clip(np.minimum(t1, t2), 0.0, beta)
    upper = np.clip(np.maximum(t1, t2), 0.0, beta)
    a = omega * lower
    b = omega * (beta - upper)
    c = omega * beta
    ratio = (
        (-np.expm1(-2.0 * a))
        * (-np.expm1(-2.0 * b))
        * np.exp(a + b - c)
        / (2.0 * -math.expm1(-2.0 * c))
    )
    return np.asarray(-ratio / (m * omega), dtype=np.float64)


def infinite_green(
    tau: ArrayLike, tau_prime: ArrayLike, m: float = 1.0, omega: float = 1.0
) -> FloatArray:
    """The beta -> infinity limit -exp(-w |tau - tau'|) / (2 m w)."""
    separation = np.abs(np.asarray(tau, dtype=np.float64) - np.asarray(tau_prime))
    return np.asarray(-np.exp(-omega * separation) / (2.0 * m * omega), dtype=np.float64)


def fourier_green(delta_tau: float, m: float = 1.0, omega: float = 1.0) -> float:
    """-(1/m) integral dk/2pi exp(i k dtau) / (k^2 + w^2), by quadrature."""
    shift = abs(delta_tau)
    if shift == 0.0:
        value, _ = checked_quad(
            lambda k: 1.0 / (k * k + omega * omega), 0.0, np.inf, epsabs=1e-13
        )
    else:
        value, _ = checked_quad(
            lambda k: 1.0 / (k * k + omega * omega),
            0.0,
            np.inf,
            weight="cos",
            wvar=shift,
        )
    return -value / (math.pi * m)


def feynman_green_exact(delta_t: float, omega: float, epsilon: float) -> complex:
    """Finite-epsilon contour result exp(-i kappa |dt|) / (2 kappa), kappa^2 = w^2 - i eps."""
    kappa = cmath.sqrt(omega * omega - 1j * epsilon)
    return cmath.exp(-1j * kappa * abs(delta_t)) / (2.0 * kappa)


def feynman_green_qm(
    delta_t: float, omega: float, prescription: PolePrescription | None = None
) -> complex:
    """
    Quadrature of integral dk/2pi i exp(-i k dt) / (k^2 - w^2 + i eps).

    The integrand is even in k, so the integral is folded onto [0, inf) and
    split at 2w: the finite part resolves the pole neighbourhood explicitly,
    the tail uses an oscillatory (QAWF) rule when dt != 0.

    Raises:
        QuadratureError: a quadrature piece failed to converge
    """
    if prescription is None:
        prescription = PolePrescription()
    if omega <= 0:
        raise DomainError(f"omega must be positive, got {omega}")
    eps = prescription.epsilon
    shift = abs(delta_t)
    width = eps / (2.0 * omega)
    breakpoints = sorted(
        {p for p in (omega - 20 * width, omega, omega + 20 * width) if 0 < p < 2 * omega}
    )

    def denominator(k: float) -> float:
        d = k * k - omega * omega
        return d * d + eps * eps

    def re_part(k: float) -> float:
        return eps / denominator(k)

    def im_part(k: float) -> float:
        return (k * k - omega * omega) / denominator(k)

    total = 0j
    for part, unit in ((re_part, 1.0), (im_part, 1j)):
        near, _ = checked_quad(
            lambda k, f=part: f(k) * math.cos(k * shift),
            0.0,
            2.0 * omega,
            points=breakpoints,
            limit=2000,
            epsabs=1e-11,
            epsrel=1e-10,
        )
        if shift == 0.0:
            tail, _ = checked_quad(part, 2.0 * omega, np.inf, epsabs=1e-12)
        else:
            tail, _ = checked_quad(
                part, 2.0 * omega, np.inf, weight="cos", wvar=shift, limlst=100
            )
        total += unit * (near + tail)
    return total / math.pi


@dataclass(frozen=True)
class EpsilonLadder:
    """Feynman Green's function at each regulator and the epsilon -> 0 extrapolation."""

    epsilons: tuple[float, ...]
    values: tuple[complex, ...]
    extrapolated: complex


def feynman_green_limit(
    delta_t: float, omega: float, ladder: Sequence[float] = DEFAULT_EPSILON_LADDER
) -> EpsilonLadder:
    """Evaluate the quadrature on a decreasing epsilon ladder and extrapolate linearly."""
    epsilons = tuple(sorted((float(e) for e in ladder), reverse=True))
    if len(epsilons) < 2:
        raise DomainError("Epsilon ladder needs at least two rungs")
    values = tuple(
        feynman_green_qm(delta_t, omega, PolePrescription(e)) for e in epsilons
    )
    e1, e2 = epsilons[-2], epsilons[-1]
    v1, v2 = values[-2], values[-1]
    extrapolated = v2 + (v2 - v1) * e2 / (e1 - e2)
    logger.debug("Feynman ladder %s -> %s", values, extrapolated)
    return EpsilonLadder(epsilons, values, extrapolated)


# Source terms


def _trapezoid_weights(lattice: Lattice) -> FloatArray:
    weights = np.full(lattice.n_slices + 1, lattice.spacing)
    weights[0] = weights[-1] = 0.5 * lattice.spacing
    return weights


def _check_source(source: SourceFunction, beta: float) -> None:
    lattice = source.lattice
    if lattice.signature is not Signature.EUCLIDEAN or not math.isclose(
        lattice.extent, beta, rel_tol=1e-12
    ):
        raise StructuralError(
            f"Source lattice (extent {lattice.extent}, {lattice.signature.value}) "
            f"does not span the Euclidean interval [0, {beta}]"
        )


def quadratic_generating_exponent(
    source: SourceFunction, beta: float, m: float = 1.0, omega: float = 1.0
) -> float:
    """
    1/2 integral dtau dtau' J(tau) G(tau, tau') J(tau') with the Dirichlet G.

    The J-independent normalization C of K_E^0[J] = C exp(...) is never
    computed; observables are formed as ratios in which it cancels.
    """
    _check_source(source, beta)
    times = source.lattice.times()
    green = dirichlet_green(times[:, None], times[None, :], beta, m, omega)
    weighted = _trapezoid_weights(source.lattice) * source.samples
    return float(0.5 * weighted @ green @ weighted)


def source_classical_path(
    source: SourceFunction, beta: float, m: float = 1.0, omega: float = 1.0
) -> FloatArray:
    """
    Solution of m q'' = m w^2 q - J with q(0) = q(beta) = 0.

    With G defined by m (d^2 - w^2) G = delta this is q = -integral G J.
    """
    _check_source(source, beta)
    times = source.lattice.times()
    green = dirichlet_green(times[:, None], times[None, :], beta, m, omega)
    weighted = _trapezoid_weights(source.lattice) * source.samples
    return np.asarray(-(green @ weighted), dtype=np.float64)


# Instanton profile


def instanton_frequency(a: float, lam: float) -> float:
    if a <= 0 or lam <= 0:
        raise DomainError("Instanton requires a > 0 and lam > 0")
    return math.sqrt(lam * a * a / 3.0)


def instanton_profile(
    tau: ArrayLike, a: float, lam: float, tau0: float = 0.0
) -> FloatArray:
    """q(tau) = a tanh((w/2)(tau - tau0)), w = sqrt(lam a^2 / 3)."""
    omega = instanton_frequency(a, lam)
    t = np.asarray(tau, dtype=np.float64)
    return np.asarray(a * np.tanh(0.5 * omega * (t - tau0)), dtype=np.float64)


def instanton_velocity(
    tau: ArrayLike, a: float, lam: float, tau0: float = 0.0
) -> FloatArray:
    """dq/dtau = (a w / 2) sech^2((w/2)(tau - tau0))."""
    omega = instanton_frequency(a, lam)
    t = np.asarray(tau, dtype=np.float64)
    return np.asarray(
        0.5 * a * omega / np.cosh(0.5 * omega * (t - tau0)) ** 2, dtype=np.float64
    )


# Lattice evaluations


def _quadratic_coefficients(lattice: Lattice, potential: Potential) -> tuple[float, float]:
    """
    (u, v) such that the midpoint-rule slice action over hbar reads
    u (y^2 + x^2) - 2 v x y.
    """
    if potential.kind not in (PotentialKind.FREE, PotentialKind.HARMONIC):
        raise DomainError(
            f"Exact lattice elimination needs a quadratic potential, got {potential.kind.value}"
        )
    delta = lattice.spacing
    kinetic = potential.m / (2.0 * delta * potential.hbar)
    curvature = delta * potential.m * potential.omega**2 / (8.0 * potential.hbar)
    return kinetic + curvature, kinetic - curvature


def lattice_propagator(
    q: float, q_prime: float, lattice: Lattice, potential: Potential
) -> float:
    """
    N-slice Euclidean path integral of a quadratic potential, integrated exactly.

    Each slice contributes (m / 2 pi hbar delta)^(1/2) exp(-S_j / hbar) with the
    midpoint-rule S_j; the N-1 interior positions are eliminated one Gaussian
    integral at a time, keeping the running kernel as exp(L - alpha x^2 + b x).
    """
    if lattice.signature is not Signature.EUCLIDEAN:
        raise UnsupportedSignatureError("lattice_propagator is Euclidean only")
    u, v = _quadratic_coefficients(lattice, potential)
    log_norm = 0.5 * math.log(
        potential.m / (2.0 * math.pi * potential.hbar * lattice.spacing)
    )

    alpha, b, log_c = u, 2.0 * v * q, log_norm - u * q * q
    for _ in range(lattice.n_slices - 1):
        width = alpha + u
        log_c += log_norm + 0.5 * math.log(math.pi / width) + b * b / (4.0 * width)
        alpha, b = u - v * v / width, b * v / width
    return math.exp(log_c - alpha * q_prime**2 + b * q_prime)


def transfer_matrix_propagator(
    q: float,
    q_prime: float,
    lattice: Lattice,
    potential: Potential,
    q_min: float = -8.0,
    q_max: float = 8.0,
    n_points: int = 801,
) -> float:
    """N-slice Euclidean path integral of any potential by grid quadrature."""
    if lattice.signature is not Signature.EUCLIDEAN:
        raise UnsupportedSignatureError("transfer_matrix_propagator is Euclidean only")
    grid, h = np.linspace(q_min, q_max, n_points, retstep=True)
    delta = lattice.spacing
    m, hbar = potential.m, potential.hbar
    norm = math.sqrt(m / (2.0 * math.pi * hbar * delta))

    def slice_weight(x: ArrayLike, y: ArrayLike) -> FloatArray:
        x = np.asarray(x)
        y = np.asarray(y)
        action = 0.5 * m * (y - x) ** 2 / delta + delta * potential.value(0.5 * (x + y))
        return np.asarray(norm * np.exp(-action / hbar), dtype=np.float64)

    if lattice.n_slices == 1:
        return float(slice_weight(q, q_prime))

    transfer = slice_weight(grid[:, None], grid[None, :]) * h
    state = slice_weight(q, grid)
    for _ in range(lattice.n_slices - 2):
        state = state @ transfer
    return float(h * state @ slice_weight(grid, q_prime))


def lattice_covariance(lattice: Lattice, potential: Potential) -> NDArray[np.float64]:
    """
    Exact <q_i q_j> on a periodic lattice of N sites for a quadratic potential.

    The midpoint-rule action is S / hbar = 1/2 q^T M q with
    M = 4u - 2v (P + P^T), P the cyclic shift; the covariance is M^{-1}.
    """
    if potential.kind is not PotentialKind.HARMONIC or potential.omega <= 0:
        raise DomainError("lattice_covariance needs a harmonic potential with omega > 0")
    u, v = _quadratic_coefficients(lattice, potential)
    n = lattice.n_slices
    shift = np.roll(np.eye(n), 1, axis=1)
    matrix = 4.0 * u * np.eye(n) - 2.0 * v * (shift + shift.T)
    return np.asarray(np.linalg.inv(matrix), dtype=np.float64)


def checked_quad(
    func: Callable[..., float], a: float, b: float, **kwargs: object
) -> tuple[float, float]:
    """scipy quad that turns integration warnings into QuadratureError."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, abserr = integrate.quad(func, a, b, **kwargs)  # type: ignore[arg-type]
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"Quadrature did not converge: {exc}", math.nan) from exc
    tolerance = max(1e-8, 1e-6 * abs(value))
    if not math.isfinite(value) or abserr > tolerance:
        raise QuadratureError(
            f"Quadrature residual {abserr:.3e} exceeds tolerance {tolerance:.1e}", abserr
        )
    return float(value), float(abserr)
