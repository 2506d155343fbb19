"""
Wick pairings and derivative-assignment combinatorics.

Terms are kept symbolic (kernel-argument labels plus an exact sympy
coefficient) until a kernel is supplied. The same engine produces the free
n-point functions, the order-lambda two-point terms with their symmetry
factors, the vacuum terms of the denominator, and the cancellation of the
disconnected parts between the two.
"""

import logging
import math
from collections import Counter
from collections.abc import Callable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from itertools import permutations

import numpy as np
import sympy

from .errors import CapacityError, DomainError, PreconditionError
from .gaussian import checked_quad, dirichlet_green
from .model import Signature

logger = logging.getLogger(__name__)

MAX_PAIRING_POINTS = 16
# Derivative assignments are enumerated explicitly; 8! keeps this interactive.
MAX_DERIVATIVES = 8
MAX_VERTICES = 1
VERTEX_LABEL = "x"
MIN_BETA_OMEGA = 20.0

LAMBDA = sympy.Symbol("lambda", positive=True)

Kernel = Callable[[float, float], complex | float]
KernelFactor = tuple[str, str]


@dataclass(frozen=True)
class Pairing:
    """A perfect matching of the labels 1 ... 2n, in canonical order."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        labels = sorted(label for pair in self.pairs for label in pair)
        if labels != list(range(1, len(labels) + 1)):
            raise DomainError(f"Pairing must cover 1..{len(labels)} exactly once")
        if any(i >= j for i, j in self.pairs) or list(self.pairs) != sorted(self.pairs):
            raise DomainError("Pairing is not in canonical order")

    def __len__(self) -> int:
        return len(self.pairs)


def _pairings(items: list[int]) -> Iterator[list[tuple[int, int]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for i, partner in enumerate(rest):
        for tail in _pairings(rest[:i] + rest[i + 1 :]):
            yield [(first, partner), *tail]


def enumerate_pairings(n_points: int) -> list[Pairing]:
    """
    All perfect matchings of n_points labels, (n_points - 1)!! of them.

    Raises:
        DomainError: odd or negative n_points
        CapacityError: n_points above MAX_PAIRING_POINTS
    """
    if n_points < 0 or n_points % 2:
        raise DomainError(f"Pairings need an even, non-negative count, got {n_points}")
    if n_points > MAX_PAIRING_POINTS:
        raise CapacityError(
            f"{n_points} points exceeds the pairing guard of {MAX_PAIRING_POINTS}"
        )
    return [Pairing(tuple(p)) for p in _pairings(list(range(1, n_points + 1)))]


def free_npoint(points: Sequence[float], kernel: Kernel) -> complex | float:
    """Sum over pairings of products of kernel(t_i, t_j); zero for odd counts."""
    if len(points) % 2:
        return 0.0
    total: complex | float = 0.0
    for pairing in enumerate_pairings(len(points)):
        product: complex | float = 1.0
        for i, j in pairing.pairs:
            product *= kernel(points[i - 1], points[j - 1])
        total += product
    return total


@dataclass(frozen=True)
class ContractionTerm:
    """
    One distinct analytic expression of a derivative-assignment expansion.

    kernel_factors are canonical (sorted) argument pairs; labels listed in
    integrated_labels are integrated over the time interval. coefficient is
    exact and already multiplied by the multiplicity.
    """

    kernel_factors: tuple[KernelFactor, ...]
    multiplicity: int
    coefficient: sympy.Expr
    integrated_labels: tuple[str, ...] = ()
    signature: Signature = Signature.EUCLIDEAN

    @property
    def external_labels(self) -> tuple[str, ...]:
        labels = {label for pair in self.kernel_factors for label in pair}
        return tuple(sorted(labels - set(self.integrated_labels)))

    @property
    def n_vertices(self) -> int:
        return len(self.integrated_labels)

    @property
    def symmetry_factor(self) -> sympy.Expr:
        """Coefficient divided by the bare coupling (-lambda or -i lambda) per vertex."""
        unit = -LAMBDA if self.signature is Signature.EUCLIDEAN else -sympy.I * LAMBDA
        return sympy.simplify(self.coefficient / unit**self.n_vertices)

    @property
    def is_connected(self) -> bool:
        """True when every kernel factor is linked to an external label."""
        externals = set(self.external_labels)
        if not externals:
            return False
        return all(component & externals for component in _components(self.kernel_factors))

    def describe(self) -> str:
        factors = " ".join(f"G({i},{j})" for i, j in self.kernel_factors)
        if self.integrated_labels:
            measure = " ".join(f"d{label}" for label in self.integrated_labels)
            return f"{self.coefficient} * int {measure} {factors}"
        return f"{self.coefficient} * {factors}"


def _components(factors: Sequence[KernelFactor]) -> list[set[str]]:
    """Connected components of the labels linked by kernel factors."""
    components: list[set[str]] = []
    for i, j in factors:
        merged = {i, j}
        rest = []
        for component in components:
            if component & merged:
                merged |= component
            else:
                rest.append(component)
        components = [*rest, merged]
    return components


def _vertex_factor(signature: Signature) -> sympy.Expr:
    coupling = LAMBDA / sympy.factorial(4)
    return -coupling if signature is Signature.EUCLIDEAN else -sympy.I * coupling


def contraction_terms(
    external_labels: Sequence[str],
    n_vertices: int = 1,
    signature: Signature = Signature.EUCLIDEAN,
) -> list[ContractionTerm]:
    """
    Expand derivatives of the free generating functional into distinct terms.

    Each external label contributes one derivative, each quartic vertex four
    derivatives at the integrated label VERTEX_LABEL. The 2k derivatives act
    on the J^{2k} term (s/2)^k / k! (J G J)^k; every one of the (2k)!
    assignments of derivatives to J slots is enumerated and grouped by its
    canonical kernel-factor list. Imaginary time uses s = +1 and the vertex
    -lambda/4!; real time uses s = -1, the vertex -i lambda/4! and a factor
    1/i per external derivative.

    Raises:
        CapacityError: more than MAX_VERTICES vertices or MAX_DERIVATIVES derivatives
        DomainError: external labels repeat or collide with the vertex label
    """
    signature = Signature(signature)
    externals = tuple(external_labels)
    if n_vertices < 0:
        raise DomainError(f"n_vertices must be non-negative, got {n_vertices}")
    if n_vertices > MAX_VERTICES:
        raise CapacityError(
            f"Automatic expansion stops at {MAX_VERTICES} vertex; got {n_vertices}"
        )
    if len(set(externals)) != len(externals) or VERTEX_LABEL in externals:
        raise DomainError(
            f"External labels must be distinct and differ from '{VERTEX_LABEL}'"
        )

    labels = [*externals, *[VERTEX_LABEL] * (4 * n_vertices)]
    n_derivatives = len(labels)
    if n_derivatives % 2:
        return []
    if n_derivatives > MAX_DERIVATIVES:
        raise CapacityError(
            f"{n_derivatives} derivatives exceed the assignment guard of {MAX_DERIVATIVES}"
        )

    order = n_derivatives // 2
    sign = 1 if signature is Signature.EUCLIDEAN else -1
    external_factor = 1 if signature is Signature.EUCLIDEAN else (1 / sympy.I) ** len(externals)
    per_assignment = sympy.sympify(
        external_factor
        * _vertex_factor(signature) ** n_vertices
        / sympy.factorial(n_vertices)
        * sympy.Rational(sign, 2) ** order
        / sympy.factorial(order)
    )

    counts: Counter[tuple[KernelFactor, ...]] = Counter()
    for slots in permutations(range(n_derivatives)):
        # derivative slots[s] hits J slot s; factor f owns slots 2f and 2f+1
        factors = tuple(
            sorted(
                tuple(sorted((labels[slots[2 * f]], labels[slots[2 * f + 1]])))
                for f in range(order)
            )
        )
        counts[factors] += 1  # type: ignore[index]

    integrated = (VERTEX_LABEL,) if n_vertices else ()
    terms = [
        ContractionTerm(
            kernel_factors=factors,
            multiplicity=count,
            coefficient=sympy.expand(count * per_assignment),
            integrated_labels=integrated,
            signature=signature,
        )
        for factors, count in counts.items()
    ]
    terms.sort(key=lambda term: (not term.is_connected, term.kernel_factors))
    logger.debug(
        "Expanded %d derivatives into %d terms over %d assignments",
        n_derivatives,
        len(terms),
        math.factorial(n_derivatives),
    )
    return terms


def first_order_two_point_terms(
    signature: Signature = Signature.EUCLIDEAN,
) -> list[ContractionTerm]:
    """Order-lambda terms of the two-point function: connected, then disconnected."""
    return contraction_terms(("x1", "x2"), 1, signature)


# Kernels and numerical evaluation


@dataclass(frozen=True)
class EuclideanKernel:
    """
    Free two-point function <q(t) q(t')> = -hbar G(t, t') on an interval.

    kind "infinite" uses the beta -> infinity form on (-beta/2, beta/2),
    "dirichlet" paths pinned at q = 0 on [0, beta], "thermal" periodic paths
    on [0, beta].
    """

    beta: float
    m: float = 1.0
    omega: float = 1.0
    hbar: float = 1.0
    kind: str = "infinite"

    def __post_init__(self) -> None:
        if self.kind not in ("infinite", "dirichlet", "thermal"):
            raise DomainError(f"Unknown kernel kind '{self.kind}'")
        if self.beta <= 0 or self.m <= 0 or self.omega <= 0 or self.hbar <= 0:
            raise DomainError("Kernel requires beta, m, omega, hbar > 0")

    @property
    def interval(self) -> tuple[float, float]:
        if self.kind == "infinite":
            return (-0.5 * self.beta, 0.5 * self.beta)
        return (0.0, self.beta)

    @property
    def center(self) -> float:
        low, high = self.interval
        return 0.5 * (low + high)

    def __call__(self, tau: float, tau_prime: float) -> float:
        scale = self.hbar / (2.0 * self.m * self.omega)
        if self.kind == "infinite":
            return scale * math.exp(-self.omega * abs(tau - tau_prime))
        if self.kind == "thermal":
            separation = abs(tau - tau_prime) % self.beta
            x = 0.5 * self.omega * self.beta
            return scale * math.cosh(self.omega * separation - x) / math.sinh(x)
        green = dirichlet_green(tau, tau_prime, self.beta, self.m, self.omega)
        return float(-self.hbar * green)


def euclidean_kernel(
    beta: float,
    m: float = 1.0,
    omega: float = 1.0,
    hbar: float = 1.0,
    kind: str = "infinite",
) -> EuclideanKernel:
    return EuclideanKernel(beta, m, omega, hbar, kind)


def _term_integrand(
    term: ContractionTerm, kernel: Kernel, times: Mapping[str, float]
) -> tuple[complex, Callable[[float], complex]]:
    """Split a term into its vertex-free constant and the vertex integrand."""
    constant: complex = 1.0
    attached: list[KernelFactor] = []
    for i, j in term.kernel_factors:
        if i in term.integrated_labels or j in term.integrated_labels:
            attached.append((i, j))
        else:
            constant *= kernel(times[i], times[j])

    def integrand(x: float) -> complex:
        value: complex = 1.0
        for i, j in attached:
            value *= kernel(
                x if i in term.integrated_labels else times[i],
                x if j in term.integrated_labels else times[j],
            )
        return value

    return constant, integrand


def evaluate_terms(
    terms: Sequence[ContractionTerm],
    kernel: Kernel,
    times: Mapping[str, float] | None = None,
    lam: float = 0.0,
    integration_range: tuple[float, float] | None = None,
    hbar: float = 1.0,
) -> list[complex]:
    """
    Numerical value of each term with the supplied kernel.

    External labels are looked up in times; the single integrated vertex runs
    over integration_range (default: the kernel's interval) and carries the
    1/hbar of the action divisor.
    """
    times = dict(times or {})
    if integration_range is None:
        integration_range = getattr(kernel, "interval", None)
    values: list[complex] = []
    for term in terms:
        missing = set(term.external_labels) - set(times)
        if missing:
            raise DomainError(f"No time supplied for labels {sorted(missing)}")
        coefficient = complex(term.coefficient.subs(LAMBDA, lam))
        constant, integrand = _term_integrand(term, kernel, times)
        if not term.integrated_labels:
            values.append(coefficient * constant * integrand(0.0))
            continue
        if integration_range is None:
            raise DomainError("Integrated terms need an integration range")
        low, high = integration_range
        inside = sorted({t for t in times.values() if low < t < high})
        real, _ = checked_quad(
            lambda x: complex(integrand(x)).real, low, high, points=inside or None, limit=200
        )
        imag = 0.0
        if np.iscomplexobj(integrand(0.5 * (low + high))):
            imag, _ = checked_quad(
                lambda x: complex(integrand(x)).imag,
                low,
                high,
                points=inside or None,
                limit=200,
            )
        values.append(coefficient * constant * complex(real, imag) / hbar**term.n_vertices)
    return values


def _check_large_beta(beta: float, omega: float) -> None:
    if beta * omega < MIN_BETA_OMEGA:
        raise PreconditionError(
            f"beta * omega = {beta * omega:g} is below {MIN_BETA_OMEGA:g}; the "
            "large-beta kernel does not apply"
        )


def euclidean_first_order_ke_ratio(
    beta: float,
    m: float = 1.0,
    omega: float = 1.0,
    lam: float = 1.0,
    hbar: float = 1.0,
    kind: str = "infinite",
) -> float:
    """
    Order-lambda coefficient of -ln(K_E / C) / beta.

    The vacuum terms (no external labels, one vertex) give ln(K_E / K_E^0) to
    first order; with the infinite kernel the result is lambda hbar / 32 m^2 w^2.

    Raises:
        PreconditionError: beta * omega below MIN_BETA_OMEGA
    """
    _check_large_beta(beta, omega)
    kernel = euclidean_kernel(beta, m, omega, hbar, kind)
    vacuum = contraction_terms((), 1, Signature.EUCLIDEAN)
    log_ratio = sum(evaluate_terms(vacuum, kernel, lam=lam, hbar=hbar))
    return -complex(log_ratio).real / beta


@dataclass(frozen=True)
class CancellationReport:
    """Numerator, denominator and their order-lambda ratio for the two-point function."""

    numerator: sympy.Expr
    denominator: sympy.Expr
    ratio: sympy.Expr
    disconnected_coefficient: sympy.Expr
    surviving: sympy.Expr
    connected_term: ContractionTerm
    free_value: float
    first_order_value: float

    @property
    def cancels(self) -> bool:
        return self.disconnected_coefficient == 0


def _component_symbol(factors: Sequence[KernelFactor], integrated: set[str]) -> sympy.Symbol:
    body = "".join(f"G({i},{j})" for i, j in factors)
    if any(i in integrated or j in integrated for i, j in factors):
        body = f"[{body}]"
    return sympy.Symbol(body)


def _term_monomial(term: ContractionTerm) -> sympy.Expr:
    """The term as coefficient times one symbol per connected component."""
    integrated = set(term.integrated_labels)
    monomial: sympy.Expr = term.coefficient
    for component in _components(term.kernel_factors):
        factors = [f for f in term.kernel_factors if f[0] in component]
        monomial *= _component_symbol(factors, integrated)
    return monomial


def disconnected_cancellation_check(
    beta: float, m: float = 1.0, omega: float = 1.0, lam: float = 1.0, hbar: float = 1.0
) -> CancellationReport:
    """
    Divide the order-lambda two-point numerator by the vacuum denominator.

    Kernel structures become sympy symbols, one per connected component, so
    the disconnected numerator term and the vacuum term share the vacuum
    bubble symbol. The ratio is expanded to first order in lambda; the
    disconnected structure must drop out exactly. The surviving expression is
    also evaluated at coincident points at the interval center with the
    infinite kernel.
    """
    _check_large_beta(beta, omega)
    externals = ("x1", "x2")
    free_terms = contraction_terms(externals, 0)
    first_order = first_order_two_point_terms()
    vacuum = contraction_terms((), 1)

    numerator = sympy.Add(*(_term_monomial(t) for t in [*free_terms, *first_order]))
    denominator = 1 + sympy.Add(*(_term_monomial(t) for t in vacuum))
    ratio = sympy.expand(
        sympy.series(numerator / denominator, LAMBDA, 0, 2).removeO()
    )

    disconnected = [t for t in first_order if not t.is_connected]
    connected = [t for t in first_order if t.is_connected]
    structure = _term_monomial(disconnected[0]) / disconnected[0].coefficient
    disconnected_coefficient = sympy.simplify(ratio.coeff(structure))
    expected = sympy.Add(*(_term_monomial(t) for t in [*free_terms, *connected]))
    surviving = sympy.simplify(ratio - disconnected_coefficient * structure)
    if sympy.simplify(surviving - expected) != 0:
        logger.warning("Surviving order-lambda expression differs from the connected term")

    kernel = euclidean_kernel(beta, m, omega, hbar, "infinite")
    center = {label: kernel.center for label in externals}
    free_value = sum(evaluate_terms(free_terms, kernel, center)).real
    first_value = sum(evaluate_terms(connected, kernel, center, lam=lam, hbar=hbar)).real
    return CancellationReport(
        numerator=numerator,
        denominator=denominator,
        ratio=ratio,
        disconnected_coefficient=disconnected_coefficient,
        surviving=surviving,
        connected_term=connected[0],
        free_value=float(free_value),
        first_order_value=float(free_value + first_value),
    )


def pairing_count(n_points: int) -> int:
    """(n_points - 1)!! by the closed form, for checking enumerations."""
    if n_points % 2:
        return 0
    return int(np.prod(np.arange(n_points - 1, 0, -2), dtype=np.int64)) if n_points else 1
