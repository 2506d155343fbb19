"""
Finite-difference spectral oracle.

Diagonalizes H = p^2/2m + V(q) with second-order central differences and
Dirichlet boundaries on a uniform position grid. Eigenvalues are
Richardson-extrapolated between the grid and its half-spacing refinement;
eigenfunctions are the normalized eigenvectors of the grid itself.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from .errors import DomainError, GridTooSmallError, PreconditionError
from .model import FloatArray, Potential, PotentialKind

logger = logging.getLogger(__name__)

DEFAULT_POINTS = 2049
EDGE_TOLERANCE = 1e-8
SUM_TOLERANCE = 1e-16
MAX_WIDENINGS = 4
WIDENING_FACTOR = 1.5


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform grid q_min ... q_max with n_points nodes."""

    q_min: float
    q_max: float
    n_points: int = DEFAULT_POINTS

    def __post_init__(self) -> None:
        if not (math.isfinite(self.q_min) and math.isfinite(self.q_max)):
            raise DomainError("Grid bounds must be finite")
        if self.q_min >= self.q_max:
            raise DomainError(f"q_min must be below q_max, got [{self.q_min}, {self.q_max}]")
        if int(self.n_points) != self.n_points or self.n_points < 16:
            raise DomainError(f"n_points must be an integer >= 16, got {self.n_points}")

    @property
    def spacing(self) -> float:
        return (self.q_max - self.q_min) / (self.n_points - 1)

    def points(self) -> FloatArray:
        return np.linspace(self.q_min, self.q_max, self.n_points)

    def refined(self) -> "SpectralGrid":
        """Same interval at half the spacing; every node of self is kept."""
        return SpectralGrid(self.q_min, self.q_max, 2 * self.n_points - 1)

    def widened(self, factor: float = WIDENING_FACTOR) -> "SpectralGrid":
        """Interval scaled about its center at (approximately) unchanged spacing."""
        center = 0.5 * (self.q_min + self.q_max)
        half = 0.5 * (self.q_max - self.q_min) * factor
        n_points = int(round((self.n_points - 1) * factor)) + 1
        return SpectralGrid(center - half, center + half, n_points)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Lowest eigenpairs of the grid Hamiltonian."""

    eigenvalues: FloatArray
    eigenfunctions: NDArray[np.float64] = field(repr=False)
    grid: SpectralGrid
    hbar: float = 1.0
    eigenvalue_errors: FloatArray = field(default_factory=lambda: np.zeros(0), repr=False)
    grid_eigenvalues: FloatArray = field(default_factory=lambda: np.zeros(0), repr=False)
    edge_amplitude: float = 0.0

    @property
    def n_states(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    def wavefunction(self, j: int, q: ArrayLike) -> FloatArray:
        """phi_j interpolated at q (exact at grid nodes)."""
        return np.asarray(
            np.interp(q, self.grid.points(), self.eigenfunctions[:, j]), dtype=np.float64
        )

    def expectation(self, j: int, values: ArrayLike) -> float:
        """Grid expectation sum_i phi_j(q_i)^2 f(q_i) h."""
        density = self.eigenfunctions[:, j] ** 2
        return float(np.sum(density * np.asarray(values)) * self.grid.spacing)


def default_grid(potential: Potential, n_points: int = DEFAULT_POINTS) -> SpectralGrid:
    """
    Symmetric grid of half-width 8 max(1, a + 4 sqrt(hbar / m w)).

    a is the outermost classical minimum (0 for single wells); w the curvature
    frequency there.
    """
    omega = potential.curvature_frequency
    if omega <= 0:
        raise DomainError(f"No bound-state grid for a {potential.kind.value} potential")
    outer = max((abs(q) for q in potential.minima()), default=0.0)
    length = math.sqrt(potential.hbar / (potential.m * omega))
    half_width = 8.0 * max(1.0, outer + 4.0 * length)
    return SpectralGrid(-half_width, half_width, n_points)


def _normalized_signs(vectors: NDArray[np.float64]) -> NDArray[np.float64]:
    """Flip each column so that its first significant sample is positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        column = out[:, j]
        first = np.argmax(np.abs(column) > 1e-6 * np.max(np.abs(column)))
        if column[first] < 0:
            out[:, j] = -column
    return out


def _solve(
    potential: Potential, grid: SpectralGrid, hbar: float, n_states: int
) -> tuple[FloatArray, NDArray[np.float64]]:
    q = grid.points()
    h = grid.spacing
    hopping = hbar**2 / (2.0 * potential.m * h * h)
    diagonal = 2.0 * hopping + potential.value(q)
    off_diagonal = np.full(grid.n_points - 1, -hopping)
    energies, vectors = scipy.linalg.eigh_tridiagonal(
        diagonal, off_diagonal, select="i", select_range=(0, n_states - 1)
    )
    vectors = _normalized_signs(vectors / math.sqrt(h))
    return np.asarray(energies, dtype=np.float64), vectors


def _edge_amplitude(vectors: NDArray[np.float64]) -> float:
    edges = []
    for j in range(min(2, vectors.shape[1])):
        column = np.abs(vectors[:, j])
        edges.append(max(column[0], column[-1]) / np.max(column))
    return float(max(edges))


def _diagonalize_on(
    potential: Potential, grid: SpectralGrid, hbar: float, n_states: int
) -> Spectrum:
    coarse, vectors = _solve(potential, grid, hbar, n_states)
    edge = _edge_amplitude(vectors)
    if edge > EDGE_TOLERANCE:
        raise GridTooSmallError(
            f"Eigenfunctions reach {edge:.2e} of their peak at the grid edges "
            f"[{grid.q_min:g}, {grid.q_max:g}]",
            edge,
        )
    fine, _ = _solve(potential, grid.refined(), hbar, n_states)
    extrapolated = (4.0 * fine - coarse) / 3.0
    logger.debug(
        "Diagonalized %s on %d points: E0 %.12g (grid %.12g)",
        potential.kind.value,
        grid.n_points,
        extrapolated[0],
        coarse[0],
    )
    return Spectrum(
        eigenvalues=extrapolated,
        eigenfunctions=vectors,
        grid=grid,
        hbar=hbar,
        eigenvalue_errors=np.abs(extrapolated - fine),
        grid_eigenvalues=coarse,
        edge_amplitude=edge,
    )


def diagonalize(
    potential: Potential,
    grid: SpectralGrid | None = None,
    hbar: float | None = None,
    n_states: int = 8,
) -> Spectrum:
    """
    Lowest n_states eigenpairs of the finite-difference Hamiltonian.

    With an explicit grid a boundary-decay failure raises; with the default
    grid the interval is widened automatically a few times first.

    Raises:
        GridTooSmallError: phi_0 or phi_1 exceeds EDGE_TOLERANCE of its peak at an edge
    """
    if hbar is None:
        hbar = potential.hbar
    if hbar <= 0:
        raise DomainError(f"hbar must be positive, got {hbar}")
    if n_states < 1:
        raise DomainError(f"n_states must be positive, got {n_states}")
    if grid is not None:
        return _diagonalize_on(potential, grid, hbar, n_states)

    grid = default_grid(potential)
    for attempt in range(MAX_WIDENINGS + 1):
        try:
            return _diagonalize_on(potential, grid, hbar, n_states)
        except GridTooSmallError as exc:
            if attempt == MAX_WIDENINGS:
                raise
            logger.warning("%s; widening the grid", exc)
            grid = grid.widened()
    raise AssertionError("unreachable")


def partition_from_spectrum(spectrum: Spectrum, beta: float) -> float:
    """
    Z = sum_j exp(-beta E_j), stopping once a term is below SUM_TOLERANCE of
    the running sum.

    Raises:
        PreconditionError: the stored states run out before the sum converges
    """
    if beta <= 0:
        raise DomainError(f"beta must be positive, got {beta}")
    total = 0.0
    for energy in spectrum.eigenvalues:
        term = math.exp(-beta * energy)
        total += term
        if term < SUM_TOLERANCE * total:
            return total
    raise PreconditionError(
        f"Spectral sum at beta={beta:g} has not reached relative {SUM_TOLERANCE:g} "
        f"after {spectrum.n_states} states"
    )


def spectral_partition(
    potential: Potential,
    beta: float,
    grid: SpectralGrid | None = None,
    n_states: int = 64,
) -> float:
    """Z from the oracle spectrum, doubling n_states until the sum converges."""
    limit = (grid or default_grid(potential)).n_points - 1
    while True:
        spectrum = diagonalize(potential, grid, n_states=n_states)
        try:
            return partition_from_spectrum(spectrum, beta)
        except PreconditionError:
            if n_states >= limit:
                raise
            n_states = min(2 * n_states, limit)
            logger.info("Spectral sum unconverged; retrying with %d states", n_states)


def splitting(
    potential: Potential, grid: SpectralGrid | None = None, hbar: float | None = None
) -> float:
    """E_1 - E_0 of a double well."""
    if potential.kind is not PotentialKind.DOUBLE_WELL:
        raise DomainError(f"splitting needs a double well, got {potential.kind.value}")
    spectrum = diagonalize(potential, grid, hbar, n_states=2)
    return float(spectrum.eigenvalues[1] - spectrum.eigenvalues[0])


def spectral_propagator(spectrum: Spectrum, q: float, q_prime: float, tau: float) -> float:
    """sum_j phi_j(q) phi_j(q') exp(-tau E_j / hbar) over the stored states."""
    if tau <= 0:
        raise DomainError(f"tau must be positive, got {tau}")
    total = 0.0
    for j, energy in enumerate(spectrum.eigenvalues):
        weight = math.exp(-tau * energy / spectrum.hbar)
        total += float(spectrum.wavefunction(j, q) * spectrum.wavefunction(j, q_prime)) * weight
    return total


def bloch_band(potential: Potential, theta: float, n_points: int = 512) -> float:
    """
    Lowest eigenvalue on one period with psi(q + L) = exp(i theta) psi(q).

    The twisted boundary enters as complex hopping across the cell edge of a
    dense Hermitian finite-difference matrix.
    """
    if potential.kind is not PotentialKind.PERIODIC:
        raise DomainError(f"bloch_band needs a periodic potential, got {potential.kind.value}")
    if n_points < 16:
        raise DomainError(f"n_points must be >= 16, got {n_points}")
    h = potential.period / n_points
    q = np.arange(n_points) * h
    hopping = potential.hbar**2 / (2.0 * potential.m * h * h)
    matrix = np.diag((2.0 * hopping + potential.value(q)).astype(np.complex128))
    index = np.arange(n_points - 1)
    matrix[index, index + 1] = -hopping
    matrix[index + 1, index] = -hopping
    twist = np.exp(1j * theta)
    matrix[n_points - 1, 0] = -hopping * twist
    matrix[0, n_points - 1] = -hopping * np.conj(twist)
    lowest = scipy.linalg.eigh(matrix, eigvals_only=True, subset_by_index=[0, 0])
    return float(lowest[0])
