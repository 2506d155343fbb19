"""
Data structures for path-integral Monte Carlo.

This module contains the configuration, ensemble and estimator types shared
by the sampler and the estimators.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.typing import NDArray

from ..errors import DomainError
from ..model import Boundary, FixedEndpoints, Lattice, PeriodicBoundary, Potential

MAX_SEED = 2**64 - 1


class StartKind(str, Enum):
    """Initial path of every chain."""

    ZERO = "zero"
    LEFT = "left"
    RIGHT = "right"
    SPLIT = "split"  # even chains start in the left minimum, odd chains in the right


@dataclass(frozen=True)
class SamplerConfig:
    """Everything that determines an ensemble, seed included."""

    lattice: Lattice
    potential: Potential
    n_sweeps: int = 20_000
    n_thermalization: int = 1_000
    n_chains: int = 4
    step_width: float = 1.0
    seed: int = 0
    boundary: Boundary = field(default_factory=PeriodicBoundary)
    auto_tune: bool = True
    shift_width: float = 0.0
    record_every: int = 1
    start: StartKind = StartKind.ZERO

    def __post_init__(self) -> None:
        """Validate counts, widths and the seed range."""
        object.__setattr__(self, "start", StartKind(self.start))
        for name in ("n_sweeps", "n_chains", "record_every"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise DomainError(f"{name} must be a positive integer, got {value}")
        if int(self.n_thermalization) != self.n_thermalization or self.n_thermalization < 0:
            raise DomainError(
                f"n_thermalization must be a non-negative integer, got {self.n_thermalization}"
            )
        if self.n_sweeps <= self.n_thermalization:
            raise DomainError(
                f"n_sweeps ({self.n_sweeps}) must exceed n_thermalization "
                f"({self.n_thermalization})"
            )
        if not math.isfinite(self.step_width) or self.step_width <= 0:
            raise DomainError(f"step_width must be positive, got {self.step_width}")
        if not math.isfinite(self.shift_width) or self.shift_width < 0:
            raise DomainError(f"shift_width must be non-negative, got {self.shift_width}")
        if int(self.seed) != self.seed or not 0 <= self.seed <= MAX_SEED:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not isinstance(self.boundary, (FixedEndpoints, PeriodicBoundary)):
            raise DomainError(f"Unknown boundary {self.boundary!r}")

    @property
    def periodic(self) -> bool:
        return isinstance(self.boundary, PeriodicBoundary)

    @property
    def n_production(self) -> int:
        """Sweeps after thermalization."""
        return self.n_sweeps - self.n_thermalization

    @property
    def n_records(self) -> int:
        return self.n_production // self.record_every

    def as_dict(self) -> dict[str, object]:
        """Flat, JSON-friendly view used for manifests and config hashes."""
        boundary: dict[str, object] = {"kind": "periodic"}
        if isinstance(self.boundary, FixedEndpoints):
            boundary = {"kind": "fixed", "q": self.boundary.q, "q_prime": self.boundary.q_prime}
        p = self.potential
        return {
            "n_slices": self.lattice.n_slices,
            "beta": self.lattice.extent,
            "potential": {
                "kind": p.kind.value,
                "m": p.m,
                "omega": p.omega,
                "lam": p.lam,
                "a": p.a,
                "period": p.period,
                "depth": p.depth,
                "hbar": p.hbar,
            },
            "n_sweeps": self.n_sweeps,
            "n_thermalization": self.n_thermalization,
            "n_chains": self.n_chains,
            "step_width": self.step_width,
            "seed": self.seed,
            "boundary": boundary,
            "auto_tune": self.auto_tune,
            "shift_width": self.shift_width,
            "record_every": self.record_every,
            "start": self.start.value,
        }


@dataclass(frozen=True, eq=False)
class Ensemble:
    """
    Recorded paths of every chain.

    paths has shape (n_chains, n_records, N + 1); periodic paths repeat q_0
    in the last column.
    """

    config: SamplerConfig
    paths: NDArray[np.float64] = field(repr=False)
    acceptance_rate: float
    chain_acceptance: tuple[float, ...]
    step_width: float
    shift_acceptance: float | None = None
    tuning_acceptance: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.acceptance_rate <= 1.0:
            raise DomainError(f"acceptance_rate must lie in [0, 1], got {self.acceptance_rate}")

    @property
    def n_chains(self) -> int:
        return int(self.paths.shape[0])

    @property
    def n_records(self) -> int:
        return int(self.paths.shape[1])

    @property
    def lattice(self) -> Lattice:
        return self.config.lattice

    @property
    def sites(self) -> NDArray[np.float64]:
        """Independent positions per record: q_0 ... q_{N-1} when periodic, all N+1 otherwise."""
        if self.config.periodic:
            return self.paths[:, :, :-1]
        return self.paths


@dataclass(frozen=True)
class EstimatorResult:
    """A Monte Carlo estimate with its error bar."""

    mean: float
    std_error: float
    n_effective: float
    observable: str = ""
    tau: float | None = None

    def __post_init__(self) -> None:
        if self.std_error < 0 or math.isnan(self.std_error):
            raise DomainError(f"std_error must be non-negative, got {self.std_error}")

    def as_row(self) -> dict[str, object]:
        return {
            "observable": self.observable,
            "tau": self.tau,
            "mean": self.mean,
            "std_error": self.std_error,
            "n_effective": self.n_effective,
        }
