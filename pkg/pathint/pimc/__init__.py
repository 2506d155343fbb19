"""
Path-integral Monte Carlo on the Euclidean time lattice.

Use run_sampler to produce an Ensemble from a SamplerConfig, then the
estimators to reduce it to numbers with error bars.
"""

from .estimators import (
    blocking_error,
    correlation_function,
    effective_gap,
    jackknife,
    plateau_average,
    position_moment,
    virial_energy,
)
from .sampler import TuningOutcome, run_sampler, tune_step
from .types import Ensemble, EstimatorResult, SamplerConfig, StartKind

__all__ = [
    "Ensemble",
    "EstimatorResult",
    "SamplerConfig",
    "StartKind",
    "TuningOutcome",
    "blocking_error",
    "correlation_function",
    "effective_gap",
    "jackknife",
    "plateau_average",
    "position_moment",
    "run_sampler",
    "tune_step",
    "virial_energy",
]
