"""
Metropolis sampling of the Euclidean lattice path measure exp(-S_E / hbar).

Chains run concurrently on threads (the compiled kernel releases the GIL).
Every chain owns a generator spawned from the master seed, so ensembles are
reproducible and independent of scheduling.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ..errors import DomainError, UnsupportedSignatureError
from ..model import FixedEndpoints, Signature
from .kernel import metropolis_sweeps
from .types import Ensemble, SamplerConfig, StartKind

logger = logging.getLogger(__name__)

BLOCK_SWEEPS = 1000
COARSE_BATCH = 50
FINE_BATCH = 200
MAX_TUNE_ROUNDS = 60
COARSE_BAND = (0.3, 0.7)
TARGET_BAND = (0.4, 0.6)
HEALTHY_BAND = (0.2, 0.8)


@dataclass(frozen=True)
class TuningOutcome:
    step_width: float
    acceptance: float
    rounds: int
    converged: bool


@dataclass
class _ChainOutput:
    records: np.ndarray
    accepted: int
    proposed: int
    shift_accepted: int
    shift_proposed: int


def _check_config(config: SamplerConfig) -> None:
    if config.lattice.signature is not Signature.EUCLIDEAN:
        raise UnsupportedSignatureError(
            "Monte Carlo sampling needs a Euclidean lattice; real-time weights "
            "are oscillatory"
        )
    if config.lattice.n_slices < 2:
        raise DomainError(f"Sampling needs at least 2 slices, got {config.lattice.n_slices}")


def _start_path(config: SamplerConfig, chain: int) -> np.ndarray:
    minima = config.potential.minima() or (0.0,)
    start = config.start
    if start is StartKind.SPLIT:
        start = StartKind.LEFT if chain % 2 == 0 else StartKind.RIGHT
    value = {StartKind.ZERO: 0.0, StartKind.LEFT: minima[0], StartKind.RIGHT: minima[-1]}[start]

    path = np.full(config.lattice.n_slices + 1, value, dtype=np.float64)
    if isinstance(config.boundary, FixedEndpoints):
        path[0], path[-1] = config.boundary.q, config.boundary.q_prime
    return path


class _Sweeper:
    """Feeds one chain's path through the kernel block by block."""

    def __init__(self, config: SamplerConfig, rng: np.random.Generator, path: np.ndarray):
        self.config = config
        self.rng = rng
        self.path = path
        self.kind = config.potential.kind.code
        self.params = config.potential.kernel_parameters()
        self.delta = config.lattice.spacing
        self.hbar = config.potential.hbar
        self.n_free = config.lattice.n_slices - (0 if config.periodic else 1)
        self.shifting = config.periodic and config.shift_width > 0

    def run(
        self,
        n_sweeps: int,
        width: float,
        records: np.ndarray | None = None,
        record_every: int = 0,
    ) -> tuple[int, int, int, int]:
        if records is None:
            records = np.empty((0, self.path.size), dtype=np.float64)
            record_every = 0
        totals = [0, 0, 0, 0]
        done = 0
        while done < n_sweeps:
            block = min(BLOCK_SWEEPS, n_sweeps - done)
            proposals = self.rng.random((block, self.n_free))
            uniforms = self.rng.random((block, self.n_free))
            if self.shifting:
                shift_proposals = self.rng.random((block, 2))
                shift_uniforms = self.rng.random(block)
            else:
                shift_proposals = np.empty((0, 2))
                shift_uniforms = np.empty(0)
            first_record = done // record_every if record_every else 0
            counts = metropolis_sweeps(
                self.path,
                self.config.periodic,
                self.kind,
                self.params,
                self.delta,
                self.hbar,
                width,
                proposals,
                uniforms,
                self.config.shift_width if self.shifting else 0.0,
                shift_proposals,
                shift_uniforms,
                records,
                record_every,
                done,
                first_record,
            )
            totals = [t + c for t, c in zip(totals, counts)]
            done += block
        return totals[0], totals[1], totals[2], totals[3]


def _tune(config: SamplerConfig, rng: np.random.Generator) -> TuningOutcome:
    """
    Coarse multiplicative steps until acceptance is within COARSE_BAND, then
    damped steps on longer batches until it is within TARGET_BAND.
    """
    sweeper = _Sweeper(config, rng, _start_path(config, 0))
    width = config.step_width
    coarse = True
    acceptance = 0.0
    for rounds in range(1, MAX_TUNE_ROUNDS + 1):
        accepted, proposed, _, _ = sweeper.run(COARSE_BATCH if coarse else FINE_BATCH, width)
        acceptance = accepted / proposed
        if coarse:
            if COARSE_BAND[0] <= acceptance <= COARSE_BAND[1]:
                coarse = False
                continue
            width *= float(np.clip(acceptance / 0.5, 0.2, 5.0))
        else:
            if TARGET_BAND[0] <= acceptance <= TARGET_BAND[1]:
                logger.debug(
                    "Tuned step width %.4g (acceptance %.3f) after %d rounds",
                    width,
                    acceptance,
                    rounds,
                )
                return TuningOutcome(width, acceptance, rounds, True)
            width *= 1.0 + 0.5 * (acceptance - 0.5)

    logger.warning(
        "Step tuning did not reach acceptance in %s after %d rounds (last %.3f, width %.4g)",
        TARGET_BAND,
        MAX_TUNE_ROUNDS,
        acceptance,
        width,
    )
    return TuningOutcome(width, acceptance, MAX_TUNE_ROUNDS, False)


def _streams(config: SamplerConfig) -> list[np.random.SeedSequence]:
    """Child 0 drives tuning, children 1..n_chains drive the chains."""
    return np.random.SeedSequence(config.seed).spawn(config.n_chains + 1)


def tune_step(config: SamplerConfig) -> SamplerConfig:
    """
    Adjust step_width toward 50% acceptance on a dedicated stream.

    Deterministic given the seed; the returned config has auto_tune off.
    """
    _check_config(config)
    outcome = _tune(config, np.random.default_rng(_streams(config)[0]))
    return replace(config, step_width=outcome.step_width, auto_tune=False)


def _run_chain(
    config: SamplerConfig, width: float, stream: np.random.SeedSequence, chain: int
) -> _ChainOutput:
    sweeper = _Sweeper(config, np.random.default_rng(stream), _start_path(config, chain))
    sweeper.run(config.n_thermalization, width)
    records = np.empty((config.n_records, config.lattice.n_slices + 1), dtype=np.float64)
    counts = sweeper.run(config.n_production, width, records, config.record_every)
    return _ChainOutput(records, *counts)


def run_sampler(config: SamplerConfig) -> Ensemble:
    """
    Sample n_chains independent chains of config.

    Raises:
        UnsupportedSignatureError: the lattice is not Euclidean
    """
    _check_config(config)
    streams = _streams(config)
    width = config.step_width
    tuning_acceptance = None
    if config.auto_tune:
        outcome = _tune(config, np.random.default_rng(streams[0]))
        width, tuning_acceptance = outcome.step_width, outcome.acceptance

    workers = max(1, min(config.n_chains, os.cpu_count() or 1))
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [
            executor.submit(_run_chain, config, width, streams[chain + 1], chain)
            for chain in range(config.n_chains)
        ]
        outputs = [future.result() for future in futures]

    accepted = sum(o.accepted for o in outputs)
    proposed = sum(o.proposed for o in outputs)
    acceptance = accepted / proposed
    shift_proposed = sum(o.shift_proposed for o in outputs)
    shift_acceptance = (
        sum(o.shift_accepted for o in outputs) / shift_proposed if shift_proposed else None
    )
    if not HEALTHY_BAND[0] <= acceptance <= HEALTHY_BAND[1]:
        logger.warning(
            "Acceptance rate %.3f is outside %s; estimates may decorrelate slowly",
            acceptance,
            HEALTHY_BAND,
        )
    logger.info(
        "Sampled %d chains x %d records (N=%d, beta=%g), acceptance %.3f, width %.4g",
        config.n_chains,
        config.n_records,
        config.lattice.n_slices,
        config.lattice.extent,
        acceptance,
        width,
    )
    return Ensemble(
        config=config,
        paths=np.stack([o.records for o in outputs]),
        acceptance_rate=acceptance,
        chain_acceptance=tuple(o.accepted / o.proposed for o in outputs),
        step_width=width,
        shift_acceptance=shift_acceptance,
        tuning_acceptance=tuning_acceptance,
    )
