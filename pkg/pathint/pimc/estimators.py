"""
Estimators and error analysis for Monte Carlo ensembles.

Standard errors come from automatic blocking: the series is halved by
pairwise averaging until a chi-squared test on the lag-one autocovariance of
the remaining levels no longer detects correlation. Derived quantities such
as effective gaps use a blocked jackknife.
"""

import logging
import math
from collections.abc import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import optimize, stats

from ..errors import DomainError
from .types import Ensemble, EstimatorResult

logger = logging.getLogger(__name__)

BLOCKING_CONFIDENCE = 0.99
JACKKNIFE_BLOCKS = 32
SLICE_TOLERANCE = 1e-9


def blocking_error(series: ArrayLike) -> tuple[float, float]:
    """
    Standard error of the mean of a correlated series, and n_effective.

    Returns:
        (std_error, n_effective) with n_effective = var(series) / std_error^2
    """
    x = np.asarray(series, dtype=np.float64).ravel()
    n = x.size
    if n < 2:
        raise DomainError(f"Blocking needs at least two samples, got {n}")
    variance = float(np.var(x))
    if variance == 0.0:
        return 0.0, float(n)

    sizes, gammas, variances = [], [], []
    level = x
    while level.size >= 2:
        mu = level.mean()
        sizes.append(level.size)
        variances.append(float(np.var(level)))
        gammas.append(float(np.mean((level[:-1] - mu) * (level[1:] - mu))))
        if level.size % 2:
            level = level[:-1]
        level = 0.5 * (level[0::2] + level[1::2])

    d = len(sizes)
    terms = np.array(
        [
            size * (gamma / var) ** 2 if var > 0 else 0.0
            for size, gamma, var in zip(sizes, gammas, variances)
        ]
    )
    tails = np.cumsum(terms[::-1])[::-1]
    chosen = d - 1
    for k in range(d):
        if tails[k] < stats.chi2.ppf(BLOCKING_CONFIDENCE, d - k):
            chosen = k
            break
    else:
        logger.warning("Blocking found correlations at every level; use a longer series")

    error = math.sqrt(variances[chosen] / sizes[chosen])
    if error == 0.0:
        return 0.0, float(n)
    return error, min(float(n), variance / error**2)


def jackknife(
    blocks: ArrayLike, estimator: Callable[[NDArray[np.float64]], float]
) -> tuple[float, float]:
    """
    Leave-one-block-out jackknife.

    Args:
        blocks: Block averages, shape (n_blocks, ...)
        estimator: Maps an average over blocks (shape blocks.shape[1:]) to a number

    Returns:
        (estimate on all blocks, jackknife standard error)
    """
    data = np.asarray(blocks, dtype=np.float64)
    n_blocks = data.shape[0]
    if n_blocks < 2:
        raise DomainError(f"Jackknife needs at least two blocks, got {n_blocks}")
    total = data.sum(axis=0)
    full = float(estimator(total / n_blocks))
    leave_one_out = np.array(
        [estimator((total - data[i]) / (n_blocks - 1)) for i in range(n_blocks)],
        dtype=np.float64,
    )
    spread = np.sum((leave_one_out - leave_one_out.mean()) ** 2) * (n_blocks - 1) / n_blocks
    return full, float(math.sqrt(spread))


def _combine_chains(
    series: NDArray[np.float64], observable: str, tau: float | None = None
) -> EstimatorResult:
    """Equal-weight merge of per-chain blocked means in chain order."""
    means, errors, effective = [], [], []
    for chain_series in series:
        error, n_eff = blocking_error(chain_series)
        means.append(float(np.mean(chain_series)))
        errors.append(error)
        effective.append(n_eff)
    n_chains = len(means)
    return EstimatorResult(
        mean=float(np.mean(means)),
        std_error=math.sqrt(sum(e * e for e in errors)) / n_chains,
        n_effective=float(sum(effective)),
        observable=observable,
        tau=tau,
    )


def position_moment(ensemble: Ensemble, power: int = 2, site: int | None = None) -> EstimatorResult:
    """
    <q^power>, averaged over all sites or taken at one lattice site.

    Periodic ensembles are translation invariant, so the site average is an
    unbiased estimator of the single-time moment.
    """
    if int(power) != power or power < 1:
        raise DomainError(f"power must be a positive integer, got {power}")
    if site is None:
        series = np.mean(ensemble.sites**power, axis=-1)
        observable = f"q^{power}"
    else:
        if not 0 <= site <= ensemble.lattice.n_slices:
            raise DomainError(f"site {site} is outside 0 ... {ensemble.lattice.n_slices}")
        series = ensemble.paths[:, :, site] ** power
        observable = f"q^{power}@{site}"
    tau = None if site is None else site * ensemble.lattice.spacing
    return _combine_chains(series, observable, tau)


def virial_energy(ensemble: Ensemble) -> EstimatorResult:
    """Internal energy from the virial estimator <V + q V' / 2>."""
    potential = ensemble.config.potential
    q = ensemble.sites
    local = potential.value(q) + 0.5 * q * potential.derivative(q)
    return _combine_chains(np.mean(local, axis=-1), "virial_energy")


def _separation_slices(ensemble: Ensemble, tau: float) -> int:
    lattice = ensemble.lattice
    if not ensemble.config.periodic:
        raise DomainError("Correlation functions need a periodic-boundary ensemble")
    if not math.isfinite(tau) or tau < 0:
        raise DomainError(f"Separation must be non-negative, got {tau}")
    k = int(round(tau / lattice.spacing))
    if abs(k * lattice.spacing - tau) > SLICE_TOLERANCE * max(1.0, tau):
        raise DomainError(f"Separation {tau} is not a multiple of the spacing {lattice.spacing}")
    if 2 * k > lattice.n_slices:
        raise DomainError(
            f"Separation {tau} exceeds beta/2 = {lattice.extent / 2}; periodic images dominate"
        )
    return k


def _record_correlators(chain_sites: NDArray[np.float64]) -> NDArray[np.float64]:
    """(1/N) sum_j q_j q_{j+k} for every record and every k, by FFT."""
    n = chain_sites.shape[-1]
    spectrum = np.fft.rfft(chain_sites, axis=-1)
    return np.fft.irfft(np.abs(spectrum) ** 2, n=n, axis=-1) / n


def correlation_function(ensemble: Ensemble, separations: Sequence[float]) -> list[EstimatorResult]:
    """
    C(tau) = <q(0) q(tau)>, averaged over time origins.

    Raises:
        DomainError: fixed endpoints, a separation beyond beta/2 or off the lattice
    """
    slices = [_separation_slices(ensemble, float(tau)) for tau in separations]
    per_chain = np.stack(
        [_record_correlators(chain)[:, slices] for chain in ensemble.sites]
    )  # (chains, records, separations)
    return [
        _combine_chains(per_chain[:, :, i], "correlator", float(tau))
        for i, tau in enumerate(separations)
    ]


def _log_cosh(x: float) -> float:
    return float(np.logaddexp(x, -x) - math.log(2.0))


def _cosh_gap(ratio: float, tau: float, step: float, beta: float) -> float:
    """E with cosh(E (tau + step - beta/2)) / cosh(E (tau - beta/2)) = ratio."""
    if not 0.0 < ratio < 1.0:
        return math.nan
    t1, t2 = tau - 0.5 * beta, tau + step - 0.5 * beta
    log_ratio = math.log(ratio)

    def mismatch(energy: float) -> float:
        return _log_cosh(energy * t2) - _log_cosh(energy * t1) - log_ratio

    upper = 1.0
    while mismatch(upper) > 0:
        upper *= 2.0
        if upper > 1e8:
            return math.nan
    return float(optimize.brentq(mismatch, 1e-14, upper, xtol=1e-14, rtol=1e-12))


def _gap(c_near: float, c_far: float, tau: float, step: float, beta: float, method: str) -> float:
    if c_near <= 0 or c_far <= 0:
        return math.nan
    ratio = c_far / c_near
    if method == "log":
        return -math.log(ratio) / step
    return _cosh_gap(ratio, tau, step, beta)


def effective_gap(
    ensemble: Ensemble,
    separations: Sequence[float],
    method: str = "log",
    step: float | None = None,
    n_blocks: int = JACKKNIFE_BLOCKS,
) -> list[EstimatorResult]:
    """
    Effective gap E(tau) from C(tau) and C(tau + step), with jackknife errors.

    method "log" is -ln[C(tau + step) / C(tau)] / step; "cosh" solves for the
    gap of a correlator symmetric about beta/2, which removes the bias of the
    backward-propagating periodic image. step defaults to the lattice spacing.
    """
    if method not in ("log", "cosh"):
        raise DomainError(f"Unknown effective-gap method {method!r}; use 'log' or 'cosh'")
    lattice = ensemble.lattice
    step = lattice.spacing if step is None else float(step)
    step_slices = _separation_slices(ensemble, step)
    if step_slices < 1:
        raise DomainError(f"Gap step must be at least one slice, got {step}")
    if ensemble.n_records < n_blocks:
        raise DomainError(
            f"Need at least {n_blocks} records per chain for the jackknife, got "
            f"{ensemble.n_records}"
        )

    near = [_separation_slices(ensemble, float(tau)) for tau in separations]
    far = [_separation_slices(ensemble, float(tau) + step) for tau in separations]
    columns = near + far

    blocks = []
    for chain in ensemble.sites:
        correlators = _record_correlators(chain)[:, columns]
        usable = (correlators.shape[0] // n_blocks) * n_blocks
        blocks.append(correlators[:usable].reshape(n_blocks, -1, len(columns)).mean(axis=1))
    block_data = np.concatenate(blocks)  # (chains * n_blocks, 2 * separations)

    n_tau = len(near)
    results = []
    for i, tau in enumerate(separations):
        tau = float(tau)

        def estimator(mean: NDArray[np.float64], i: int = i, tau: float = tau) -> float:
            return _gap(mean[i], mean[n_tau + i], tau, step, lattice.extent, method)

        value, error = jackknife(block_data, estimator)
        if not (math.isfinite(value) and math.isfinite(error)):
            logger.warning("Effective gap at tau=%g is undefined (correlator too noisy)", tau)
            value, error = math.nan, math.inf
        results.append(
            EstimatorResult(value, error, float(block_data.shape[0]), f"gap_{method}", tau)
        )
    return results


def plateau_average(results: Sequence[EstimatorResult]) -> EstimatorResult:
    """
    Plain mean over a window of effective-gap estimates.

    Neighbouring estimates are strongly correlated, so the error is the mean
    of the individual errors rather than an inverse-variance combination.
    """
    finite = [r for r in results if math.isfinite(r.mean) and math.isfinite(r.std_error)]
    if not finite:
        raise DomainError("No finite estimates in the plateau window")
    return EstimatorResult(
        mean=float(np.mean([r.mean for r in finite])),
        std_error=float(np.mean([r.std_error for r in finite])),
        n_effective=min(r.n_effective for r in finite),
        observable="plateau",
    )
