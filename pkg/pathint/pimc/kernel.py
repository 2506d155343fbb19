"""
Compiled Metropolis sweeps over the midpoint-rule Euclidean action.

All randomness is passed in as pre-drawn uniform arrays, so the kernels are
pure functions of their inputs and release the GIL.
"""

import math

import numpy as np
from numba import njit

# Kernel potential codes follow PotentialKind declaration order.
FREE, HARMONIC, ANHARMONIC, DOUBLE_WELL, PERIODIC = range(5)


@njit(cache=True, nogil=True)
def potential_value(kind: int, params: np.ndarray, q: float) -> float:
    """V(q) for params = (m, omega, lam, a, period, depth)."""
    if kind == HARMONIC:
        return 0.5 * params[0] * params[1] ** 2 * q * q
    if kind == ANHARMONIC:
        return 0.5 * params[0] * params[1] ** 2 * q * q + params[2] * q**4 / 24.0
    if kind == DOUBLE_WELL:
        d = q * q - params[3] ** 2
        return params[2] * d * d / 24.0
    if kind == PERIODIC:
        return params[5] * (1.0 - math.cos(2.0 * math.pi * q / params[4]))
    return 0.0


@njit(cache=True, nogil=True)
def slice_action(
    kind: int, params: np.ndarray, delta: float, left: float, right: float
) -> float:
    """m (right - left)^2 / (2 delta) + delta V((left + right) / 2)."""
    step = right - left
    return 0.5 * params[0] * step * step / delta + delta * potential_value(
        kind, params, 0.5 * (left + right)
    )


@njit(cache=True, nogil=True)
def path_action(kind: int, params: np.ndarray, delta: float, path: np.ndarray) -> float:
    total = 0.0
    for j in range(path.shape[0] - 1):
        total += slice_action(kind, params, delta, path[j], path[j + 1])
    return total


@njit(cache=True, nogil=True)
def metropolis_sweeps(
    path: np.ndarray,
    periodic: bool,
    kind: int,
    params: np.ndarray,
    delta: float,
    hbar: float,
    step_width: float,
    proposals: np.ndarray,
    uniforms: np.ndarray,
    shift_width: float,
    shift_proposals: np.ndarray,
    shift_uniforms: np.ndarray,
    records: np.ndarray,
    record_every: int,
    first_sweep: int,
    first_record: int,
) -> tuple[int, int, int, int]:
    """
    Run proposals.shape[0] sweeps on path in place.

    Each sweep visits the free sites in lattice order with a uniform
    random-walk proposal of half-width step_width; with shift_width > 0 on a
    periodic path it then proposes one whole-path translation by
    +-shift_width (1 + 0.1 jitter). A path is copied into records after every
    record_every-th sweep, counting from first_sweep; record_every = 0
    disables recording.

    Returns (site accepts, site proposals, shift accepts, shift proposals).
    """
    n_slices = path.shape[0] - 1
    first_site = 0 if periodic else 1
    accepted = 0
    proposed = 0
    shift_accepted = 0
    shift_proposed = 0
    record = first_record

    for sweep in range(proposals.shape[0]):
        for k in range(proposals.shape[1]):
            j = first_site + k
            old = path[j]
            left = path[j - 1] if j > 0 else path[n_slices - 1]
            right = path[j + 1]
            new = old + step_width * (2.0 * proposals[sweep, k] - 1.0)
            change = (
                slice_action(kind, params, delta, left, new)
                + slice_action(kind, params, delta, new, right)
                - slice_action(kind, params, delta, left, old)
                - slice_action(kind, params, delta, old, right)
            )
            proposed += 1
            if change <= 0.0 or uniforms[sweep, k] < math.exp(-change / hbar):
                path[j] = new
                if periodic and j == 0:
                    path[n_slices] = new
                accepted += 1

        if periodic and shift_width > 0.0:
            sign = 1.0 if shift_proposals[sweep, 0] < 0.5 else -1.0
            shift = sign * shift_width * (1.0 + 0.1 * (2.0 * shift_proposals[sweep, 1] - 1.0))
            change = 0.0
            for j in range(n_slices):
                middle = 0.5 * (path[j] + path[j + 1])
                change += delta * (
                    potential_value(kind, params, middle + shift)
                    - potential_value(kind, params, middle)
                )
            shift_proposed += 1
            if change <= 0.0 or shift_uniforms[sweep] < math.exp(-change / hbar):
                for j in range(n_slices + 1):
                    path[j] += shift
                shift_accepted += 1

        if record_every > 0 and (first_sweep + sweep + 1) % record_every == 0:
            records[record, :] = path
            record += 1

    return accepted, proposed, shift_accepted, shift_proposed
