"""Tail classifiers for simulated orbits.

The deterministic detectors use a fixed tolerance. Noisy tails are told apart
by how often the orbit returns close to the equilibrium: a noisy two-cycle
keeps alternating around two separated clusters and almost never comes back
near K, while a noisy equilibrium keeps revisiting its neighbourhood.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Outcome(str, Enum):
    CONVERGED = "converged"
    TWO_CYCLE = "two-cycle"
    NOISY_TWO_CYCLE = "noisy two-cycle"
    NOISY_EQUILIBRIUM = "noisy equilibrium"
    IRREGULAR = "irregular"


# label -> accepted outcomes, as used in experiment configs
EXPECTATIONS = {
    "converged": {Outcome.CONVERGED},
    "two-cycle": {Outcome.TWO_CYCLE},
    "noisy two-cycle": {Outcome.NOISY_TWO_CYCLE},
    "noisy equilibrium": {Outcome.NOISY_EQUILIBRIUM},
    "noisy equilibrium or converged": {Outcome.NOISY_EQUILIBRIUM, Outcome.CONVERGED},
}


def converged_to(states, target, tol: float = 1e-3, window: int = 50) -> bool:
    """True if the last ``window`` states are within ``tol`` of ``target`` in max-norm."""
    states = np.asarray(states, dtype=np.float64)
    if states.shape[0] < window:
        return False
    tail = states[-window:]
    return bool(np.all(np.abs(tail - np.asarray(target, dtype=np.float64)) < tol))


def period_two(states, tol: float = 1e-3, window: int = 100) -> bool:
    """Even and odd tail points each form a cluster of diameter below ``tol``,
    and the clusters are more than ``10 * tol`` apart (max-norm)."""
    states = np.asarray(states, dtype=np.float64)
    if states.shape[0] < max(window, 4):
        return False
    tail = states[-window:]
    even, odd = tail[0::2], tail[1::2]
    if np.ptp(even, axis=0).max() >= tol or np.ptp(odd, axis=0).max() >= tol:
        return False
    gap = np.abs(even[:, None, :] - odd[None, :, :]).max(axis=2).min()
    return bool(gap > 10.0 * tol)


@dataclass(frozen=True)
class TailStats:
    rms_radius: float
    recurrence: float
    coherence: float


def tail_stats(states, target, near_fraction: float = 0.25, block: int = 50) -> TailStats:
    """Summary statistics of a noisy tail around ``target``.

    ``recurrence`` is the fraction of tail points closer to ``target`` than
    ``near_fraction`` times the RMS distance. ``coherence`` is the block
    averaged period-2 amplitude ``|mean((-1)^n (z_n - K))|`` over the RMS
    distance; it is 1 for a clean two-cycle and near 0 for unstructured noise.
    """
    tail = np.asarray(states, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    dist = np.sqrt((tail ** 2).sum(axis=1))
    rms = float(np.sqrt((dist ** 2).mean()))
    if rms == 0.0:
        return TailStats(0.0, 1.0, 0.0)
    recurrence = float((dist < near_fraction * rms).mean())
    nblocks = tail.shape[0] // block
    if nblocks == 0:
        block, nblocks = tail.shape[0], 1
    used = tail[tail.shape[0] - nblocks * block:]
    signs = np.where(np.arange(used.shape[0]) % 2 == 0, 1.0, -1.0)[:, None]
    amp = np.sqrt(((used * signs).reshape(nblocks, block, 2).mean(axis=1) ** 2).sum(axis=1))
    return TailStats(rms, recurrence, float(amp.mean()) / rms)


def classify_tail(states, target, tol: float = 1e-3, window: int = 50,
                  recurrence_max: float = 0.05, coherence_min: float = 0.5,
                  near_fraction: float = 0.25, block: int = 50) -> Outcome:
    """Label the long-run behaviour visible in ``states`` (a trajectory tail)."""
    if converged_to(states, target, tol, window):
        return Outcome.CONVERGED
    if period_two(states, tol, window=2 * window):
        return Outcome.TWO_CYCLE
    stats = tail_stats(states, target, near_fraction, block)
    if stats.recurrence <= recurrence_max:
        if stats.coherence >= coherence_min:
            return Outcome.NOISY_TWO_CYCLE
        return Outcome.IRREGULAR
    return Outcome.NOISY_EQUILIBRIUM
