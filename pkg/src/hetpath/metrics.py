"""Asymmetry metrics, prediction accuracy and synthesis of link parameter vectors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


def mean_pairwise_gap(values: Sequence[float]) -> float:
    """Mean absolute difference over all unordered pairs; 0 for a single value.

    Computed from the sorted values in O(n log n): the gap between sorted
    neighbours ``k`` and ``k+1`` is spanned by ``(k+1)(n-1-k)`` pairs.  All
    terms are non-negative, so equal values give exactly zero.
    """
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    if n < 2:
        return 0.0
    k = np.arange(1, n)
    return float(2.0 * np.dot(np.diff(x), k * (n - k)) / (n * (n - 1)))


def avg_delay_asymmetry(delays: Sequence[float]) -> float:
    """Average absolute delay difference between any two links (seconds)."""
    return mean_pairwise_gap(delays)


def avg_bandwidth_asymmetry(bandwidths: Sequence[float]) -> float:
    """Average absolute bandwidth difference between any two links (bits/second)."""
    return mean_pairwise_gap(bandwidths)


@dataclass(frozen=True)
class AsymmetrySummary:
    avg_delay_asymmetry: float
    avg_bandwidth_asymmetry: float
    min_delay: float
    min_bandwidth: float


def summarize(delays: Sequence[float], bandwidths: Sequence[float]) -> AsymmetrySummary:
    return AsymmetrySummary(
        avg_delay_asymmetry(delays),
        avg_bandwidth_asymmetry(bandwidths),
        float(min(delays)),
        float(min(bandwidths)),
    )


def prediction_accuracy(simulated: float, modeled: float) -> float:
    """``1 - |T_S - T_M| / T_S``.  Negative for predictions off by more than 100%."""
    if not simulated > 0:
        raise ValueError(f"simulated throughput must be positive, got {simulated}")
    return 1.0 - abs(simulated - modeled) / simulated


def _progression(n: int, start: float, target: float) -> list[float]:
    if n < 1:
        raise ValueError(f"need at least one link, got {n}")
    if start < 0 or target < 0:
        raise ValueError("minimum and target asymmetry must be non-negative")
    if n == 1:
        if target != 0:
            raise ValueError("a single link has zero asymmetry")
        return [float(start)]
    # an n-term progression with step h has mean pairwise gap h(n+1)/3
    step = 3.0 * target / (n + 1)
    return [start + k * step for k in range(n)]


def synth_delays(n: int, d_min: float, target_asym: float) -> list[float]:
    """Evenly spaced delays starting at ``d_min`` whose average asymmetry is ``target_asym``."""
    return _progression(n, d_min, target_asym)


def synth_bandwidths(n: int, b_min: float, target_asym: float) -> list[float]:
    """Evenly spaced bandwidths starting at ``b_min`` with the given average asymmetry."""
    return _progression(n, b_min, target_asym)
