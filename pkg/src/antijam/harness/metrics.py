"""Curve smoothing, convergence and power metrics, and the paired sign test."""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np


def moving_average(series, window: int) -> np.ndarray:
    """Trailing mean over ``min(window, i+1)`` entries."""
    if window < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(series, dtype=np.float64)
    # direct window means; a running cumsum drifts enough to flip threshold tests
    return np.array([x[max(0, i - window + 1) : i + 1].mean() for i in range(len(x))])


def convergence_slot(series, fraction: float = 0.9, window: int = 20) -> Optional[int]:
    """First index from which the smoothed series stays at or above
    ``fraction`` times the mean of the last ``window`` raw values.

    Returns None when even the final point is below the threshold.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty series")
    smooth = moving_average(x, window)
    threshold = fraction * x[-window:].mean()
    below = np.flatnonzero(smooth < threshold)
    if below.size == 0:
        return 0
    first = int(below[-1]) + 1
    return None if first >= x.size else first


def average_power(power_indices, sender_powers: Sequence[float]) -> float:
    levels = np.asarray(sender_powers, dtype=np.float64)
    return float(levels[np.asarray(power_indices, dtype=np.intp)].mean())


def final_window_mean(series, window: int = 100) -> float:
    return float(np.mean(np.asarray(series, dtype=np.float64)[-window:]))


def sign_test(a, b) -> tuple:
    """One-sided paired sign test of ``a > b``.

    Ties are dropped. Returns ``(wins, n, p_value)`` where ``p`` is the
    binomial tail ``P(X >= wins)`` under a fair coin.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("paired samples must have equal length")
    diff = a - b
    wins = int(np.sum(diff > 0))
    n = int(np.sum(diff != 0))
    if n == 0:
        return 0, 0, 1.0
    p = sum(math.comb(n, k) for k in range(wins, n + 1)) / 2.0**n
    return wins, n, p


def pooled_std(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return math.sqrt((a.var(ddof=1) + b.var(ddof=1)) / 2.0)
