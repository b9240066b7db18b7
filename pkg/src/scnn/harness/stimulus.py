"""Spike-train generators on the matrix-cycle grid."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..sc_core import CYCLE_MS_REALTIME, ConfigError


def regular_period_cycles(rate_hz: float, cycle_ms: float = CYCLE_MS_REALTIME) -> int:
    """Inter-spike interval in cycles, rounded half up."""
    if not rate_hz > 0:
        raise ConfigError(f"rate must be positive, got {rate_hz}")
    period = 1000.0 / rate_hz / cycle_ms
    if period < 1.0:
        raise ConfigError(f"{rate_hz} Hz exceeds one spike per cycle ({1000 / cycle_ms:.0f} Hz)")
    return int(math.floor(period + 0.5))


def gen_regular_train(rate_hz: float, count: int, cycle_ms: float = CYCLE_MS_REALTIME,
                      start: int = 0) -> np.ndarray:
    """``count`` spikes at multiples of the rounded period, from cycle ``start``."""
    if count < 0:
        raise ConfigError("count must be non-negative")
    if count == 0:
        return np.zeros(0, dtype=np.int64)
    period = regular_period_cycles(rate_hz, cycle_ms)
    return start + period * np.arange(count, dtype=np.int64)


def realized_rate(rate_hz: float, cycle_ms: float = CYCLE_MS_REALTIME) -> float:
    """Rate actually delivered by :func:`gen_regular_train` after rounding."""
    if rate_hz == 0:
        return 0.0
    return 1000.0 / (regular_period_cycles(rate_hz, cycle_ms) * cycle_ms)


def regular_train_for(rate_hz: float, n_cycles: int, cycle_ms: float = CYCLE_MS_REALTIME) -> np.ndarray:
    """Regular train filling ``n_cycles`` cycles (empty for rate 0)."""
    if rate_hz == 0:
        return np.zeros(0, dtype=np.int64)
    period = regular_period_cycles(rate_hz, cycle_ms)
    return np.arange(0, n_cycles, period, dtype=np.int64)


def gen_poisson_train(rate_hz: float, duration_ms: float, seed: int | Sequence[int],
                      cycle_ms: float = CYCLE_MS_REALTIME) -> np.ndarray:
    """Seeded Poisson train as sorted cycle indices.

    Two spikes may fall into the same cycle; the input latch merges them,
    so the delivered count can be slightly below the returned length.
    """
    if rate_hz < 0:
        raise ConfigError("rate must be non-negative")
    if rate_hz == 0 or duration_ms <= 0:
        return np.zeros(0, dtype=np.int64)
    rng = np.random.default_rng(seed)
    n = rng.poisson(rate_hz * duration_ms / 1000.0)
    times = np.sort(rng.uniform(0.0, duration_ms, size=n))
    return np.floor(times / cycle_ms).astype(np.int64)
