"""Trace processing and the fits used to characterize the emulator."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from ..sc_core import CYCLE_MS_REALTIME


class FitError(ValueError):
    pass


@dataclass
class Trace:
    """Values sampled on the cycle grid. ``cycles`` may be fractional after binning."""

    cycles: np.ndarray
    values: np.ndarray
    cycle_ms: float = CYCLE_MS_REALTIME
    name: str = ""

    def __post_init__(self):
        self.cycles = np.asarray(self.cycles, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.cycles.shape != self.values.shape:
            raise ValueError("cycles and values must have the same length")
        if len(self.cycles) > 1 and np.any(np.diff(self.cycles) <= 0):
            raise ValueError("trace cycles must be strictly increasing")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def t_ms(self) -> np.ndarray:
        return self.cycles * self.cycle_ms


class RatePoint(NamedTuple):
    input_hz: float
    output_hz: float


class LinearFit(NamedTuple):
    slope: float
    intercept: float


def bin_average(trace: Trace, bin_ms: float) -> Trace:
    """Mean over consecutive bins, stamped at the bin centre.

    Bins shorter than one cycle are widened to one cycle (identity).
    """
    if len(trace) == 0:
        return trace
    width = max(1, int(round(bin_ms / trace.cycle_ms)))
    if width == 1:
        return Trace(trace.cycles.copy(), trace.values.copy(), trace.cycle_ms, trace.name)
    n = len(trace)
    starts = np.arange(0, n, width)
    sums = np.add.reduceat(trace.values, starts)
    counts = np.diff(np.append(starts, n))
    centres = np.array([trace.cycles[s:s + width].mean() for s in starts])
    return Trace(centres, sums / counts, trace.cycle_ms, trace.name)


def fit_exponential(trace: Trace) -> tuple[float, float]:
    """Least-squares line through log(values); returns (amplitude, tau_ms)."""
    if len(trace) < 10:
        raise FitError(f"need at least 10 samples, got {len(trace)}")
    if np.any(trace.values <= 0):
        raise FitError("exponential fit needs strictly positive samples")
    t = trace.t_ms
    slope, intercept = np.polyfit(t, np.log(trace.values), 1)
    if slope >= 0 or not math.isfinite(slope):
        raise FitError("trace does not decay (infinite time constant)")
    return float(math.exp(intercept)), float(-1.0 / slope)


def fit_exponential_offset(trace: Trace, tau_guess_ms: float | None = None) -> tuple[float, float, float]:
    """Fit ``offset - amplitude * exp(-t / tau)``; returns (offset, amplitude, tau_ms).

    Used for relaxation toward an unknown plateau.
    """
    from scipy.optimize import curve_fit

    if len(trace) < 10:
        raise FitError(f"need at least 10 samples, got {len(trace)}")
    t = trace.t_ms - trace.t_ms[0]
    y = trace.values
    span = t[-1] if t[-1] > 0 else 1.0
    tau0 = tau_guess_ms or span / 3

    def model(t, c, a, tau):
        return c - a * np.exp(-t / tau)

    try:
        (c, a, tau), _ = curve_fit(model, t, y, p0=(y[-1], y[-1] - y[0], tau0), maxfev=20000)
    except RuntimeError as exc:
        raise FitError(str(exc)) from exc
    if not tau > 0:
        raise FitError("relaxation fit produced a non-positive time constant")
    return float(c), float(a * math.exp(trace.t_ms[0] / tau)), float(tau)


def fit_linear_window(points: Sequence[RatePoint], window: tuple[float, float] = (50.0, 150.0),
                      axis: str = "output") -> LinearFit:
    """OLS of output on input rate over points whose ``axis`` rate lies in ``window``."""
    pts = _in_window(points, window, axis)
    if len(pts) < 2:
        raise FitError(f"only {len(pts)} point(s) inside the {window} Hz window")
    x = np.array([p.input_hz for p in pts])
    y = np.array([p.output_hz for p in pts])
    if np.ptp(x) == 0:
        raise FitError("all points in the window share one input rate")
    slope, intercept = np.polyfit(x, y, 1)
    return LinearFit(float(slope), float(intercept))


def r_squared(points: Sequence[RatePoint], fit: LinearFit, window: tuple[float, float] | None = None,
              axis: str = "output") -> float:
    pts = _in_window(points, window, axis) if window else list(points)
    x = np.array([p.input_hz for p in pts])
    y = np.array([p.output_hz for p in pts])
    ss_res = float(np.sum((y - (fit.slope * x + fit.intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def extract_onset_frequency(points: Sequence[RatePoint], window: tuple[float, float] = (50.0, 150.0)) -> float:
    """Input rate where the line fitted in the output window crosses zero."""
    fit = fit_linear_window(points, window)
    if fit.slope == 0:
        raise FitError("flat transfer function has no onset")
    return -fit.intercept / fit.slope


def rms_error(values: np.ndarray, model: np.ndarray) -> float:
    """RMS deviation relative to the model peak."""
    peak = float(np.max(np.abs(model)))
    return float(np.sqrt(np.mean((values - model) ** 2))) / peak


def fit_scale(values: np.ndarray, shape: np.ndarray) -> float:
    """Least-squares amplitude c minimizing |values - c * shape|."""
    den = float(np.dot(shape, shape))
    if den == 0:
        raise FitError("model shape is identically zero")
    return float(np.dot(values, shape)) / den


def _in_window(points, window, axis):
    lo, hi = window
    key = 1 if axis == "output" else 0
    return [p for p in points if lo <= p[key] <= hi]
