"""Switched-capacitor primitives shared by every block of the emulator.

All analog state is held as signed integers in fixed point:

* voltages: millivolts scaled by ``2**MV_FRAC_BITS`` (2^-16 mV resolution),
  differential w.r.t. the common-mode voltage, which is therefore 0.
* dimensionless quantities (u, R, synaptic state x, PSC amplitude A):
  scaled by ``2**UNIT_FRAC_BITS``.

A leak event (charge sharing with a discharged C_leak) multiplies the
distance to the decay target by kappa = 15/16 and truncates toward zero.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

MV_FRAC_BITS = 16
MV_ONE = 1 << MV_FRAC_BITS
UNIT_FRAC_BITS = 30
UNIT_ONE = 1 << UNIT_FRAC_BITS
GAIN_FRAC_BITS = 32

C_MEM_FF = 75.0
C_LEAK_FF = 5.0
KAPPA_NUM = 15
KAPPA_SHIFT = 4
KAPPA = KAPPA_NUM / (1 << KAPPA_SHIFT)

CYCLE_MS_REALTIME = 0.62
REALTIME_DIVIDER = 100
TICKS_PER_CYCLE = 8

DAC_BITS = 7
DAC_MAX_CODE = (1 << DAC_BITS) - 1
DAC_MIN_MV = -250.0
DAC_MAX_MV = 250.0

LEAK_CODE_MAX = 63
RATIO_CODE_MAX = 63
RATIO_SHIFT = 6

PRESYN_GROUPS = 8
NEURON_GROUPS = 4
GROUP_SIZE = 16


class ConfigError(ValueError):
    """A parameter lies outside its register range or physical domain."""


def to_fixed(mv: float) -> int:
    """Millivolts to fixed point (round to nearest)."""
    return int(round(mv * MV_ONE))


def to_mv(raw) -> float:
    return raw / MV_ONE


def unit_to_fixed(x: float) -> int:
    return int(round(x * UNIT_ONE))


def unit_from_fixed(raw) -> float:
    return raw / UNIT_ONE


def decay_raw(v: int) -> int:
    """One leak event toward 0: v * 15/16, truncated toward zero."""
    if v >= 0:
        return (v * KAPPA_NUM) >> KAPPA_SHIFT
    return -((-v * KAPPA_NUM) >> KAPPA_SHIFT)


def decay_raw_n(v: int, n: int) -> int:
    for _ in range(n):
        if v == 0:
            break
        v = decay_raw(v)
    return v


@dataclass(frozen=True)
class AnalogState:
    """One quantized differential voltage (raw fixed-point units)."""

    raw: int = 0

    @classmethod
    def from_mv(cls, mv: float) -> "AnalogState":
        return cls(to_fixed(mv))

    @property
    def mv(self) -> float:
        return to_mv(self.raw)


# --------------------------------------------------------------------------
# time base and leak scheduling


@dataclass
class TimeBase:
    clock_divider: int = REALTIME_DIVIDER
    cycle_index: int = 0

    def __post_init__(self):
        check_divider(self.clock_divider)

    @property
    def cycle_period_ms(self) -> float:
        return CYCLE_MS_REALTIME * self.clock_divider / REALTIME_DIVIDER

    @property
    def speedup(self) -> float:
        return REALTIME_DIVIDER / self.clock_divider

    def elapsed_ms(self, cycles: int | None = None) -> float:
        """Wall time covered by ``cycles`` (default: all cycles so far)."""
        n = self.cycle_index if cycles is None else cycles
        return n * self.cycle_period_ms


def check_divider(divider: int) -> int:
    if not isinstance(divider, (int,)) or not 1 <= divider <= 255:
        raise ConfigError(f"clock divider must be in 1..255, got {divider!r}")
    return divider


class Granularity(enum.Enum):
    PER_CYCLE = 1
    PER_EIGHTH_CYCLE = TICKS_PER_CYCLE

    @property
    def ticks_per_cycle(self) -> int:
        return self.value

    @property
    def tick_ms(self) -> float:
        return CYCLE_MS_REALTIME / self.value


@dataclass(frozen=True)
class LeakSchedule:
    """6-bit leak divider. Code 0 means no leak events ("inf.")."""

    code: int
    granularity: Granularity

    def __post_init__(self):
        if not isinstance(self.code, int) or not 0 <= self.code <= LEAK_CODE_MAX:
            raise ConfigError(f"leak divider code must be in 0..63, got {self.code!r}")

    @property
    def enabled(self) -> bool:
        return self.code != 0

    @property
    def tau_ms(self) -> float:
        return tau_from_divider(self.code, self.granularity)

    @classmethod
    def from_tau(cls, tau_ms: float, granularity: Granularity) -> "LeakSchedule":
        return cls(divider_from_tau(tau_ms, granularity), granularity)

    def advance(self, phase: int, ticks: int = 1) -> tuple[int, int]:
        """Advance the tick counter; returns (events fired, new phase)."""
        return leak_events(self.code, phase, ticks)


def leak_events(code: int, phase: int, ticks: int) -> tuple[int, int]:
    if code == 0:
        return 0, phase
    total = phase + ticks
    return total // code, total % code


# --------------------------------------------------------------------------
# time constants


def decay_factor(c_main: float, c_leak: float) -> float:
    """Charge-sharing ratio C_main / (C_main + C_leak)."""
    if not (c_main > 0 and c_leak > 0):
        raise ConfigError("capacitances must be positive")
    return c_main / (c_main + c_leak)


def leak_period_from_tau(tau: float, kappa: float) -> float:
    """Period between leak events that yields time constant ``tau``."""
    if not tau > 0:
        raise ConfigError("tau must be positive")
    if not 0 < kappa < 1:
        raise ConfigError("kappa must lie in (0, 1)")
    return -tau * math.log(kappa)


def tau_from_divider(code: int, granularity: Granularity) -> float:
    """Time constant (ms, biological realtime) of a divider code.

    Code 0 returns ``math.inf``.
    """
    if not 0 <= code <= LEAK_CODE_MAX:
        raise ConfigError(f"leak divider code must be in 0..63, got {code}")
    if code == 0:
        return math.inf
    return code * granularity.tick_ms / -math.log(KAPPA)


def divider_from_tau(tau_ms: float, granularity: Granularity) -> int:
    """Nearest divider code for ``tau_ms``; ``inf`` maps to 0."""
    if math.isinf(tau_ms):
        return 0
    period = leak_period_from_tau(tau_ms, KAPPA)
    code = int(round(period / granularity.tick_ms))
    if not 1 <= code <= LEAK_CODE_MAX:
        raise ConfigError(f"tau {tau_ms} ms is outside the range of {granularity.name}")
    return code


def apply_leak_event(v: int, target: int = 0) -> int:
    """One charge-sharing event pulling raw value ``v`` toward ``target``."""
    return target + decay_raw(v - target)


# --------------------------------------------------------------------------
# DAC and ratio registers


def quantize_dac(code: int) -> float:
    """7-bit bias DAC, endpoints inclusive: 0 -> -250 mV, 127 -> +250 mV."""
    if not isinstance(code, int) or not 0 <= code <= DAC_MAX_CODE:
        raise ConfigError(f"DAC code must be in 0..127, got {code!r}")
    return DAC_MIN_MV + code * (DAC_MAX_MV - DAC_MIN_MV) / DAC_MAX_CODE


def dac_fixed(code: int) -> int:
    """DAC output in raw fixed point, rounded from the exact rational."""
    quantize_dac(code)
    exact = Fraction(-250) + Fraction(code * 500, DAC_MAX_CODE)
    return round(exact * MV_ONE)


def dac_code_for(mv: float) -> int:
    code = round((mv - DAC_MIN_MV) * DAC_MAX_CODE / (DAC_MAX_MV - DAC_MIN_MV))
    return min(max(int(code), 0), DAC_MAX_CODE)


@dataclass(frozen=True)
class DacValue:
    code: int

    def __post_init__(self):
        quantize_dac(self.code)

    @property
    def mv(self) -> float:
        return quantize_dac(self.code)

    @property
    def raw(self) -> int:
        return dac_fixed(self.code)


def ratio_value(code: int) -> float:
    """U and alpha registers: code / 64."""
    check_ratio_code(code)
    return code / (1 << RATIO_SHIFT)


def ratio_code_for(x: float) -> int:
    return min(max(int(round(x * (1 << RATIO_SHIFT))), 0), RATIO_CODE_MAX)


def check_ratio_code(code: int) -> int:
    if not isinstance(code, int) or not 0 <= code <= RATIO_CODE_MAX:
        raise ConfigError(f"ratio code must be in 0..63, got {code!r}")
    return code
