"""LIAF membrane: integrate, SC leak toward 0, strict threshold, reset.

Within a neuron's column slot the order is fixed: integrate the summed
charge, apply the leak events scheduled for this cycle, then compare.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

from .sc_core import (
    C_LEAK_FF,
    C_MEM_FF,
    MV_ONE,
    ConfigError,
    Granularity,
    LeakSchedule,
    dac_fixed,
    decay_raw,
    quantize_dac,
    to_mv,
)

V_RAIL = 250 * MV_ONE


@dataclass(frozen=True)
class NeuronParams:
    thresh_code: int = 89
    reset_code: int = 63
    tau_m_code: int = 10
    c_mem_ff: float = C_MEM_FF
    c_leak_ff: float = C_LEAK_FF

    def __post_init__(self):
        quantize_dac(self.thresh_code)
        quantize_dac(self.reset_code)
        LeakSchedule(self.tau_m_code, Granularity.PER_EIGHTH_CYCLE)
        if self.c_mem_ff != C_MEM_FF or self.c_leak_ff != C_LEAK_FF:
            raise ConfigError("membrane capacitances are fixed at 75 fF / 5 fF")
        if self.v_thresh_mv <= 0:
            warnings.warn(f"threshold {self.v_thresh_mv:.2f} mV <= 0: neuron fires at rest",
                          stacklevel=3)

    @property
    def v_thresh_mv(self) -> float:
        return quantize_dac(self.thresh_code)

    @property
    def v_reset_mv(self) -> float:
        return quantize_dac(self.reset_code)

    @property
    def thresh_raw(self) -> int:
        return dac_fixed(self.thresh_code)

    @property
    def reset_raw(self) -> int:
        return dac_fixed(self.reset_code)

    @property
    def tau_m(self) -> LeakSchedule:
        return LeakSchedule(self.tau_m_code, Granularity.PER_EIGHTH_CYCLE)


@dataclass(frozen=True)
class NeuronState:
    v_mem: int = 0
    fired_this_cycle: bool = False
    phase: int = 0

    @property
    def v_mem_mv(self) -> float:
        return to_mv(self.v_mem)


def clamp_rail(v: int) -> int:
    return V_RAIL if v > V_RAIL else (-V_RAIL if v < -V_RAIL else v)


def integrate(n: NeuronState, q_total: int) -> NeuronState:
    return replace(n, v_mem=clamp_rail(n.v_mem + q_total))


def leak_tick(n: NeuronState, params: NeuronParams) -> NeuronState:
    """One PerEighthCycle tick of the membrane leak schedule."""
    events, phase = params.tau_m.advance(n.phase)
    v = n.v_mem
    for _ in range(events):
        v = decay_raw(v)
    return replace(n, v_mem=v, phase=phase)


def compare_and_fire(n: NeuronState, params: NeuronParams,
                     thresh: int | None = None, reset: int | None = None) -> tuple[NeuronState, bool]:
    """Fire iff v_mem is strictly above threshold; reset on a spike."""
    thresh = params.thresh_raw if thresh is None else thresh
    if n.v_mem > thresh:
        return replace(n, v_mem=params.reset_raw if reset is None else reset,
                       fired_this_cycle=True), True
    return replace(n, fired_this_cycle=False), False


def column_slot(n: NeuronState, params: NeuronParams, q_total: int) -> tuple[NeuronState, bool, int]:
    """Integrate, leak for one cycle's 8 ticks, compare.

    Returns (state, spiked, pre-reset membrane voltage).
    """
    n = integrate(n, q_total)
    for _ in range(8):
        n = leak_tick(n, params)
    pre = n.v_mem
    n, spiked = compare_and_fire(n, params)
    return n, spiked, pre
