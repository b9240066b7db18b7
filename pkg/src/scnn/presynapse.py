"""Per-row short-term plasticity and the PSC voltage trace.

Scalar reference implementation. The engine kernels vectorize exactly
these integer operations; ``tests/test_engine.py`` holds them to it.

Update at a spike (u' first, amplitude from u' and the old R, then
depression)::

    u' = u + U (1 - u)
    A  = u' R
    R' = R (1 - alpha u')
    v_psc' = min(v_psc + gain * A, V_sat)

Between spikes u decays toward 0, R recovers toward 1 and v_psc decays
toward 0, each by kappa per leak event of its own schedule.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .sc_core import (
    GAIN_FRAC_BITS,
    MV_ONE,
    RATIO_SHIFT,
    UNIT_FRAC_BITS,
    UNIT_ONE,
    ConfigError,
    Granularity,
    LeakSchedule,
    check_ratio_code,
    dac_fixed,
    decay_raw,
    quantize_dac,
    ratio_value,
    to_mv,
)

V_SAT_MV = 250.0
V_SAT = 250 * MV_ONE


class TickKind(enum.Enum):
    CYCLE = "cycle"
    EIGHTH = "eighth"


@dataclass(frozen=True)
class StpParams:
    # tau_u code 0 means u never decays, so it climbs to 1 within a few
    # spikes and U then stops mattering
    U_code: int = 32
    alpha_code: int = 0
    tau_u_code: int = 0
    tau_R_code: int = 0
    tau_psc_code: int = 10
    gain_code: int = 89

    def __post_init__(self):
        check_ratio_code(self.U_code)
        check_ratio_code(self.alpha_code)
        for name in ("tau_u_code", "tau_R_code", "tau_psc_code"):
            LeakSchedule(getattr(self, name), Granularity.PER_CYCLE)
        if quantize_dac(self.gain_code) < 0:
            raise ConfigError("PSC gain must be a non-negative DAC voltage (code >= 64)")

    @property
    def U(self) -> float:
        return ratio_value(self.U_code)

    @property
    def alpha(self) -> float:
        return ratio_value(self.alpha_code)

    @property
    def tau_u(self) -> LeakSchedule:
        return LeakSchedule(self.tau_u_code, Granularity.PER_CYCLE)

    @property
    def tau_R(self) -> LeakSchedule:
        return LeakSchedule(self.tau_R_code, Granularity.PER_CYCLE)

    @property
    def tau_psc(self) -> LeakSchedule:
        return LeakSchedule(self.tau_psc_code, Granularity.PER_EIGHTH_CYCLE)

    @property
    def gain_raw(self) -> int:
        return dac_fixed(self.gain_code)

    @classmethod
    def from_physical(cls, U: float, alpha: float, tau_u_ms: float, tau_R_ms: float,
                      tau_psc_ms: float, gain_code: int = 89) -> "StpParams":
        """Quantize physical parameters to the nearest register codes."""
        from .sc_core import ratio_code_for

        return cls(
            U_code=ratio_code_for(U),
            alpha_code=ratio_code_for(alpha),
            tau_u_code=LeakSchedule.from_tau(tau_u_ms, Granularity.PER_CYCLE).code,
            tau_R_code=LeakSchedule.from_tau(tau_R_ms, Granularity.PER_CYCLE).code,
            tau_psc_code=LeakSchedule.from_tau(tau_psc_ms, Granularity.PER_EIGHTH_CYCLE).code,
            gain_code=gain_code,
        )


@dataclass(frozen=True)
class PresynState:
    """u and R in units of 2^-30, v_psc in 2^-16 mV; phases count leak ticks."""

    u: int = 0
    R: int = UNIT_ONE
    v_psc: int = 0
    pending_spike: bool = False
    phase_u: int = 0
    phase_R: int = 0
    phase_psc: int = 0

    @property
    def u_value(self) -> float:
        return self.u / UNIT_ONE

    @property
    def R_value(self) -> float:
        return self.R / UNIT_ONE

    @property
    def v_psc_mv(self) -> float:
        return to_mv(self.v_psc)


def stp_on_spike(s: PresynState, p: StpParams) -> tuple[PresynState, int]:
    """Apply one presynaptic spike. Returns the new state and the raw jump."""
    u1 = s.u + ((p.U_code * (UNIT_ONE - s.u)) >> RATIO_SHIFT)
    amp = (u1 * s.R) >> UNIT_FRAC_BITS
    depress = (p.alpha_code * u1) >> RATIO_SHIFT
    R1 = s.R - ((s.R * depress) >> UNIT_FRAC_BITS)
    jump = (p.gain_raw * amp) >> UNIT_FRAC_BITS
    v = min(s.v_psc + jump, V_SAT)
    return replace(s, u=u1, R=R1, v_psc=v, pending_spike=False), jump


def spike_amplitude(s: PresynState, p: StpParams) -> int:
    """Dimensionless amplitude A = u' R (raw) the next spike would produce."""
    u1 = s.u + ((p.U_code * (UNIT_ONE - s.u)) >> RATIO_SHIFT)
    return (u1 * s.R) >> UNIT_FRAC_BITS


def stp_decay_tick(s: PresynState, p: StpParams, tick_kind: TickKind) -> PresynState:
    """Advance the schedules of ``tick_kind`` by one tick."""
    if tick_kind is TickKind.CYCLE:
        n_u, phase_u = p.tau_u.advance(s.phase_u)
        n_R, phase_R = p.tau_R.advance(s.phase_R)
        u, R = s.u, s.R
        for _ in range(n_u):
            u = decay_raw(u)
        for _ in range(n_R):
            R = UNIT_ONE - decay_raw(UNIT_ONE - R)
        return replace(s, u=u, R=R, phase_u=phase_u, phase_R=phase_R)
    n, phase = p.tau_psc.advance(s.phase_psc)
    v = s.v_psc
    for _ in range(n):
        v = decay_raw(v)
    return replace(s, v_psc=v, phase_psc=phase)


def stp_decay_cycle(s: PresynState, p: StpParams) -> PresynState:
    """All decay ticks of one matrix cycle: 8 PSC ticks, one u/R tick."""
    for _ in range(8):
        s = stp_decay_tick(s, p, TickKind.EIGHTH)
    return stp_decay_tick(s, p, TickKind.CYCLE)


def scale_weight(v_psc: int, weight: int, sign: int, g_raw: int) -> int:
    """Charge delivered to the membrane by one synapse, raw mV units.

    ``g_raw`` is the unit-capacitor gain in 2^-32 units. The per-row unit
    charge is truncated once, so the result is exactly linear in weight.
    """
    if not 0 <= weight <= 15:
        raise ConfigError(f"weight must be in 0..15, got {weight}")
    if sign not in (1, -1):
        raise ConfigError("sign must be +1 or -1")
    return sign * weight * unit_charge(v_psc, g_raw)


def unit_charge(v_psc: int, g_raw: int) -> int:
    prod = g_raw * v_psc
    if prod >= 0:
        return prod >> GAIN_FRAC_BITS
    return -((-prod) >> GAIN_FRAC_BITS)


def gain_to_raw(g_w: float) -> int:
    return int(round(g_w * (1 << GAIN_FRAC_BITS)))


def relax_test_mode(s: PresynState, p: StpParams, n_spikes: int, interval_cycles: int) -> list[int]:
    """Probe a depressed synapse with alpha forced to 0.

    Returns the raw amplitudes A_n of ``n_spikes`` spikes spaced
    ``interval_cycles`` apart. With alpha = 0, R only recovers.
    """
    p0 = replace(p, alpha_code=0)
    amps = []
    for i in range(n_spikes):
        if i:
            for _ in range(interval_cycles):
                s = stp_decay_cycle(s, p0)
        amps.append(spike_amplitude(s, p0))
        s, _ = stp_on_spike(s, p0)
    return amps

