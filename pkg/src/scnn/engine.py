"""Matrix engine: the fixed-timestep state machine of the whole system.

One call to :meth:`Engine.step_cycle` is one matrix cycle:

1. rows with a latched spike update their short-term plasticity state and
   PSC voltage (row 127 is always active at the constant level V_bg);
2. each column in turn sums weighted PSC charge from all 128 rows onto its
   neuron, applies the neuron's leak events for this cycle, compares
   against threshold and runs the long-term plasticity update;
3. PSC, u and R decay according to their schedules;
4. the input latch is cleared and the 64-bit fired vector returned.

Nothing inside the cycle depends on the clock divider, so trajectories are
identical at every speed-up; the divider only maps cycles to wall time.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _layout as L
from .kernel import get_backend
from .neuron import V_RAIL, NeuronParams, NeuronState
from .plasticity import BACKGROUND_ROW, N_COLS, N_ROWS, LtpParams, SynapseWord, WeightRam
from .presynapse import V_SAT, PresynState, StpParams, gain_to_raw
from .sc_core import (
    GROUP_SIZE,
    NEURON_GROUPS,
    PRESYN_GROUPS,
    UNIT_ONE,
    ConfigError,
    TimeBase,
    check_divider,
    dac_fixed,
    quantize_dac,
    to_fixed,
    to_mv,
)

DEFAULT_GAIN_CODE = StpParams().gain_code


def default_g_w(gain_code: int = DEFAULT_GAIN_CODE) -> float:
    """Unit charge gain giving a 10 mV membrane step for weight 15, U=1, from rest."""
    return 10.0 / (15 * quantize_dac(gain_code))


@dataclass
class EngineConfig:
    presyn: list[StpParams] = field(default_factory=lambda: [StpParams()] * PRESYN_GROUPS)
    neurons: list[NeuronParams] = field(default_factory=lambda: [NeuronParams()] * NEURON_GROUPS)
    g_w: float = field(default_factory=default_g_w)
    background_code: int = 64
    ltp: LtpParams = field(default_factory=LtpParams)
    clock_divider: int = 100
    residual_leak_shift: int = 0

    def __post_init__(self):
        if len(self.presyn) != PRESYN_GROUPS or len(self.neurons) != NEURON_GROUPS:
            raise ConfigError("need 8 presynaptic and 4 neuron parameter groups")
        if not 0 < self.g_w <= 100:
            raise ConfigError(f"g_w must lie in (0, 100], got {self.g_w}")
        quantize_dac(self.background_code)
        check_divider(self.clock_divider)
        if not 0 <= self.residual_leak_shift <= 62:
            raise ConfigError("residual_leak_shift must be in 0..62")

    def with_presyn(self, params: StpParams, groups: Iterable[int] = range(PRESYN_GROUPS)) -> "EngineConfig":
        presyn = list(self.presyn)
        for g in groups:
            presyn[g] = params
        return replace(self, presyn=presyn)

    def with_neurons(self, params: NeuronParams, groups: Iterable[int] = range(NEURON_GROUPS)) -> "EngineConfig":
        neurons = list(self.neurons)
        for g in groups:
            neurons[g] = params
        return replace(self, neurons=neurons)


@dataclass
class RunRecord:
    """Per-cycle output of :meth:`Engine.run` (raw fixed-point probes)."""

    start_cycle: int
    fired: np.ndarray
    probe_neurons: np.ndarray
    probe_rows: np.ndarray
    v_mem: np.ndarray
    v_psc: np.ndarray
    u: np.ndarray
    R: np.ndarray
    amp: np.ndarray

    @property
    def cycles(self) -> np.ndarray:
        return self.start_cycle + np.arange(len(self.fired))

    def spike_counts(self) -> np.ndarray:
        """Number of spikes per neuron over the run."""
        bits = self.fired[:, None] >> np.arange(N_COLS, dtype=np.uint64)[None, :]
        return (bits & np.uint64(1)).sum(axis=0).astype(np.int64)

    def neuron_spike_cycles(self, neuron: int) -> np.ndarray:
        mask = (self.fired >> np.uint64(neuron)) & np.uint64(1)
        return self.cycles[mask.astype(bool)]


_PG_FIELDS = (("U_code", L.PG_U), ("alpha_code", L.PG_ALPHA), ("tau_u_code", L.PG_TAU_U),
              ("tau_R_code", L.PG_TAU_R), ("tau_psc_code", L.PG_TAU_PSC))
_PG_PHASE = {L.PG_TAU_U: L.PG_PH_U, L.PG_TAU_R: L.PG_PH_R, L.PG_TAU_PSC: L.PG_PH_PSC}


class Engine:
    def __init__(self, config: EngineConfig | None = None, backend: str | None = None):
        self.config = config or EngineConfig()
        self.backend = get_backend(backend)
        self.time = TimeBase(self.config.clock_divider)
        self.probe_neuron = 0
        self.probe_row = 0

        self.u = np.zeros(N_ROWS, dtype=np.int64)
        self.R = np.full(N_ROWS, UNIT_ONE, dtype=np.int64)
        self.v_psc = np.zeros(N_ROWS, dtype=np.int64)
        self.pending = np.zeros(N_ROWS, dtype=np.int64)
        self.amp = np.zeros(N_ROWS, dtype=np.int64)
        self.pgrp = np.zeros((L.PG_FIELDS, PRESYN_GROUPS), dtype=np.int64)
        self.ngrp = np.zeros((L.NG_FIELDS, NEURON_GROUPS), dtype=np.int64)
        self.v_mem = np.zeros(N_COLS, dtype=np.int64)
        self.offset = np.zeros(N_COLS, dtype=np.int64)
        self.fired = np.zeros(N_COLS, dtype=np.int64)
        self.params = np.zeros(L.P_FIELDS, dtype=np.int64)
        self.ram = WeightRam()
        self._gain_codes = [DEFAULT_GAIN_CODE] * PRESYN_GROUPS
        self._neuron_params = list(self.config.neurons)

        for g, p in enumerate(self.config.presyn):
            self.set_presyn_group(g, p)
        for g, p in enumerate(self.config.neurons):
            self.set_neuron_group(g, p)
        self.params[L.P_G_RAW] = gain_to_raw(self.config.g_w)
        self.params[L.P_VSAT] = V_SAT
        self.params[L.P_VRAIL] = V_RAIL
        self.params[L.P_RESID_SHIFT] = self.config.residual_leak_shift
        self.set_background_level(self.config.background_code)
        self.set_ltp(self.config.ltp)

        self._kernel = self.backend.CycleKernel(
            self.u, self.R, self.v_psc, self.pending, self.amp, self.pgrp, self.ngrp,
            self.v_mem, self.offset, self.fired, self.ram.weff, self.ram.x,
            self.ram.ltp, self.ram.ltd, self.ram.sign, self.params)

    # ------------------------------------------------------------------
    # parameter groups

    def set_presyn_group(self, group: int, params: StpParams) -> None:
        if not 0 <= group < PRESYN_GROUPS:
            raise ConfigError(f"presynaptic group must be in 0..7, got {group}")
        for name, idx in _PG_FIELDS:
            self.set_presyn_field(group, idx, getattr(params, name))
        self.pgrp[L.PG_GAIN, group] = params.gain_raw
        self._gain_codes[group] = params.gain_code

    def set_presyn_field(self, group: int, idx: int, code: int) -> None:
        old = self.pgrp[idx, group]
        self.pgrp[idx, group] = code
        if idx in _PG_PHASE and old != code:
            self.pgrp[_PG_PHASE[idx], group] = 0

    def presyn_params(self, row: int) -> StpParams:
        """Effective parameters of ``row`` (resolved through its group)."""
        if not 0 <= row < N_ROWS:
            raise IndexError(f"row {row} out of range")
        g = row // GROUP_SIZE
        kw = {name: int(self.pgrp[idx, g]) for name, idx in _PG_FIELDS}
        return StpParams(gain_code=self._gain_codes[g], **kw)

    def set_neuron_group(self, group: int, params: NeuronParams) -> None:
        if not 0 <= group < NEURON_GROUPS:
            raise ConfigError(f"neuron group must be in 0..3, got {group}")
        self.ngrp[L.NG_THRESH, group] = params.thresh_raw
        self.ngrp[L.NG_RESET, group] = params.reset_raw
        if self.ngrp[L.NG_TAU_M, group] != params.tau_m_code:
            self.ngrp[L.NG_PH_M, group] = 0
        self.ngrp[L.NG_TAU_M, group] = params.tau_m_code
        self._neuron_params[group] = params

    def neuron_params(self, neuron: int) -> NeuronParams:
        if not 0 <= neuron < N_COLS:
            raise IndexError(f"neuron {neuron} out of range")
        return self._neuron_params[neuron // GROUP_SIZE]

    def set_thresholds_raw(self, group: int, thresh: int, reset: int) -> None:
        """Off-grid threshold/reset (raw units) for experiments and tests."""
        self.ngrp[L.NG_THRESH, group] = thresh
        self.ngrp[L.NG_RESET, group] = reset

    def set_background_level(self, code: int) -> None:
        self.params[L.P_VBG] = dac_fixed(code)
        self._background_code = code

    @property
    def background_code(self) -> int:
        return self._background_code

    def set_ltp(self, p: LtpParams) -> None:
        r = p.raw()
        self.params[L.P_PLASTIC] = int(p.enabled)
        self.params[L.P_THETA_V] = r["theta_v"]
        self.params[L.P_A_UP] = r["a_up"]
        self.params[L.P_B_DOWN] = r["b_down"]
        self.params[L.P_DRIFT_UP] = r["drift_up"]
        self.params[L.P_DRIFT_DOWN] = r["drift_down"]
        self.params[L.P_THETA_X] = r["theta_x"]
        self.ram.set_theta_x(r["theta_x"])
        self.ltp = p

    def set_neuron_offset(self, neuron: int, mv: float) -> None:
        self.offset[neuron] = to_fixed(mv)

    # ------------------------------------------------------------------
    # synapses

    def write_synapse(self, row: int, col: int, word: SynapseWord) -> None:
        self.ram.write(row, col, word)

    def read_synapse(self, row: int, col: int) -> SynapseWord:
        return self.ram.read(row, col)

    def connect(self, row: int, col: int, weight: int, inhibitory: bool = False) -> None:
        self.ram.write(row, col, SynapseWord.fixed(weight, inhibitory))

    def configure_background(self, neuron: int, weight: int, sign: int = 1) -> None:
        if sign not in (1, -1):
            raise ConfigError("sign must be +1 or -1")
        if not 0 <= neuron < N_COLS:
            raise ConfigError(f"neuron must be in 0..63, got {neuron}")
        self.ram.write(BACKGROUND_ROW, neuron, SynapseWord.fixed(weight, sign < 0))

    # ------------------------------------------------------------------
    # time

    def set_speedup(self, divider: int) -> None:
        self.time.clock_divider = check_divider(divider)

    @property
    def cycle_index(self) -> int:
        return self.time.cycle_index

    # ------------------------------------------------------------------
    # simulation

    def latch_inputs(self, rows: Iterable[int]) -> None:
        """Register spikes; they take effect at the start of the next cycle."""
        rows = list(rows)
        for r in rows:
            if not 0 <= r < BACKGROUND_ROW:
                raise ConfigError(f"input address must be in 0..126, got {r}")
        if rows:
            self.pending[rows] = 1

    def step_cycle(self) -> int:
        return int(self.run(1).fired[0])

    def run(self, n_cycles: int, stimulus: Mapping[int, Sequence[int]] | None = None,
            probe_neurons: Sequence[int] = (), probe_rows: Sequence[int] = ()) -> RunRecord:
        """Run ``n_cycles`` cycles.

        ``stimulus`` maps a row to the cycle offsets (relative to this call)
        at which it spikes; a spike at offset k is processed in cycle k.
        Probes are sampled at the end of every cycle.
        """
        ptr, rows = build_schedule(n_cycles, stimulus or {})
        pn = np.asarray(probe_neurons, dtype=np.int64)
        pr = np.asarray(probe_rows, dtype=np.int64)
        fired = np.zeros(n_cycles, dtype=np.uint64)
        vmem = np.zeros((n_cycles, len(pn)), dtype=np.int64)
        psc = np.zeros((n_cycles, len(pr)), dtype=np.int64)
        u = np.zeros_like(psc)
        R = np.zeros_like(psc)
        amp = np.zeros_like(psc)
        start = self.time.cycle_index
        self._kernel.run(n_cycles, ptr, rows, fired, pn, pr, vmem, psc, u, R, amp)
        self.time.cycle_index += n_cycles
        return RunRecord(start, fired, pn, pr, vmem, psc, u, R, amp)

    # ------------------------------------------------------------------
    # state access

    def presyn_state(self, row: int) -> PresynState:
        g = row // GROUP_SIZE
        return PresynState(int(self.u[row]), int(self.R[row]), int(self.v_psc[row]),
                           bool(self.pending[row]), int(self.pgrp[L.PG_PH_U, g]),
                           int(self.pgrp[L.PG_PH_R, g]), int(self.pgrp[L.PG_PH_PSC, g]))

    def neuron_state(self, neuron: int) -> NeuronState:
        return NeuronState(int(self.v_mem[neuron]), bool(self.fired[neuron]),
                           int(self.ngrp[L.NG_PH_M, neuron // GROUP_SIZE]))

    def v_mem_mv(self, neuron: int) -> float:
        return to_mv(int(self.v_mem[neuron]))

    def set_v_mem(self, neuron: int, raw: int) -> None:
        self.v_mem[neuron] = raw

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {
            "u": self.u, "R": self.R, "v_psc": self.v_psc, "pending": self.pending,
            "pgrp": self.pgrp, "ngrp": self.ngrp, "v_mem": self.v_mem,
            "fired": self.fired, "x": self.ram.x, "weff": self.ram.weff,
        }

    def state_hash(self) -> str:
        h = hashlib.sha256()
        h.update(self.time.cycle_index.to_bytes(8, "little"))
        for name, arr in self.state_arrays().items():
            h.update(name.encode())
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


def build_schedule(n_cycles: int, stimulus: Mapping[int, Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    """CSR spike schedule: rows spiking in cycle i are rows[ptr[i]:ptr[i+1]]."""
    cyc_parts, row_parts = [], []
    for row, times in stimulus.items():
        if not 0 <= row < BACKGROUND_ROW:
            raise ConfigError(f"input address must be in 0..126, got {row}")
        t = np.asarray(times, dtype=np.int64)
        t = t[(t >= 0) & (t < n_cycles)]
        cyc_parts.append(t)
        row_parts.append(np.full(len(t), row, dtype=np.int64))
    if cyc_parts:
        cyc = np.concatenate(cyc_parts)
        rows = np.concatenate(row_parts)
        order = np.lexsort((rows, cyc))
        cyc, rows = cyc[order], rows[order]
    else:
        cyc = rows = np.zeros(0, dtype=np.int64)
    ptr = np.zeros(n_cycles + 1, dtype=np.int64)
    np.add.at(ptr, cyc + 1, 1)
    return np.cumsum(ptr), np.ascontiguousarray(rows)


__all__ = ["Engine", "EngineConfig", "RunRecord", "build_schedule", "default_g_w"]
