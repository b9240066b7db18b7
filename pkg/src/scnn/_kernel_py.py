"""Pure-Python (numpy) matrix-cycle kernel.

Bit-identical to the compiled kernel in ``_kernel.pyx``. Columns share no
state inside a cycle beyond the read-only presynaptic outputs, so the
column loop is vectorized.
"""

from __future__ import annotations

import numpy as np

from ._layout import (
    BG_ROW,
    N_COLS,
    NG_PH_M,
    NG_RESET,
    NG_TAU_M,
    NG_THRESH,
    P_A_UP,
    P_B_DOWN,
    P_DRIFT_DOWN,
    P_DRIFT_UP,
    P_G_RAW,
    P_PLASTIC,
    P_RESID_SHIFT,
    P_THETA_V,
    P_THETA_X,
    P_VBG,
    P_VRAIL,
    P_VSAT,
    PG_ALPHA,
    PG_GAIN,
    PG_PH_PSC,
    PG_PH_R,
    PG_PH_U,
    PG_TAU_PSC,
    PG_TAU_R,
    PG_TAU_U,
    PG_U,
)

ONE = 1 << 30
NAME = "python"


def _decay(v):
    # kappa = 15/16, truncation toward zero
    return np.where(v >= 0, (v * 15) >> 4, -((-v * 15) >> 4))


def _trunc_shift(v, s):
    return np.where(v >= 0, v >> s, -((-v) >> s))


def _events(code, phase, ticks):
    on = code > 0
    safe = np.where(on, code, 1)
    total = phase + ticks
    return np.where(on, total // safe, 0), np.where(on, total % safe, phase)


class CycleKernel:
    def __init__(self, u, R, v_psc, pending, amp, pgrp, ngrp, v_mem, offset, fired,
                 weff, x, ltp, ltd, sign, params):
        self.u, self.R, self.v_psc, self.pending, self.amp = u, R, v_psc, pending, amp
        self.pgrp, self.ngrp = pgrp, ngrp
        self.v_mem, self.offset, self.fired = v_mem, offset, fired
        self.weff, self.x, self.ltp, self.ltd, self.sign = weff, x, ltp, ltd, sign
        self.params = params
        self.unit = np.zeros(128, dtype=np.int64)
        self._bits = np.left_shift(np.uint64(1), np.arange(N_COLS, dtype=np.uint64))

    def run(self, n_cycles, sched_ptr, sched_rows, fired_out,
            probe_neurons, probe_rows, vmem_out, psc_out, u_out, R_out, amp_out):
        for i in range(n_cycles):
            lo, hi = sched_ptr[i], sched_ptr[i + 1]
            if hi > lo:
                self.pending[sched_rows[lo:hi]] = 1
            fired_out[i] = self._cycle()
            if len(probe_neurons):
                vmem_out[i] = self.v_mem[probe_neurons]
            if len(probe_rows):
                psc_out[i] = self.v_psc[probe_rows]
                u_out[i] = self.u[probe_rows]
                R_out[i] = self.R[probe_rows]
                amp_out[i] = self.amp[probe_rows]

    def _cycle(self) -> np.uint64:
        p = self.params
        pg = self.pgrp
        ng = self.ngrp
        u, R, v_psc, amp = self.u, self.R, self.v_psc, self.amp
        self.pending[BG_ROW] = 1
        pend = self.pending[:BG_ROW].astype(bool)

        # (1) presynaptic update for latched spikes
        amp[:] = 0
        if pend.any():
            rows = np.nonzero(pend)[0]
            g = rows >> 4
            u0 = u[rows]
            r0 = R[rows]
            u1 = u0 + ((pg[PG_U, g] * (ONE - u0)) >> 6)
            a = (u1 * r0) >> 30
            dep = (pg[PG_ALPHA, g] * u1) >> 6
            R[rows] = r0 - ((r0 * dep) >> 30)
            u[rows] = u1
            jump = (pg[PG_GAIN, g] * a) >> 30
            v_psc[rows] = np.minimum(v_psc[rows] + jump, p[P_VSAT])
            amp[rows] = a

        unit = self.unit
        unit[:BG_ROW] = (p[P_G_RAW] * v_psc[:BG_ROW]) >> 32
        unit[BG_ROW] = _trunc_shift(np.int64(p[P_G_RAW] * p[P_VBG]), 32)

        # (2) column slots, all 64 at once
        em, ng[NG_PH_M] = _events(ng[NG_TAU_M], ng[NG_PH_M], 8)
        em = np.repeat(em, 16)
        v = self.v_mem + self.weff @ unit + self.offset
        v = np.clip(v, -p[P_VRAIL], p[P_VRAIL])
        for e in range(int(em.max())):
            v = np.where(em > e, _decay(v), v)
        if p[P_RESID_SHIFT]:
            v = v - _trunc_shift(v, p[P_RESID_SHIFT])
        pre = v
        thresh = np.repeat(ng[NG_THRESH], 16)
        reset = np.repeat(ng[NG_RESET], 16)
        fired = pre > thresh
        self.v_mem[:] = np.where(fired, reset, pre)
        self.fired[:] = fired

        if p[P_PLASTIC]:
            self._plasticity(pend, pre)

        # (3) presynaptic decays
        eu, pg[PG_PH_U] = _events(pg[PG_TAU_U], pg[PG_PH_U], 1)
        er, pg[PG_PH_R] = _events(pg[PG_TAU_R], pg[PG_PH_R], 1)
        ep, pg[PG_PH_PSC] = _events(pg[PG_TAU_PSC], pg[PG_PH_PSC], 8)
        for events, arr, toward_one in ((eu, u, False), (er, R, True), (ep, v_psc, False)):
            n = np.repeat(events, 16)[:BG_ROW]
            for e in range(int(n.max())):
                m = n > e
                if toward_one:
                    arr[:BG_ROW] = np.where(m, ONE - ((ONE - arr[:BG_ROW]) * 15 >> 4), arr[:BG_ROW])
                else:
                    arr[:BG_ROW] = np.where(m, (arr[:BG_ROW] * 15) >> 4, arr[:BG_ROW])

        # (4) clear the input latch
        self.pending[:BG_ROW] = 0
        return np.bitwise_or.reduce(np.where(fired, self._bits, np.uint64(0)))

    def _plasticity(self, pend, pre):
        p = self.params
        x = self.x[:, :BG_ROW]
        up = (pre > p[P_THETA_V])[:, None]
        stepped = np.where(up, np.minimum(x + p[P_A_UP], ONE), np.maximum(x - p[P_B_DOWN], 0))
        x = np.where(pend[None, :], stepped, x)
        x = np.where(x >= p[P_THETA_X], np.minimum(x + p[P_DRIFT_UP], ONE),
                     np.maximum(x - p[P_DRIFT_DOWN], 0))
        self.x[:, :BG_ROW] = x
        pot = x >= p[P_THETA_X]
        self.weff[:, :BG_ROW] = self.sign[:, :BG_ROW] * np.where(
            pot, self.ltp[:, :BG_ROW], self.ltd[:, :BG_ROW])
