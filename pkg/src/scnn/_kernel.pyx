# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled matrix-cycle kernel.

Same integer semantics as ``_kernel_py``; the two are checked against each
other bit for bit.
"""

from libc.stdint cimport int64_t, uint64_t

from . import _layout as L

NAME = "cython"

cdef int64_t ONE = 1 << 30

cdef Py_ssize_t PG_U = L.PG_U, PG_ALPHA = L.PG_ALPHA, PG_TAU_U = L.PG_TAU_U
cdef Py_ssize_t PG_TAU_R = L.PG_TAU_R, PG_TAU_PSC = L.PG_TAU_PSC, PG_GAIN = L.PG_GAIN
cdef Py_ssize_t PG_PH_U = L.PG_PH_U, PG_PH_R = L.PG_PH_R, PG_PH_PSC = L.PG_PH_PSC
cdef Py_ssize_t NG_THRESH = L.NG_THRESH, NG_RESET = L.NG_RESET
cdef Py_ssize_t NG_TAU_M = L.NG_TAU_M, NG_PH_M = L.NG_PH_M
cdef Py_ssize_t P_G_RAW = L.P_G_RAW, P_VBG = L.P_VBG, P_VSAT = L.P_VSAT, P_VRAIL = L.P_VRAIL
cdef Py_ssize_t P_PLASTIC = L.P_PLASTIC, P_THETA_V = L.P_THETA_V, P_A_UP = L.P_A_UP
cdef Py_ssize_t P_B_DOWN = L.P_B_DOWN, P_THETA_X = L.P_THETA_X, P_DRIFT_UP = L.P_DRIFT_UP
cdef Py_ssize_t P_DRIFT_DOWN = L.P_DRIFT_DOWN, P_RESID_SHIFT = L.P_RESID_SHIFT


cdef inline int64_t decay(int64_t v) nogil:
    if v >= 0:
        return (v * 15) >> 4
    return -((-v * 15) >> 4)


cdef inline int64_t trunc_shift(int64_t v, int s) nogil:
    if v >= 0:
        return v >> s
    return -((-v) >> s)


cdef inline int64_t events(int64_t code, int64_t *phase, int64_t ticks) nogil:
    cdef int64_t total
    if code == 0:
        return 0
    total = phase[0] + ticks
    phase[0] = total % code
    return total // code


cdef class CycleKernel:
    cdef int64_t[::1] u, R, v_psc, pending, amp, v_mem, offset, fired, params
    cdef int64_t[:, ::1] pgrp, ngrp, weff, x, ltp, ltd, sign
    cdef int64_t unit[128]

    def __init__(self, u, R, v_psc, pending, amp, pgrp, ngrp, v_mem, offset, fired,
                 weff, x, ltp, ltd, sign, params):
        self.u = u
        self.R = R
        self.v_psc = v_psc
        self.pending = pending
        self.amp = amp
        self.pgrp = pgrp
        self.ngrp = ngrp
        self.v_mem = v_mem
        self.offset = offset
        self.fired = fired
        self.weff = weff
        self.x = x
        self.ltp = ltp
        self.ltd = ltd
        self.sign = sign
        self.params = params

    def run(self, Py_ssize_t n_cycles, int64_t[::1] sched_ptr, int64_t[::1] sched_rows,
            uint64_t[::1] fired_out, int64_t[::1] probe_neurons, int64_t[::1] probe_rows,
            int64_t[:, ::1] vmem_out, int64_t[:, ::1] psc_out, int64_t[:, ::1] u_out,
            int64_t[:, ::1] R_out, int64_t[:, ::1] amp_out):
        cdef Py_ssize_t i, j, k
        cdef Py_ssize_t nk = probe_neurons.shape[0]
        cdef Py_ssize_t nm = probe_rows.shape[0]
        with nogil:
            for i in range(n_cycles):
                for j in range(sched_ptr[i], sched_ptr[i + 1]):
                    self.pending[sched_rows[j]] = 1
                fired_out[i] = self._cycle()
                for k in range(nk):
                    vmem_out[i, k] = self.v_mem[probe_neurons[k]]
                for k in range(nm):
                    psc_out[i, k] = self.v_psc[probe_rows[k]]
                    u_out[i, k] = self.u[probe_rows[k]]
                    R_out[i, k] = self.R[probe_rows[k]]
                    amp_out[i, k] = self.amp[probe_rows[k]]

    cdef uint64_t _cycle(self) nogil:
        cdef Py_ssize_t r, c, g, e
        cdef int64_t u1, a, dep, jump, v, q, pre, xv, n_ev
        cdef int64_t em[4]
        cdef int64_t eu[8]
        cdef int64_t er[8]
        cdef int64_t ep[8]
        cdef uint64_t bits = 0
        cdef int64_t g_raw = self.params[P_G_RAW]
        cdef int64_t vsat = self.params[P_VSAT]
        cdef int64_t vrail = self.params[P_VRAIL]
        cdef int resid = <int>self.params[P_RESID_SHIFT]
        cdef bint plastic = self.params[P_PLASTIC] != 0
        cdef int64_t theta_v = self.params[P_THETA_V]
        cdef int64_t a_up = self.params[P_A_UP]
        cdef int64_t b_down = self.params[P_B_DOWN]
        cdef int64_t theta_x = self.params[P_THETA_X]
        cdef int64_t d_up = self.params[P_DRIFT_UP]
        cdef int64_t d_down = self.params[P_DRIFT_DOWN]
        cdef int64_t *wrow
        cdef int64_t *xrow

        self.pending[127] = 1

        # (1) presynaptic update for latched spikes
        for r in range(127):
            self.amp[r] = 0
            if self.pending[r]:
                g = r >> 4
                u1 = self.u[r] + ((self.pgrp[PG_U, g] * (ONE - self.u[r])) >> 6)
                a = (u1 * self.R[r]) >> 30
                dep = (self.pgrp[PG_ALPHA, g] * u1) >> 6
                self.R[r] = self.R[r] - ((self.R[r] * dep) >> 30)
                self.u[r] = u1
                jump = (self.pgrp[PG_GAIN, g] * a) >> 30
                v = self.v_psc[r] + jump
                if v > vsat:
                    v = vsat
                self.v_psc[r] = v
                self.amp[r] = a
        for r in range(127):
            self.unit[r] = (g_raw * self.v_psc[r]) >> 32
        self.unit[127] = trunc_shift(g_raw * self.params[P_VBG], 32)

        # (2) column slots
        for g in range(4):
            em[g] = events(self.ngrp[NG_TAU_M, g], &self.ngrp[NG_PH_M, g], 8)
        for c in range(64):
            wrow = &self.weff[c, 0]
            q = self.offset[c]
            for r in range(128):
                q += wrow[r] * self.unit[r]
            v = self.v_mem[c] + q
            if v > vrail:
                v = vrail
            elif v < -vrail:
                v = -vrail
            g = c >> 4
            for e in range(em[g]):
                v = decay(v)
            if resid:
                v = v - trunc_shift(v, resid)
            pre = v
            if pre > self.ngrp[NG_THRESH, g]:
                self.fired[c] = 1
                bits |= (<uint64_t>1) << c
                self.v_mem[c] = self.ngrp[NG_RESET, g]
            else:
                self.fired[c] = 0
                self.v_mem[c] = pre
            if plastic:
                xrow = &self.x[c, 0]
                for r in range(127):
                    xv = xrow[r]
                    if self.pending[r]:
                        if pre > theta_v:
                            xv = xv + a_up
                            if xv > ONE:
                                xv = ONE
                        else:
                            xv = xv - b_down
                            if xv < 0:
                                xv = 0
                    if xv >= theta_x:
                        xv = xv + d_up
                        if xv > ONE:
                            xv = ONE
                    else:
                        xv = xv - d_down
                        if xv < 0:
                            xv = 0
                    xrow[r] = xv
                    if xv >= theta_x:
                        wrow[r] = self.sign[c, r] * self.ltp[c, r]
                    else:
                        wrow[r] = self.sign[c, r] * self.ltd[c, r]

        # (3) presynaptic decays
        for g in range(8):
            eu[g] = events(self.pgrp[PG_TAU_U, g], &self.pgrp[PG_PH_U, g], 1)
            er[g] = events(self.pgrp[PG_TAU_R, g], &self.pgrp[PG_PH_R, g], 1)
            ep[g] = events(self.pgrp[PG_TAU_PSC, g], &self.pgrp[PG_PH_PSC, g], 8)
        for r in range(127):
            g = r >> 4
            for e in range(eu[g]):
                self.u[r] = (self.u[r] * 15) >> 4
            for e in range(er[g]):
                self.R[r] = ONE - (((ONE - self.R[r]) * 15) >> 4)
            for e in range(ep[g]):
                self.v_psc[r] = (self.v_psc[r] * 15) >> 4

        # (4) clear the input latch
        for r in range(127):
            self.pending[r] = 0
        return bits
