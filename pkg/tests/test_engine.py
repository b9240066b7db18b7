from dataclasses import replace

import numpy as np
import pytest

from scnn.engine import Engine, EngineConfig, default_g_w
from scnn.kernel import BACKENDS, DEFAULT_BACKEND, get_backend
from scnn.neuron import NeuronParams, NeuronState, column_slot
from scnn.plasticity import LtpParams, SynapseWord
from scnn.presynapse import PresynState, StpParams, gain_to_raw, scale_weight, stp_decay_cycle, stp_on_spike, unit_charge
from scnn.sc_core import MV_ONE, ConfigError, UNIT_ONE

SILENT = NeuronParams(thresh_code=127, tau_m_code=0)


def _cfg(**kw) -> EngineConfig:
    return EngineConfig(**kw)


def test_quiescence():
    e = Engine()
    before = {k: v.copy() for k, v in e.state_arrays().items()}
    rec = e.run(50)
    assert not rec.fired.any()
    after = e.state_arrays()
    # leak schedules keep ticking; analog state and weights do not move
    for k in ("u", "v_psc", "v_mem", "x", "weff"):
        assert np.array_equal(before[k], after[k]), k
    assert np.array_equal(before["R"], after["R"])


def test_zero_weights_conserve_rest():
    e = Engine(_cfg(presyn=[StpParams(U_code=63)] * 8))
    stim = {r: np.arange(0, 300, 3) for r in range(127)}
    rec = e.run(300, stim, probe_neurons=range(64))
    assert not rec.v_mem.any() and not rec.fired.any()
    assert e.v_psc[:127].any()


def test_latch_semantics():
    e = Engine(_cfg(presyn=[StpParams(U_code=32, tau_psc_code=0)] * 8))
    e.latch_inputs([5, 5])
    e.step_cycle()
    once = e.v_psc[5]
    e2 = Engine(_cfg(presyn=[StpParams(U_code=32, tau_psc_code=0)] * 8))
    e2.latch_inputs([5])
    e2.step_cycle()
    assert e2.v_psc[5] == once
    e.step_cycle()
    assert e.v_psc[5] == once  # latch cleared after the cycle
    with pytest.raises(ConfigError):
        e.latch_inputs([127])
    with pytest.raises(ConfigError):
        e.run(3, {127: [0]})


def test_latch_all_rows():
    e = Engine(_cfg(presyn=[StpParams(U_code=63)] * 8))
    e.latch_inputs(range(127))
    e.step_cycle()
    assert np.all(e.u[:127] > 0)


@pytest.mark.parametrize("w", [1, 7, 15])
def test_membrane_step_per_cycle(w):
    cfg = _cfg(presyn=[StpParams(U_code=63, tau_psc_code=0)] * 8, neurons=[SILENT] * 4, g_w=0.004)
    e = Engine(cfg)
    e.connect(0, 3, w)
    rec = e.run(20, {0: [0]}, probe_neurons=[3], probe_rows=[0])
    v_psc = int(rec.v_psc[0, 0])
    step = w * unit_charge(v_psc, gain_to_raw(0.004))
    assert step > 0
    assert np.all(np.diff(rec.v_mem[:, 0]) == step)
    assert rec.v_mem[0, 0] == step


def test_realtime_cycle_period():
    e = Engine()
    e.run(10)
    assert e.time.elapsed_ms() == pytest.approx(6.2)
    e.set_speedup(1)
    assert e.time.cycle_period_ms == pytest.approx(0.0062)
    with pytest.raises(ConfigError):
        e.set_speedup(0)


def _busy_engine(backend=None, divider=100, seed=3):
    rng = np.random.default_rng(seed)
    presyn = [StpParams(U_code=int(rng.integers(1, 64)), alpha_code=int(rng.integers(0, 64)),
                        tau_u_code=int(rng.integers(0, 64)), tau_R_code=int(rng.integers(0, 64)),
                        tau_psc_code=int(rng.integers(1, 64)), gain_code=int(rng.integers(64, 128)))
              for _ in range(8)]
    neurons = [NeuronParams(thresh_code=int(rng.integers(66, 120)), reset_code=int(rng.integers(40, 66)),
                            tau_m_code=int(rng.integers(0, 64))) for _ in range(4)]
    e = Engine(EngineConfig(presyn=presyn, neurons=neurons, g_w=0.003, clock_divider=divider), backend)
    for r in range(128):
        for c in range(64):
            e.write_synapse(r, c, SynapseWord(int(rng.integers(0, 16)), int(rng.integers(0, 16)),
                                              bool(rng.random() < 0.2), float(rng.random())))
    stim = {r: np.sort(rng.choice(2000, size=40, replace=False)) for r in range(0, 127, 2)}
    return e, stim


def test_speedup_invariance():
    runs = []
    for d in (1, 10, 100):
        e, stim = _busy_engine(divider=d)
        rec = e.run(2000, stim)
        runs.append((rec.fired.tobytes(), e.state_hash()))
    assert runs[0] == runs[1] == runs[2]
    assert any(np.frombuffer(runs[0][0], dtype=np.uint64))


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernel not built")
@pytest.mark.parametrize("backend", sorted(BACKENDS))
def test_kernel_matches_scalar_reference(backend):
    exc = StpParams(U_code=20, alpha_code=30, tau_u_code=7, tau_R_code=12, tau_psc_code=9, gain_code=110)
    inh = StpParams(U_code=50, alpha_code=5, tau_u_code=3, tau_R_code=40, tau_psc_code=14, gain_code=100)
    npar = NeuronParams(thresh_code=75, reset_code=60, tau_m_code=11)
    g_w = 0.02
    e = Engine(_cfg(presyn=[exc, inh] + [exc] * 6, neurons=[npar] * 4, g_w=g_w), backend=backend)
    e.connect(0, 3, 13)
    e.connect(16, 3, 6, inhibitory=True)
    rng = np.random.default_rng(5)
    n = 800
    stim = {0: np.flatnonzero(rng.random(n) < 0.3), 16: np.flatnonzero(rng.random(n) < 0.1)}
    rec = e.run(n, stim, probe_neurons=[3], probe_rows=[0, 16])

    g_raw = gain_to_raw(g_w)
    rows = {0: (PresynState(), exc, 13, 1), 16: (PresynState(), inh, 6, -1)}
    cell, fired, v_mem, v_psc = NeuronState(), [], [], []
    for c in range(n):
        q = 0
        for r, (s, p, w, sign) in rows.items():
            if c in stim[r]:
                s, _ = stp_on_spike(s, p)
            q += scale_weight(s.v_psc, w, sign, g_raw)
            rows[r] = (s, p, w, sign)
        cell, spiked, _ = column_slot(cell, npar, q)
        fired.append(spiked)
        for r, (s, p, w, sign) in rows.items():
            rows[r] = (stp_decay_cycle(s, p), p, w, sign)
        v_mem.append(cell.v_mem)
        v_psc.append([rows[0][0].v_psc, rows[16][0].v_psc])
    assert 10 < sum(fired) < n // 2
    assert [bool(f >> 3 & 1) for f in rec.fired.tolist()] == fired
    assert rec.v_mem[:, 0].tolist() == v_mem
    assert rec.v_psc.tolist() == v_psc


def test_backends_bit_identical():
    out = []
    for name in ("python", "cython"):
        e, stim = _busy_engine(backend=name)
        e.set_ltp(LtpParams(a_up=0.1, b_down=0.1, drift_up=0.01, drift_down=0.01, enabled=True))
        rec = e.run(1500, stim, probe_neurons=[0, 17, 63], probe_rows=[2, 40])
        out.append((rec.fired.tobytes(), rec.v_mem.tobytes(), rec.v_psc.tobytes(), rec.amp.tobytes(),
                    e.state_hash()))
    assert out[0] == out[1]


def test_backend_selection(monkeypatch):
    assert get_backend("python").NAME == "python"
    assert DEFAULT_BACKEND in BACKENDS
    monkeypatch.setenv("SCNN_BACKEND", "python")
    assert get_backend().NAME == "python"
    assert Engine().backend.NAME == "python"
    with pytest.raises(ValueError):
        get_backend("fortran")


def test_determinism():
    hashes = set()
    for _ in range(2):
        e, stim = _busy_engine()
        e.run(800, stim)
        hashes.add(e.state_hash())
    assert len(hashes) == 1


def test_column_position_and_neighbours_do_not_matter():
    cfg = _cfg(presyn=[StpParams(U_code=40, tau_psc_code=20)] * 8,
               neurons=[NeuronParams(thresh_code=70, reset_code=63, tau_m_code=10)] * 4, g_w=0.01)
    stim = {0: np.arange(0, 1000, 7), 1: np.arange(3, 1000, 11)}
    traces = []
    for col, neighbours in ((2, False), (9, True)):
        e = Engine(cfg)
        e.connect(0, col, 9)
        e.connect(1, col, 4, inhibitory=True)
        if neighbours:
            for c in range(16):
                if c != col:
                    e.connect(0, c, 15)
        rec = e.run(1000, stim, probe_neurons=[col])
        traces.append((rec.v_mem[:, 0].tobytes(), rec.neuron_spike_cycles(col).tolist()))
    assert traces[0] == traces[1]
    assert traces[0][1]


def test_background_drive():
    cfg = _cfg(neurons=[NeuronParams(thresh_code=80, tau_m_code=0)] * 4, g_w=0.001, background_code=100)
    e = Engine(cfg)
    e.configure_background(5, 15)
    e.configure_background(6, 0)
    rec = e.run(400)
    counts = rec.spike_counts()
    assert counts[5] > 0 and counts[6] == 0
    with pytest.raises(ConfigError):
        e.configure_background(64, 1)
    with pytest.raises(ConfigError):
        e.configure_background(0, 1, sign=0)


def test_inhibitory_background_lowers_rate():
    cfg = _cfg(presyn=[StpParams(U_code=63, tau_psc_code=30, gain_code=100)] * 8,
               neurons=[NeuronParams(thresh_code=80, tau_m_code=0)] * 4, g_w=0.005, background_code=90)
    stim = {0: np.arange(0, 3000, 4)}
    rates = []
    for sign, w in ((1, 0), (-1, 2), (-1, 6)):
        e = Engine(cfg)
        e.connect(0, 0, 10)
        e.configure_background(0, w, sign)
        rates.append(int(e.run(3000, stim).spike_counts()[0]))
    assert rates[0] > rates[1] > rates[2]


def test_weights_constant_without_plasticity():
    e, stim = _busy_engine()
    before = e.ram.packed_image().copy(), e.ram.x.copy()
    e.run(500, stim)
    assert np.array_equal(e.ram.packed_image(), before[0])
    assert np.array_equal(e.ram.x, before[1])


def test_plasticity_potentiates_and_spares_background_row():
    cfg = _cfg(presyn=[StpParams(U_code=63)] * 8, neurons=[SILENT] * 4, g_w=0.001)
    e = Engine(cfg)
    e.set_ltp(LtpParams(theta_v_mv=50.0, a_up=0.2, b_down=0.2, enabled=True))
    e.write_synapse(0, 0, SynapseWord(15, 1, x_state=0.4))
    e.write_synapse(1, 1, SynapseWord(15, 1, x_state=0.6))
    e.write_synapse(127, 0, SynapseWord(3, 3, x_state=0.4))
    e.set_v_mem(0, 100 * MV_ONE)
    e.run(2, {0: [0], 1: [0]})
    assert e.read_synapse(0, 0).x_state == pytest.approx(0.6, abs=1e-9)
    assert e.ram.weff[0, 0] == 15
    # neuron 1 sits at rest, below theta_v
    assert e.read_synapse(1, 1).x_state == pytest.approx(0.4, abs=1e-9)
    assert e.ram.weff[1, 1] == 1
    assert e.read_synapse(127, 0).x_state == pytest.approx(0.4, abs=1e-9)


def test_default_gain_gives_10mv_step():
    p = StpParams(U_code=63, tau_psc_code=0)
    g = default_g_w(p.gain_code)
    e = Engine(_cfg(presyn=[p] * 8, neurons=[SILENT] * 4, g_w=g))
    e.connect(0, 0, 15)
    e.run(1, {0: [0]})
    # U is 63/64, not 1
    assert e.v_mem_mv(0) == pytest.approx(10.0 * 63 / 64, rel=1e-4)


def test_invalid_config():
    with pytest.raises(ConfigError):
        EngineConfig(presyn=[StpParams()] * 7)
    with pytest.raises(ConfigError):
        EngineConfig(g_w=0.0)
    with pytest.raises(ConfigError):
        Engine().set_presyn_group(8, StpParams())


def test_group_params_resolve():
    e = Engine()
    e.set_presyn_group(2, replace(StpParams(), U_code=62))
    assert all(e.presyn_params(r).U_code == 62 for r in range(32, 48))
    assert e.presyn_params(48).U_code != 62
    assert e.presyn_state(0).R == UNIT_ONE
