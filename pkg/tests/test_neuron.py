import pytest
from hypothesis import given, strategies as st

from scnn.neuron import (
    V_RAIL,
    NeuronParams,
    NeuronState,
    column_slot,
    compare_and_fire,
    integrate,
    leak_tick,
)
from scnn.sc_core import MV_ONE, ConfigError, to_fixed


def test_integrate_adds_charge():
    n = NeuronState()
    assert integrate(n, 0) == n
    assert integrate(n, to_fixed(5.0)).v_mem_mv == 5.0
    j = 12345
    assert integrate(n, 5 * j).v_mem == 5 * j


def test_integrate_clamps_to_rail():
    n = NeuronState(v_mem=V_RAIL - 10)
    assert integrate(n, 1000).v_mem == V_RAIL
    assert integrate(NeuronState(v_mem=-V_RAIL), -1).v_mem == -V_RAIL


def test_leak_event_80_to_75():
    p = NeuronParams(tau_m_code=1)
    n = leak_tick(NeuronState(v_mem=to_fixed(80.0)), p)
    assert n.v_mem_mv == 75.0


def test_leak_off_and_rest():
    p = NeuronParams(tau_m_code=0)
    n = NeuronState(v_mem=to_fixed(80.0))
    for _ in range(100):
        n = leak_tick(n, p)
    assert n.v_mem_mv == 80.0
    assert leak_tick(NeuronState(), NeuronParams(tau_m_code=1)).v_mem == 0


def test_threshold_is_strict():
    p = NeuronParams(thresh_code=89, reset_code=63)
    at = NeuronState(v_mem=p.thresh_raw)
    n, spiked = compare_and_fire(at, p)
    assert not spiked and n.v_mem == p.thresh_raw
    n, spiked = compare_and_fire(NeuronState(v_mem=p.thresh_raw + 1), p)
    assert spiked and n.v_mem == p.reset_raw and n.fired_this_cycle


def test_constant_drive_period():
    p = NeuronParams(tau_m_code=0)
    thresh, reset = to_fixed(100.0), 0
    n = NeuronState()
    spikes = []
    for c in range(105):
        n = integrate(n, to_fixed(5.0))
        n, spiked = compare_and_fire(n, p, thresh, reset)
        if spiked:
            spikes.append(c)
    assert spikes == [20, 41, 62, 83, 104]


def test_column_slot_order():
    # integrate then leak then compare: 90 mV + 12 mV leaks to 95.6 mV, below 100.39
    p = NeuronParams(thresh_code=89, tau_m_code=8)
    n, spiked, pre = column_slot(NeuronState(v_mem=to_fixed(90.0)), p, to_fixed(12.0))
    assert not spiked
    assert pre / MV_ONE == pytest.approx(102.0 * 0.9375, abs=1e-4)


@given(v=st.integers(-V_RAIL, V_RAIL), q=st.integers(-V_RAIL, V_RAIL))
def test_slot_keeps_rails(v, q):
    n, _, pre = column_slot(NeuronState(v_mem=v), NeuronParams(tau_m_code=3), q)
    assert -V_RAIL <= n.v_mem <= V_RAIL
    assert -V_RAIL <= pre <= V_RAIL


def test_params_validation():
    with pytest.raises(ConfigError):
        NeuronParams(tau_m_code=64)
    with pytest.raises(ConfigError):
        NeuronParams(thresh_code=200)
    with pytest.raises(ConfigError):
        NeuronParams(c_leak_ff=4.0)
    with pytest.warns(UserWarning):
        NeuronParams(thresh_code=10)
