import random
import threading
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from scnn import protocol as proto
from scnn.engine import Engine, EngineConfig
from scnn.neuron import NeuronParams
from scnn.presynapse import StpParams

DATA = Path(__file__).parent / "data"

GOLDEN = [
    (proto.encode_input_spikes([(5, True)]), "000085000000"),
    (proto.encode_input_spikes([(127, True)] * 4), "0000ffffffff"),
    (proto.encode_config_write(0xA00, 100), "001a64000000"),
    (proto.encode_config_read(0xA00), "002a00000000"),
    (proto.encode_advance(10), "00300a000000"),
    (*proto.emit_output_vector(1 << 3), "000008000000", "000800000000"),
    (*proto.emit_output_vector(1 << 63), "000000000000", "000800000080"),
    (proto.Packet(proto.output_header(proto.OUT_READBACK), 42), "00102a000000"),
]


def _golden_packets():
    out = []
    for entry in GOLDEN:
        n = len(entry) // 2
        out += list(zip(entry[:n], entry[n:]))
    return out


@pytest.mark.parametrize("packet,hexstr", _golden_packets())
def test_golden_bytes(packet, hexstr):
    assert packet.hex() == hexstr


def test_golden_file():
    pkts = proto.read_pkt_file(DATA / "golden.pkt")
    assert [p for p, _ in _golden_packets()] == pkts


def test_spike_payload_layout():
    p = proto.encode_input_spikes([(5, True), (0, False), (0, False), (0, False)])
    assert p.payload == 0x00000085 and p.header == 0
    assert proto.encode_input_spikes([(127, True)] * 4).payload == 0xFFFFFFFF
    ev = proto.decode_packet(proto.encode_input_spikes([(9, False)] * 4))
    assert ev.addresses == []
    with pytest.raises(proto.ProtocolError):
        proto.encode_input_spikes([(128, True)])
    with pytest.raises(proto.ProtocolError):
        proto.encode_input_spikes([(1, True)] * 5)


def test_spike_packing():
    pkts = proto.spike_packets(range(10))
    assert len(pkts) == 3
    addrs = [a for p in pkts for a in proto.decode_packet(p).addresses]
    assert addrs == list(range(10))


def test_unknown_type_carries_header():
    bad = proto.Packet(0xF123, 0)
    with pytest.raises(proto.ProtocolError) as info:
        proto.decode_packet(bad)
    assert info.value.header == 0xF123
    with pytest.raises(proto.ProtocolError):
        proto.decode_output_packet(proto.Packet(0x1F << 11, 0))
    with pytest.raises(proto.ProtocolError):
        proto.decode_output_packet(proto.Packet(0x0001, 0))


def test_config_write_decode():
    assert proto.decode_packet(proto.encode_config_write(0x800, 7)) == proto.ConfigWrite(0x800, 7)
    assert proto.decode_packet(proto.encode_config_read(0x93F)) == proto.ConfigRead(0x93F)
    assert proto.decode_packet(proto.encode_advance(3)) == proto.Advance(3)
    with pytest.raises(proto.ProtocolError):
        proto.encode_config_write(0x1000, 1)


def test_output_vector_framing():
    assert proto.emit_output_vector(0) == []
    lo, hi = proto.emit_output_vector(1 << 3)
    assert (lo.payload, hi.payload) == (0x8, 0)
    lo, hi = proto.emit_output_vector(1 << 63)
    assert (lo.payload, hi.payload) == (0, 0x80000000)
    assert proto.decode_output_packet(lo) == proto.VectorWord(False, 0)
    vecs = [0x1, 0xFFFFFFFFFFFFFFFF, 1 << 40]
    pkts = [p for v in vecs for p in proto.emit_output_vector(v)]
    assert proto.collect_vectors(map(proto.decode_output_packet, pkts)) == vecs
    with pytest.raises(proto.ProtocolError):
        proto.collect_vectors([proto.VectorWord(True, 1)])


slot_st = st.tuples(st.integers(0, 127), st.booleans())


@given(slots=st.lists(slot_st, min_size=4, max_size=4))
def test_spike_round_trip(slots):
    p = proto.encode_input_spikes(slots)
    assert proto.decode_packet(p).slots == tuple(slots)
    assert proto.Packet.from_bytes(p.to_bytes()) == p


@given(header=st.integers(0, 0xFFFF), payload=st.integers(0, 0xFFFFFFFF))
def test_wire_round_trip(header, payload):
    p = proto.Packet(header, payload)
    assert proto.from_stream(proto.to_stream([p])) == [p]


def test_stream_errors():
    with pytest.raises(proto.ProtocolError):
        proto.from_stream(b"\x00" * 7)
    with pytest.raises(proto.ProtocolError):
        proto.Packet.from_bytes(b"\x00" * 5)
    with pytest.raises(proto.ProtocolError):
        proto.Packet(0x10000, 0)


def test_pkt_file_round_trip(tmp_path):
    pkts = [p for p, _ in _golden_packets()]
    f = tmp_path / "x.pkt"
    proto.write_pkt_file(f, pkts)
    assert f.stat().st_size == 6 * len(pkts)
    assert proto.read_pkt_file(f) == pkts


# ----------------------------------------------------------------------
# FIFO


def test_fifo_order_and_overflow():
    f = proto.Fifo(3)
    for i in range(3):
        f.put(i)
    assert f.full
    with pytest.raises(proto.FifoOverflow):
        f.put(3)
    assert [f.get(), f.get()] == [0, 1]
    f.put(4)
    assert f.drain() == [2, 4]
    with pytest.raises(proto.FifoEmpty):
        f.get()
    with pytest.raises(ValueError):
        proto.Fifo(0)


def test_fifo_random_interleavings():
    rng = random.Random(7)
    for _ in range(50):
        f = proto.Fifo(rng.randint(1, 8))
        model, sent, got = [], 0, []
        for _ in range(200):
            if rng.random() < 0.5:
                if len(model) < f.capacity:
                    f.put(sent)
                    model.append(sent)
                    sent += 1
                else:
                    with pytest.raises(proto.FifoOverflow):
                        f.put(-1)
            elif model:
                got.append(f.get())
                assert got[-1] == model.pop(0)
            assert len(f) == len(model)
        assert got == sorted(got) and len(set(got)) == len(got)


def test_fifo_threads():
    f = proto.Fifo(16)
    n = 5000
    received = []

    def consumer():
        while len(received) < n:
            received.append(f.get(timeout=5.0))

    t = threading.Thread(target=consumer)
    t.start()
    i = 0
    while i < n:
        try:
            f.put(i)
            i += 1
        except proto.FifoOverflow:
            pass
    t.join(10)
    assert received == list(range(n))


# ----------------------------------------------------------------------
# configuration space and device


def test_config_space():
    cs = proto.ConfigSpace(Engine())
    cs.write(proto.ADDR_DIVIDER, 100)
    assert cs.read(proto.ADDR_DIVIDER) == 100
    cs.write(proto.presyn_addr(0, "U_code"), 62)
    e = cs.engine
    assert all(e.presyn_params(r).U == 62 / 64 for r in range(16))
    assert e.presyn_params(16).U_code != 62
    cs.write(proto.neuron_addr(3, "tau_m_code"), 0)
    assert e.neuron_params(63).tau_m_code == 0
    for addr in (0xFFF, 0x940, 0x806):
        with pytest.raises(proto.ProtocolError):
            cs.read(addr)
        with pytest.raises(proto.ProtocolError):
            cs.write(addr, 0)
    with pytest.raises(proto.ProtocolError):
        cs.write(proto.ADDR_DIVIDER, 0)
    with pytest.raises(proto.ProtocolError):
        cs.write(proto.presyn_addr(0, "U_code"), 64)


def test_weight_window_pages():
    cs = proto.ConfigSpace(Engine())
    cs.write(0x001, 0x01A5_00F3)
    # word index 1 covers row 0, columns 2 and 3
    assert cs.engine.ram.read_packed(0, 2) == 0x0F3
    assert cs.engine.ram.read_packed(0, 3) == 0x1A5
    assert cs.read(0x001) == 0x01A5_00F3
    cs.write(proto.ADDR_PAGE, 1)
    cs.write(0x7FF, 0x0000_0011)
    assert cs.engine.ram.read_packed(127, 62) == 0x11
    with pytest.raises(proto.ProtocolError):
        cs.write(proto.ADDR_PAGE, 2)
    with pytest.raises(proto.ProtocolError):
        cs.write(0x000, 0x0200)  # reserved bit


def test_probe_and_plasticity_registers():
    cs = proto.ConfigSpace(Engine())
    cs.write(proto.ADDR_PROBE, 5 | 100 << 8)
    assert (cs.engine.probe_neuron, cs.engine.probe_row) == (5, 100)
    assert cs.read(proto.ADDR_PROBE) == 5 | 100 << 8
    cs.write(proto.ADDR_PLASTICITY, 1)
    assert cs.engine.ltp.enabled and cs.read(proto.ADDR_PLASTICITY) == 1
    cs.write(proto.ADDR_BACKGROUND, 90)
    assert cs.read(proto.ADDR_BACKGROUND) == 90


def _firing_engine() -> Engine:
    cfg = EngineConfig(presyn=[StpParams(U_code=63, tau_psc_code=20, gain_code=127)] * 8,
                       neurons=[NeuronParams(thresh_code=66, tau_m_code=0)] * 4, g_w=0.01)
    e = Engine(cfg)
    e.connect(0, 3, 15)
    e.connect(0, 63, 15)
    return e


def test_device_replay_matches_engine():
    stim = list(range(0, 600, 2))
    ref = _firing_engine().run(600, {0: stim}).fired.tolist()
    packets = []
    for c in range(0, 600, 2):
        packets += proto.spike_packets([0]) + [proto.encode_advance(2)]
    dev = proto.Device(_firing_engine())
    outputs = []
    fired = proto.replay(dev, packets, outputs)
    # a spike latched before an advance is processed in its first cycle
    assert fired == ref
    vecs = proto.collect_vectors(map(proto.decode_output_packet, outputs))
    assert vecs == [f for f in ref if f]
    assert len(outputs) == 2 * sum(1 for f in ref if f)


def test_device_readback_and_chunking():
    dev = proto.Device(_firing_engine(), fifo_capacity=8)
    dev.input_fifo.put(proto.encode_config_read(proto.ADDR_DIVIDER))
    dev.input_fifo.put(proto.encode_advance(1))
    dev.step()
    out = dev.output_fifo.drain()
    assert proto.decode_output_packet(out[0]) == proto.Readback(100)
    # an advance longer than the output FIFO can absorb is split up
    for _ in range(4):
        dev.input_fifo.put(proto.spike_packets([0])[0])
    dev.input_fifo.put(proto.encode_advance(50))
    dev.step()
    assert dev.remaining > 0
    while dev.remaining:
        dev.output_fifo.drain()
        dev.step()
    assert dev.engine.cycle_index == 51


def test_device_rejects_row_127():
    dev = proto.Device()
    dev.input_fifo.put(proto.encode_input_spikes([(127, True)]))
    with pytest.raises(proto.ProtocolError):
        dev.step()


def test_replay_overflow():
    dev = proto.Device(fifo_capacity=4)
    with pytest.raises(proto.FifoOverflow):
        proto.replay(dev, proto.spike_packets(range(40)))


def test_loopback_transport():
    dev = proto.Device(_firing_engine())
    link = proto.LoopbackTransport(dev)
    data = proto.to_stream(proto.spike_packets([0]) + [proto.encode_advance(30)])
    link.write(data[:4])
    link.write(data[4:])
    while True:
        dev.step()
        if not dev.remaining:
            break
    pkts = proto.from_stream(link.read())
    assert pkts and len(pkts) % 2 == 0
