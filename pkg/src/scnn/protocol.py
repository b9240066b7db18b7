"""Host interface: packet codec, FIFOs, configuration space, device loop.

Wire format: every packet is 6 bytes, little-endian, header first
(``<HI``). Input headers carry a 4-bit type in bits 15:12 and a 12-bit
address in bits 11:0; output headers carry a 5-bit type in bits 15:11.

Input types: 0x0 spike (four 8-bit slots ``enable << 7 | addr``, slot i in
payload byte i), 0x1 config write, 0x2 config read, 0x3 advance (payload =
number of cycles; used to time-stamp replay files).
Output types: 0x00 spike vector bits 31:0, 0x01 bits 63:32, 0x02 config
readback.

Configuration address map (protocol version 1):

=============  ===========================================================
0x000-0x7FF    weight RAM window; with page P (0xA02), word index
               i = P*2048 + addr covers row i // 32, columns 2(i % 32) and
               2(i % 32)+1 (low / high 16 bits, synapse word layout of
               the RAM image)
0x800-0x8FF    presyn group g = (addr >> 5) & 7, field addr & 0x1F:
               0 U code, 1 alpha code, 2 tau_u code, 3 tau_R code,
               4 tau_PSC code, 5 PSC gain DAC code
0x900-0x93F    neuron group g = (addr >> 4) & 3, field addr & 0xF:
               0 threshold DAC code, 1 reset DAC code, 2 tau_m code
0xA00          clock divider (1..255)
0xA01          probe select: bits 5:0 neuron, bits 14:8 presyn row
0xA02          weight RAM page (0 or 1)
0xA03          background row PSC level, DAC code
0xA04          long-term plasticity enable (bit 0)
=============  ===========================================================
"""

from __future__ import annotations

import struct
import threading
from collections import deque
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator, Union

from .engine import Engine
from .sc_core import ConfigError

PROTOCOL_VERSION = 1
PACKET_SIZE = 6
_STRUCT = struct.Struct("<HI")

IN_SPIKE = 0x0
IN_CONFIG_WRITE = 0x1
IN_CONFIG_READ = 0x2
IN_ADVANCE = 0x3

OUT_VECTOR_LOW = 0x00
OUT_VECTOR_HIGH = 0x01
OUT_READBACK = 0x02

ADDR_DIVIDER = 0xA00
ADDR_PROBE = 0xA01
ADDR_PAGE = 0xA02
ADDR_BACKGROUND = 0xA03
ADDR_PLASTICITY = 0xA04

_PRESYN_FIELDS = ("U_code", "alpha_code", "tau_u_code", "tau_R_code", "tau_psc_code", "gain_code")
_NEURON_FIELDS = ("thresh_code", "reset_code", "tau_m_code")


class ProtocolError(ValueError):
    def __init__(self, message: str, header: int | None = None):
        super().__init__(message)
        self.header = header


class FifoOverflow(RuntimeError):
    pass


class FifoEmpty(RuntimeError):
    pass


@dataclass(frozen=True)
class Packet:
    header: int
    payload: int

    def __post_init__(self):
        if not 0 <= self.header <= 0xFFFF:
            raise ProtocolError(f"header must be 16 bits, got {self.header:#x}")
        if not 0 <= self.payload <= 0xFFFFFFFF:
            raise ProtocolError(f"payload must be 32 bits, got {self.payload:#x}")

    def to_bytes(self) -> bytes:
        return _STRUCT.pack(self.header, self.payload)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Packet":
        if len(data) != PACKET_SIZE:
            raise ProtocolError(f"packet must be {PACKET_SIZE} bytes, got {len(data)}")
        return cls(*_STRUCT.unpack(data))

    def hex(self) -> str:
        return self.to_bytes().hex()


# --------------------------------------------------------------------------
# events


@dataclass(frozen=True)
class SpikeEvent:
    slots: tuple[tuple[int, bool], ...]

    @property
    def addresses(self) -> list[int]:
        return [a for a, en in self.slots if en]


@dataclass(frozen=True)
class ConfigWrite:
    addr: int
    value: int


@dataclass(frozen=True)
class ConfigRead:
    addr: int


@dataclass(frozen=True)
class Advance:
    cycles: int


@dataclass(frozen=True)
class VectorWord:
    high: bool
    bits: int


@dataclass(frozen=True)
class Readback:
    value: int


InputEvent = Union[SpikeEvent, ConfigWrite, ConfigRead, Advance]
OutputEvent = Union[VectorWord, Readback]


def input_header(ptype: int, addr: int = 0) -> int:
    if not 0 <= addr <= 0xFFF:
        raise ProtocolError(f"address must be 12 bits, got {addr:#x}")
    return (ptype & 0xF) << 12 | addr


def output_header(ptype: int) -> int:
    return (ptype & 0x1F) << 11


def encode_input_spikes(slots: Iterable[tuple[int, bool]]) -> Packet:
    slots = list(slots)
    if len(slots) > 4:
        raise ProtocolError("a spike packet carries at most four slots")
    slots += [(0, False)] * (4 - len(slots))
    payload = 0
    for i, (addr, enable) in enumerate(slots):
        if not 0 <= addr <= 0x7F:
            raise ProtocolError(f"spike address must be 7 bits, got {addr}")
        payload |= (int(bool(enable)) << 7 | addr) << (8 * i)
    return Packet(input_header(IN_SPIKE), payload)


def spike_packets(addresses: Iterable[int]) -> list[Packet]:
    """Pack a set of spiking rows into as few spike packets as possible."""
    addrs = list(addresses)
    return [encode_input_spikes([(a, True) for a in addrs[i:i + 4]])
            for i in range(0, len(addrs), 4)]


def encode_config_write(addr: int, value: int) -> Packet:
    return Packet(input_header(IN_CONFIG_WRITE, addr), value)


def encode_config_read(addr: int) -> Packet:
    return Packet(input_header(IN_CONFIG_READ, addr), 0)


def encode_advance(cycles: int) -> Packet:
    return Packet(input_header(IN_ADVANCE), cycles)


def decode_packet(p: Packet) -> InputEvent:
    """Decode a host-to-device packet."""
    ptype, addr = p.header >> 12, p.header & 0xFFF
    if ptype == IN_SPIKE:
        slots = tuple(((p.payload >> (8 * i)) & 0x7F, bool((p.payload >> (8 * i + 7)) & 1))
                      for i in range(4))
        return SpikeEvent(slots)
    if ptype == IN_CONFIG_WRITE:
        return ConfigWrite(addr, p.payload)
    if ptype == IN_CONFIG_READ:
        return ConfigRead(addr)
    if ptype == IN_ADVANCE:
        return Advance(p.payload)
    raise ProtocolError(f"unknown input packet type {ptype:#x}", header=p.header)


def decode_output_packet(p: Packet) -> OutputEvent:
    """Decode a device-to-host packet."""
    if p.header & 0x7FF:
        raise ProtocolError("reserved output header bits set", header=p.header)
    ptype = p.header >> 11
    if ptype in (OUT_VECTOR_LOW, OUT_VECTOR_HIGH):
        return VectorWord(ptype == OUT_VECTOR_HIGH, p.payload)
    if ptype == OUT_READBACK:
        return Readback(p.payload)
    raise ProtocolError(f"unknown output packet type {ptype:#x}", header=p.header)


def emit_output_vector(fired: int) -> list[Packet]:
    """Output packets for one cycle's fired vector: none, or low then high word."""
    if not fired:
        return []
    return [Packet(output_header(OUT_VECTOR_LOW), fired & 0xFFFFFFFF),
            Packet(output_header(OUT_VECTOR_HIGH), (fired >> 32) & 0xFFFFFFFF)]


def collect_vectors(events: Iterable[OutputEvent]) -> list[int]:
    """Reassemble 64-bit fired vectors from decoded output events."""
    out, low = [], None
    for ev in events:
        if isinstance(ev, VectorWord):
            if not ev.high:
                low = ev.bits
            elif low is None:
                raise ProtocolError("spike-vector high word without low word")
            else:
                out.append(low | ev.bits << 32)
                low = None
    return out


def to_stream(packets: Iterable[Packet]) -> bytes:
    return b"".join(p.to_bytes() for p in packets)


def from_stream(data: bytes) -> list[Packet]:
    if len(data) % PACKET_SIZE:
        raise ProtocolError(f"stream length {len(data)} is not a multiple of {PACKET_SIZE}")
    return [Packet(*_STRUCT.unpack_from(data, i)) for i in range(0, len(data), PACKET_SIZE)]


def read_pkt_file(path: str | Path) -> list[Packet]:
    return from_stream(Path(path).read_bytes())


def write_pkt_file(path: str | Path, packets: Iterable[Packet]) -> None:
    Path(path).write_bytes(to_stream(packets))


# --------------------------------------------------------------------------
# FIFO


class Fifo:
    """Bounded FIFO; one producer and one consumer thread may share it."""

    def __init__(self, capacity: int = 256):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._items: deque = deque()
        self._cond = threading.Condition()

    def __len__(self) -> int:
        with self._cond:
            return len(self._items)

    @property
    def full(self) -> bool:
        return len(self) >= self.capacity

    def put(self, item) -> None:
        with self._cond:
            if len(self._items) >= self.capacity:
                raise FifoOverflow(f"FIFO full ({self.capacity} entries)")
            self._items.append(item)
            self._cond.notify()

    def get(self, timeout: float | None = 0.0):
        """Pop the oldest entry; waits up to ``timeout`` s (None: forever)."""
        with self._cond:
            if not self._items and timeout != 0.0:
                self._cond.wait_for(lambda: self._items, timeout)
            if not self._items:
                raise FifoEmpty("FIFO empty")
            return self._items.popleft()

    def drain(self) -> list:
        with self._cond:
            items = list(self._items)
            self._items.clear()
            return items

    def __iter__(self) -> Iterator:
        return iter(self.drain())


# --------------------------------------------------------------------------
# configuration space


class ConfigSpace:
    def __init__(self, engine: Engine):
        self.engine = engine
        self.page = 0

    def write(self, addr: int, value: int) -> None:
        e = self.engine
        if not 0 <= value <= 0xFFFFFFFF:
            raise ProtocolError(f"config value must be 32 bits, got {value:#x}")
        try:
            if addr < 0x800:
                row, col = self._ram_slot(addr)
                e.ram.write_packed(row, col, value & 0xFFFF)
                e.ram.write_packed(row, col + 1, value >> 16)
            elif addr < 0x900:
                g, name = self._presyn_field(addr)
                e.set_presyn_group(g, replace(e.presyn_params(g * 16), **{name: value}))
            elif addr < 0x940:
                g, name = self._neuron_field(addr)
                e.set_neuron_group(g, replace(e.neuron_params(g * 16), **{name: value}))
            elif addr == ADDR_DIVIDER:
                e.set_speedup(value)
            elif addr == ADDR_PROBE:
                neuron, row = value & 0x3F, (value >> 8) & 0x7F
                e.probe_neuron, e.probe_row = neuron, row
            elif addr == ADDR_PAGE:
                if value not in (0, 1):
                    raise ConfigError("weight page must be 0 or 1")
                self.page = value
            elif addr == ADDR_BACKGROUND:
                e.set_background_level(value)
            elif addr == ADDR_PLASTICITY:
                e.set_ltp(replace(e.ltp, enabled=bool(value & 1)))
            else:
                raise ProtocolError(f"unmapped config address {addr:#05x}")
        except (ConfigError, ValueError) as exc:
            if isinstance(exc, ProtocolError):
                raise
            raise ProtocolError(f"bad value {value:#x} for {addr:#05x}: {exc}") from exc

    def read(self, addr: int) -> int:
        e = self.engine
        if addr < 0x800:
            row, col = self._ram_slot(addr)
            return e.ram.read_packed(row, col) | e.ram.read_packed(row, col + 1) << 16
        if addr < 0x900:
            g, name = self._presyn_field(addr)
            return getattr(e.presyn_params(g * 16), name)
        if addr < 0x940:
            g, name = self._neuron_field(addr)
            return getattr(e.neuron_params(g * 16), name)
        if addr == ADDR_DIVIDER:
            return e.time.clock_divider
        if addr == ADDR_PROBE:
            return e.probe_neuron | e.probe_row << 8
        if addr == ADDR_PAGE:
            return self.page
        if addr == ADDR_BACKGROUND:
            return e.background_code
        if addr == ADDR_PLASTICITY:
            return int(e.ltp.enabled)
        raise ProtocolError(f"unmapped config address {addr:#05x}")

    def _ram_slot(self, addr: int) -> tuple[int, int]:
        if not 0 <= addr < 0x800:
            raise ProtocolError(f"unmapped config address {addr:#05x}")
        idx = self.page * 0x800 + addr
        return idx // 32, 2 * (idx % 32)

    @staticmethod
    def _presyn_field(addr: int) -> tuple[int, str]:
        g, f = (addr >> 5) & 7, addr & 0x1F
        if f >= len(_PRESYN_FIELDS):
            raise ProtocolError(f"unmapped config address {addr:#05x}")
        return g, _PRESYN_FIELDS[f]

    @staticmethod
    def _neuron_field(addr: int) -> tuple[int, str]:
        g, f = (addr >> 4) & 3, addr & 0xF
        if f >= len(_NEURON_FIELDS):
            raise ProtocolError(f"unmapped config address {addr:#05x}")
        return g, _NEURON_FIELDS[f]


def presyn_addr(group: int, field: str) -> int:
    return 0x800 + (group << 5) + _PRESYN_FIELDS.index(field)


def neuron_addr(group: int, field: str) -> int:
    return 0x900 + (group << 4) + _NEURON_FIELDS.index(field)


# --------------------------------------------------------------------------
# device


class Device:
    """Engine behind an input and an output FIFO.

    :meth:`step` consumes queued input packets up to and including the first
    advance packet (or all of them), then runs the requested cycles, pushing
    a spike-vector pair to the output FIFO for every cycle with a spike.
    Long advances are run in chunks that fit the free output space; the rest
    is carried over to the next :meth:`step`.
    """

    def __init__(self, engine: Engine | None = None, fifo_capacity: int = 256):
        self.engine = engine or Engine()
        self.config = ConfigSpace(self.engine)
        self.input_fifo = Fifo(fifo_capacity)
        self.output_fifo = Fifo(fifo_capacity)
        self.remaining = 0

    def step(self) -> list[int]:
        if not self.remaining:
            self.remaining = 1
            while True:
                try:
                    packet = self.input_fifo.get()
                except FifoEmpty:
                    break
                ev = decode_packet(packet)
                if isinstance(ev, Advance):
                    self.remaining = max(ev.cycles, 1)
                    break
                self._apply(ev, packet)
        free = self.output_fifo.capacity - len(self.output_fifo)
        n = min(self.remaining, max(free // 2, 1))
        rec = self.engine.run(n)
        self.remaining -= n
        fired = [int(f) for f in rec.fired]
        for f in fired:
            for out in emit_output_vector(f):
                self.output_fifo.put(out)
        return fired

    def _apply(self, ev: InputEvent, packet: Packet) -> None:
        if isinstance(ev, SpikeEvent):
            addrs = ev.addresses
            if any(a >= 127 for a in addrs):
                raise ProtocolError("row 127 is not host-addressable", header=packet.header)
            self.engine.latch_inputs(addrs)
        elif isinstance(ev, ConfigWrite):
            self.config.write(ev.addr, ev.value)
        elif isinstance(ev, ConfigRead):
            self.output_fifo.put(Packet(output_header(OUT_READBACK), self.config.read(ev.addr)))


class LoopbackTransport:
    """In-memory byte-stream transport to a :class:`Device`."""

    def __init__(self, device: Device):
        self.device = device
        self._partial = b""

    def write(self, data: bytes) -> None:
        data = self._partial + data
        n = len(data) - len(data) % PACKET_SIZE
        self._partial = data[n:]
        for p in from_stream(data[:n]):
            self.device.input_fifo.put(p)

    def read(self) -> bytes:
        return to_stream(self.device.output_fifo.drain())


def replay(device: Device, packets: Iterable[Packet], outputs: list | None = None) -> list[int]:
    """Feed a packet sequence (e.g. a ``.pkt`` file) through ``device``.

    Advance packets mark cycle boundaries; without any, all packets are
    delivered before a single cycle. More packets between two advances than
    the input FIFO holds raise :class:`FifoOverflow`. Returns the fired vector of every cycle;
    output packets are drained after each step and appended to ``outputs``.
    """
    fired = []
    queue = deque(packets)
    while queue or device.remaining:
        if not device.remaining:
            while queue:
                p = queue.popleft()
                device.input_fifo.put(p)
                if p.header >> 12 == IN_ADVANCE:
                    break
        fired += device.step()
        drained = device.output_fifo.drain()
        if outputs is not None:
            outputs.extend(drained)
    return fired
