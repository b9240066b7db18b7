"""Synapse RAM, binary-state weight selection and long-term updates.

The long-term rule is a reduced Brader-style synapse: a presynaptic spike
steps the analog state x up when the postsynaptic membrane is above
``theta_v`` and down otherwise, then x drifts toward whichever bound lies
on its side of ``theta_x``. The calcium-gated stop-learning window of the
full model is not implemented.

RAM image format: row-major (row 0..127, column 0..63), one little-endian
16-bit word per synapse: bits 3:0 LTD weight, bits 7:4 LTP weight,
bit 8 sign (1 = inhibitory), bits 15:9 zero.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .sc_core import UNIT_ONE, ConfigError, to_fixed, unit_to_fixed

N_ROWS = 128
N_COLS = 64
BACKGROUND_ROW = 127
WEIGHT_MAX = 15


class ImageError(ValueError):
    pass


@dataclass(frozen=True)
class SynapseWord:
    w_ltp: int = 0
    w_ltd: int = 0
    inhibitory: bool = False
    x_state: float = 0.0

    def __post_init__(self):
        for w in (self.w_ltp, self.w_ltd):
            if not isinstance(w, (int, np.integer)) or not 0 <= w <= WEIGHT_MAX:
                raise ConfigError(f"weights are 4-bit, got {w!r}")
        if not 0.0 <= self.x_state <= 1.0:
            raise ConfigError(f"x_state must lie in [0, 1], got {self.x_state}")

    @property
    def sign(self) -> int:
        return -1 if self.inhibitory else 1

    @classmethod
    def fixed(cls, weight: int, inhibitory: bool = False) -> "SynapseWord":
        """Same weight in both LTP and LTD slots (plasticity-independent)."""
        return cls(weight, weight, inhibitory)

    def pack(self) -> int:
        return (self.w_ltd & 0xF) | ((self.w_ltp & 0xF) << 4) | (int(self.inhibitory) << 8)

    @classmethod
    def unpack(cls, word: int, x_state: float = 0.0) -> "SynapseWord":
        if word >> 9:
            raise ImageError(f"reserved bits set in synapse word 0x{word:04x}")
        return cls(w_ltp=(word >> 4) & 0xF, w_ltd=word & 0xF,
                   inhibitory=bool(word >> 8 & 1), x_state=x_state)


@dataclass(frozen=True)
class LtpParams:
    theta_v_mv: float = 50.0
    a_up: float = 0.1
    b_down: float = 0.1
    theta_x: float = 0.5
    drift_up: float = 0.0
    drift_down: float = 0.0
    enabled: bool = False

    def __post_init__(self):
        for name in ("a_up", "b_down", "theta_x", "drift_up", "drift_down"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")

    def raw(self) -> dict[str, int]:
        return {
            "theta_v": to_fixed(self.theta_v_mv),
            "a_up": unit_to_fixed(self.a_up),
            "b_down": unit_to_fixed(self.b_down),
            "theta_x": unit_to_fixed(self.theta_x),
            "drift_up": unit_to_fixed(self.drift_up),
            "drift_down": unit_to_fixed(self.drift_down),
        }


def effective_weight(w: SynapseWord, theta_x: float = 0.5) -> tuple[int, int]:
    """(weight, sign) after collapsing x to potentiated/depressed."""
    return (w.w_ltp if w.x_state >= theta_x else w.w_ltd), w.sign


def ltp_step_raw(x: int, presyn_spike: bool, v_mem_post: int, r: dict[str, int]) -> int:
    """Raw-unit update of one synaptic state (x in 2^-30 units)."""
    if presyn_spike:
        if v_mem_post > r["theta_v"]:
            x = min(x + r["a_up"], UNIT_ONE)
        else:
            x = max(x - r["b_down"], 0)
    if x >= r["theta_x"]:
        return min(x + r["drift_up"], UNIT_ONE)
    return max(x - r["drift_down"], 0)


def ltp_update(w: SynapseWord, presyn_spike: bool, v_mem_post_mv: float, p: LtpParams) -> SynapseWord:
    if not p.enabled:
        return w
    x = ltp_step_raw(unit_to_fixed(w.x_state), presyn_spike, to_fixed(v_mem_post_mv), p.raw())
    return replace(w, x_state=x / UNIT_ONE)


def _check_index(row: int, col: int) -> None:
    if not (0 <= row < N_ROWS and 0 <= col < N_COLS):
        raise IndexError(f"synapse ({row}, {col}) outside the 128 x 64 matrix")


class WeightRam:
    """8192 synapse words plus the analog state x of each synapse.

    Arrays are stored column-major (``[col, row]``) because the matrix is
    processed one column at a time. ``weff`` caches the signed effective
    weight and is kept current by every writer, kernels included.
    """

    def __init__(self, theta_x_raw: int = UNIT_ONE // 2):
        shape = (N_COLS, N_ROWS)
        self.ltp = np.zeros(shape, dtype=np.int64)
        self.ltd = np.zeros(shape, dtype=np.int64)
        self.sign = np.ones(shape, dtype=np.int64)
        self.x = np.zeros(shape, dtype=np.int64)
        self.weff = np.zeros(shape, dtype=np.int64)
        self.theta_x_raw = theta_x_raw

    def read(self, row: int, col: int) -> SynapseWord:
        _check_index(row, col)
        return SynapseWord(int(self.ltp[col, row]), int(self.ltd[col, row]),
                           bool(self.sign[col, row] < 0), float(self.x[col, row]) / UNIT_ONE)

    def write(self, row: int, col: int, word: SynapseWord) -> None:
        _check_index(row, col)
        self.ltp[col, row] = word.w_ltp
        self.ltd[col, row] = word.w_ltd
        self.sign[col, row] = word.sign
        self.x[col, row] = unit_to_fixed(word.x_state)
        self._refresh(col, row)

    def write_packed(self, row: int, col: int, packed: int) -> None:
        """Write the digital part of a word, keeping the analog state."""
        _check_index(row, col)
        w = SynapseWord.unpack(packed)
        self.ltp[col, row] = w.w_ltp
        self.ltd[col, row] = w.w_ltd
        self.sign[col, row] = w.sign
        self._refresh(col, row)

    def read_packed(self, row: int, col: int) -> int:
        _check_index(row, col)
        return (int(self.ltd[col, row]) | int(self.ltp[col, row]) << 4
                | int(self.sign[col, row] < 0) << 8)

    def _refresh(self, col, row) -> None:
        pot = self.x[col, row] >= self.theta_x_raw
        self.weff[col, row] = self.sign[col, row] * (self.ltp[col, row] if pot else self.ltd[col, row])

    def refresh_all(self) -> None:
        pot = self.x >= self.theta_x_raw
        self.weff[...] = self.sign * np.where(pot, self.ltp, self.ltd)

    def set_theta_x(self, theta_x_raw: int) -> None:
        self.theta_x_raw = theta_x_raw
        self.refresh_all()

    def packed_image(self) -> np.ndarray:
        """Packed words as a (128, 64) uint16 array, row-major."""
        img = self.ltd | (self.ltp << 4) | ((self.sign < 0).astype(np.int64) << 8)
        return img.T.astype(np.uint16)

    def export_image(self, path: str | Path) -> None:
        Path(path).write_bytes(self.packed_image().astype("<u2").tobytes())

    def import_image(self, path: str | Path) -> None:
        self.load_image_bytes(Path(path).read_bytes())

    def load_image_bytes(self, data: bytes) -> None:
        if len(data) != N_ROWS * N_COLS * 2:
            raise ImageError(f"weight image must be {N_ROWS * N_COLS * 2} bytes, got {len(data)}")
        img = np.frombuffer(data, dtype="<u2").reshape(N_ROWS, N_COLS).astype(np.int64).T
        if np.any(img >> 9):
            raise ImageError("reserved bits set in weight image")
        self.ltd[...] = img & 0xF
        self.ltp[...] = (img >> 4) & 0xF
        self.sign[...] = np.where(img >> 8 & 1, -1, 1)
        self.refresh_all()
