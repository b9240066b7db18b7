"""Experiment spec files.

Grammar (version 1), INI style with ``=`` as the only delimiter::

    [experiment]
    version = 1
    name = my-run
    kind = trace | stp | transfer | tau-fidelity
    seed = 1            ; overridden by $SCNN_SEED
    cycles = 200

    [engine]
    clock_divider = 100
    g_w = 0.0066
    background_code = 64
    U = 32              ; presynaptic codes, applied to all 8 groups
    alpha = 0
    tau_u = 0
    tau_R = 0
    tau_psc = 10
    gain = 89
    thresh = 89         ; neuron codes, applied to all 4 groups
    reset = 63
    tau_m = 10
    presyn.3.U = 12     ; per-group override
    neuron.1.tau_m = 0
    plasticity = false
    ltp.theta_v_mv = 50

    [synapses]
    0:5 = 15            ; row:col = weight, negative for inhibitory
    bg:5 = 4            ; background row 127 to column 5

    [stimulus]
    row.0 = regular 50 10 [start]
    row.1 = poisson 20 1000
    row.2 = times 0 32 64

    [probe]
    neurons = 0 1
    rows = 0
    bin_ms = 0.62

    [sweep]             ; transfer experiments
    period = 16..400:3  ; input periods in cycles (or rate = Hz list)
    weight = 1..15
    tau_m = 6 9 14
    inputs = 0..4       ; rows driven in parallel
    duration_ms = 10000
    window = 50 150
    window_axis = output

    [analysis]          ; free-form keys read by the experiment kind
    model = psc

Integer lists accept ``a..b`` and ``a..b:step`` ranges (inclusive).
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..engine import EngineConfig, default_g_w
from ..neuron import NeuronParams
from ..plasticity import LtpParams
from ..presynapse import StpParams
from ..sc_core import NEURON_GROUPS, PRESYN_GROUPS, ConfigError

SPEC_VERSION = 1
KINDS = ("trace", "stp", "transfer", "tau-fidelity")

_PRESYN_KEYS = {"u": "U_code", "alpha": "alpha_code", "tau_u": "tau_u_code", "tau_r": "tau_R_code",
                "tau_psc": "tau_psc_code", "gain": "gain_code"}
_NEURON_KEYS = {"thresh": "thresh_code", "reset": "reset_code", "tau_m": "tau_m_code"}


@dataclass(frozen=True)
class StimulusPlan:
    kind: str
    rate_hz: float = 0.0
    count: int = 0
    start: int = 0
    duration_ms: float = 0.0
    times: tuple[int, ...] = ()

    def describe(self) -> str:
        if self.kind == "regular":
            return f"regular {self.rate_hz:g} {self.count} {self.start}"
        if self.kind == "poisson":
            return f"poisson {self.rate_hz:g} {self.duration_ms:g}"
        return "times " + " ".join(map(str, self.times))


@dataclass
class ExperimentSpec:
    name: str
    kind: str
    engine: EngineConfig = field(default_factory=EngineConfig)
    synapses: list[tuple[int, int, int, bool]] = field(default_factory=list)
    background: list[tuple[int, int]] = field(default_factory=list)
    stimulus: dict[int, StimulusPlan] = field(default_factory=dict)
    cycles: int = 0
    probe_neurons: tuple[int, ...] = ()
    probe_rows: tuple[int, ...] = ()
    bin_ms: float = 0.0
    sweep: dict[str, object] = field(default_factory=dict)
    analysis: dict[str, str] = field(default_factory=dict)
    seed: int = 0
    version: int = SPEC_VERSION

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if self.version != SPEC_VERSION:
            raise ConfigError(f"unsupported spec version {self.version}")
        if self.cycles < 0:
            raise ConfigError("cycles must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        for row, col, w, _ in self.synapses:
            if not (0 <= row < 127 and 0 <= col < 64 and 0 <= w <= 15):
                raise ConfigError(f"bad synapse {row}:{col} = {w}")
        for col, w in self.background:
            if not (0 <= col < 64 and 0 <= w <= 15):
                raise ConfigError(f"bad background synapse {col} = {w}")
        for row in self.stimulus:
            if not 0 <= row < 127:
                raise ConfigError(f"stimulus row must be in 0..126, got {row}")
        for n in self.probe_neurons:
            if not 0 <= n < 64:
                raise ConfigError(f"probe neuron {n} out of range")
        for r in self.probe_rows:
            if not 0 <= r < 128:
                raise ConfigError(f"probe row {r} out of range")

    def with_seed_override(self) -> "ExperimentSpec":
        env = os.environ.get("SCNN_SEED")
        if env is None or env == "":
            return self
        try:
            seed = int(env, 0)
        except ValueError:
            raise ConfigError(f"SCNN_SEED must be an integer, got {env!r}") from None
        return replace(self, seed=seed)


def parse_int_list(text: str) -> list[int]:
    out: list[int] = []
    for tok in text.replace(",", " ").split():
        if ".." in tok:
            rng, _, step = tok.partition(":")
            a, b = rng.split("..")
            out.extend(range(int(a), int(b) + 1, int(step) if step else 1))
        else:
            out.append(int(tok, 0))
    return out


def parse_float_list(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def parse_stimulus(text: str) -> StimulusPlan:
    parts = text.split()
    if not parts:
        raise ConfigError("empty stimulus line")
    kind, args = parts[0].lower(), parts[1:]
    try:
        if kind == "regular":
            if len(args) not in (2, 3):
                raise ConfigError("regular needs: rate count [start]")
            return StimulusPlan("regular", rate_hz=float(args[0]), count=int(args[1]),
                                start=int(args[2]) if len(args) == 3 else 0)
        if kind == "poisson":
            if len(args) != 2:
                raise ConfigError("poisson needs: rate duration_ms")
            return StimulusPlan("poisson", rate_hz=float(args[0]), duration_ms=float(args[1]))
        if kind == "times":
            times = tuple(parse_int_list(" ".join(args)))
            if any(t < 0 for t in times):
                raise ConfigError("spike times must be non-negative")
            return StimulusPlan("times", times=times)
    except ValueError as exc:
        raise ConfigError(f"bad stimulus {text!r}: {exc}") from None
    raise ConfigError(f"unknown stimulus kind {kind!r}")


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _engine_config(sec) -> EngineConfig:
    presyn_common: dict[str, int] = {}
    neuron_common: dict[str, int] = {}
    presyn_group: dict[int, dict[str, int]] = {}
    neuron_group: dict[int, dict[str, int]] = {}
    ltp: dict[str, object] = {}
    top: dict[str, object] = {}
    for key, value in sec.items():
        k = key.lower()
        parts = k.split(".")
        if len(parts) == 3 and parts[0] in ("presyn", "neuron"):
            g, fld = int(parts[1]), parts[2]
            table, groups, limit = ((_PRESYN_KEYS, presyn_group, PRESYN_GROUPS) if parts[0] == "presyn"
                                    else (_NEURON_KEYS, neuron_group, NEURON_GROUPS))
            if fld not in table or not 0 <= g < limit:
                raise ConfigError(f"unknown engine key {key!r}")
            groups.setdefault(g, {})[table[fld]] = int(value, 0)
        elif len(parts) == 2 and parts[0] == "ltp":
            if parts[1] not in LtpParams.__dataclass_fields__:
                raise ConfigError(f"unknown engine key {key!r}")
            ltp[parts[1]] = float(value)
        elif k in _PRESYN_KEYS:
            presyn_common[_PRESYN_KEYS[k]] = int(value, 0)
        elif k in _NEURON_KEYS:
            neuron_common[_NEURON_KEYS[k]] = int(value, 0)
        elif k in ("clock_divider", "background_code", "residual_leak_shift"):
            top[k] = int(value, 0)
        elif k == "g_w":
            top[k] = float(value)
        elif k == "plasticity":
            ltp["enabled"] = _bool(value)
        else:
            raise ConfigError(f"unknown engine key {key!r}")

    presyn = [StpParams(**{**presyn_common, **presyn_group.get(g, {})}) for g in range(PRESYN_GROUPS)]
    neurons = [NeuronParams(**{**neuron_common, **neuron_group.get(g, {})}) for g in range(NEURON_GROUPS)]
    if "gain_code" in presyn_common and "g_w" not in top:
        top["g_w"] = default_g_w(presyn_common["gain_code"])
    ltp_params = LtpParams(**{k: (bool(v) if k == "enabled" else v) for k, v in ltp.items()})
    return EngineConfig(presyn=presyn, neurons=neurons, ltp=ltp_params, **top)


def _synapses(sec):
    syn, bg = [], []
    for key, value in sec.items():
        src, _, col = key.partition(":")
        w = int(value, 0)
        if src.strip().lower() == "bg":
            bg.append((int(col), w))
        else:
            syn.append((int(src), int(col), abs(w), w < 0))
    return syn, bg


_SWEEP_INT = ("period", "weight", "tau_m", "inputs")
_SWEEP_FLOAT = ("rate", "window")


def parse_spec(text: str) -> ExperimentSpec:
    cp = configparser.ConfigParser(delimiters=("=",), inline_comment_prefixes=(";", "#"),
                                   interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed spec file: {exc}") from None
    if not cp.has_section("experiment"):
        raise ConfigError("spec file needs an [experiment] section")
    known = {"experiment", "engine", "synapses", "stimulus", "probe", "sweep", "analysis"}
    extra = set(cp.sections()) - known
    if extra:
        raise ConfigError(f"unknown section(s): {sorted(extra)}")

    ex = cp["experiment"]
    try:
        engine = _engine_config(cp["engine"]) if cp.has_section("engine") else EngineConfig()
        syn, bg = _synapses(cp["synapses"]) if cp.has_section("synapses") else ([], [])
        stim = {}
        if cp.has_section("stimulus"):
            for key, value in cp["stimulus"].items():
                if not key.startswith("row."):
                    raise ConfigError(f"stimulus keys look like row.N, got {key!r}")
                stim[int(key[4:])] = parse_stimulus(value)
        probe = cp["probe"] if cp.has_section("probe") else {}
        sweep: dict[str, object] = {}
        if cp.has_section("sweep"):
            for key, value in cp["sweep"].items():
                if key in _SWEEP_INT:
                    sweep[key] = parse_int_list(value)
                elif key in _SWEEP_FLOAT:
                    sweep[key] = parse_float_list(value)
                elif key == "duration_ms":
                    sweep[key] = float(value)
                elif key == "window_axis":
                    if value not in ("input", "output"):
                        raise ConfigError("window_axis must be input or output")
                    sweep[key] = value
                else:
                    raise ConfigError(f"unknown sweep key {key!r}")
        analysis = dict(cp["analysis"]) if cp.has_section("analysis") else {}
        return ExperimentSpec(
            name=ex.get("name", "experiment"),
            kind=ex.get("kind", "trace"),
            engine=engine,
            synapses=syn,
            background=bg,
            stimulus=stim,
            cycles=int(ex.get("cycles", "0"), 0),
            probe_neurons=tuple(parse_int_list(probe.get("neurons", ""))),
            probe_rows=tuple(parse_int_list(probe.get("rows", ""))),
            bin_ms=float(probe.get("bin_ms", "0")),
            sweep=sweep,
            analysis=analysis,
            seed=int(ex.get("seed", "0"), 0),
            version=int(ex.get("version", str(SPEC_VERSION))),
        )
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid spec value: {exc}") from None


def load_spec(path: str | Path) -> ExperimentSpec:
    return parse_spec(Path(path).read_text())
