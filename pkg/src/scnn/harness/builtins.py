"""Built-in experiment specs, written in the spec-file grammar."""

from __future__ import annotations

from .specfile import ExperimentSpec, parse_spec

BUILTINS: dict[str, str] = {}


def _register(name: str, description: str, text: str) -> None:
    BUILTINS[name] = f"; {description}\n[experiment]\nversion = 1\nname = {name}\n" + text


_register("tau-fidelity", "single-decay fits for every divider code at both granularities", """
kind = tau-fidelity
[sweep]
tau_m = 1..63
[analysis]
events = 60
""")

# 12 ms at eighth-cycle granularity is code 10. Threshold at the top of the
# DAC range keeps the neuron silent.
_register("fig5-psc-psp", "single PSC and PSP, tau_psc = tau_mem = 12 ms", """
kind = trace
cycles = 200
[engine]
U = 63
tau_psc = 10
tau_m = 10
thresh = 127
[synapses]
0:0 = 15
[stimulus]
row.0 = times 0
[probe]
neurons = 0
rows = 0
bin_ms = 1.24
[analysis]
model = psc psp
""")

# U=0.96, alpha=0.5, tau_u=10 ms, tau_R=490 ms, tau_psc=13 ms, tau_mem=1.2 ms
_register("fig6-depression", "depressing synapse, 10 spikes at 50 Hz, then relaxation with alpha = 0", """
kind = stp
[engine]
U = 61
alpha = 32
tau_u = 1
tau_R = 51
tau_psc = 11
tau_m = 1
[stimulus]
row.0 = regular 50 10
[probe]
rows = 0
[analysis]
relax_spikes = 120
""")

# U=0.13, alpha=0.86, tau_u=490 ms, tau_R=10 ms, tau_psc=13 ms
_register("fig7-facilitation", "facilitating synapse, 10 spikes at 50 Hz", """
kind = stp
[engine]
U = 8
alpha = 55
tau_u = 51
tau_R = 1
tau_psc = 11
[stimulus]
row.0 = regular 50 10
[probe]
rows = 0
[analysis]
tail_cycles = 160
""")

# U=0.29, alpha=0.5, tau_u=300 ms, tau_R=300 ms, tau_psc=10 ms
_register("fig7-combined", "facilitation and depression together, 10 spikes at 50 Hz", """
kind = stp
[engine]
U = 19
alpha = 32
tau_u = 31
tau_R = 31
tau_psc = 8
[stimulus]
row.0 = regular 50 10
[probe]
rows = 0
[analysis]
tail_cycles = 160
""")

# Leak off, five synapses in parallel; the curve bends over once V_psc saturates.
_register("fig9-transfer", "transfer function, 5 parallel synapses, tau_mem infinite", """
kind = transfer
[engine]
U = 63
tau_psc = 30
gain = 70
g_w = 0.001
tau_m = 0
[sweep]
period = 1..20 22..60:2 65..400:15
weight = 15
inputs = 0..4
duration_ms = 10000
window = 50 150
""")

# Reset at 0.8 of threshold keeps the 50-150 Hz fit window in the near-linear
# part of the leaky transfer curve.
_register("fig10-onset", "onset frequency against tau_mem, 5 parallel synapses", """
kind = transfer
[engine]
U = 63
tau_psc = 30
gain = 70
g_w = 0.0256
thresh = 89
reset = 84
[sweep]
period = 1..59 60..400:4
weight = 1
tau_m = 6 13 28 62
inputs = 0..4
duration_ms = 10000
window = 50 150
""")

# Integrate-and-fire mode; background row 127 adds a constant drive. Raising
# background_code reproduces the high intrinsic rate regime.
_register("fig11-weight-sweep", "transfer function for weights 0..15 on one synapse, tau_mem infinite", """
kind = transfer
[engine]
U = 63
tau_psc = 30
gain = 70
g_w = 0.006
tau_m = 0
background_code = 64
[sweep]
period = 0 16..400:3
weight = 0..15
inputs = 0
duration_ms = 10000
window = 0 100
window_axis = input
[analysis]
background_weight = 15
""")


def builtin_names() -> list[str]:
    return sorted(BUILTINS)


def builtin_description(name: str) -> str:
    return BUILTINS[name].splitlines()[0].lstrip("; ")


def builtin_spec(name: str) -> ExperimentSpec:
    try:
        text = BUILTINS[name]
    except KeyError:
        raise KeyError(f"unknown experiment {name!r}; try one of {', '.join(builtin_names())}") from None
    return parse_spec(text)
