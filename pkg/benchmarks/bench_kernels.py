"""Throughput of the numpy and compiled matrix-cycle kernels.

    python3 benchmarks/bench_kernels.py [--cycles N] [--density P]

Runs the same randomly wired, fully driven 128x64 array on each available
backend, checks that both end in the same state and prints cycles/s.
"""

import argparse
import time

import numpy as np

from scnn.engine import Engine, EngineConfig
from scnn.kernel import BACKENDS
from scnn.neuron import NeuronParams
from scnn.plasticity import LtpParams, SynapseWord
from scnn.presynapse import StpParams


def build(backend: str, density: float, plastic: bool, seed: int = 3) -> Engine:
    cfg = EngineConfig(
        presyn=[StpParams(U_code=40, alpha_code=10, tau_u_code=20, tau_R_code=30, tau_psc_code=20)] * 8,
        neurons=[NeuronParams(thresh_code=90, reset_code=63, tau_m_code=10)] * 4,
        g_w=0.0005,
        ltp=LtpParams(enabled=plastic),
    )
    e = Engine(cfg, backend=backend)
    rng = np.random.default_rng(seed)
    for r in range(128):
        for c in range(64):
            if rng.random() < density:
                e.write_synapse(r, c, SynapseWord.fixed(int(rng.integers(1, 16)), bool(rng.random() < 0.2)))
    return e


def bench(backend: str, cycles: int, density: float, plastic: bool) -> tuple[float, str]:
    e = build(backend, density, plastic)
    rng = np.random.default_rng(4)
    stim = {r: np.unique(rng.integers(0, cycles, size=max(1, cycles // 30))) for r in range(127)}
    e.run(50)
    t0 = time.perf_counter()
    e.run(cycles, stim)
    return cycles / (time.perf_counter() - t0), e.state_hash()


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cycles", type=int, default=5000)
    ap.add_argument("--density", type=float, default=1.0)
    ap.add_argument("--plastic", action="store_true", help="enable long-term plasticity")
    args = ap.parse_args(argv)

    rates, hashes = {}, {}
    for name in sorted(BACKENDS):
        rates[name], hashes[name] = bench(name, args.cycles, args.density, args.plastic)
        print(f"{name:8s} {rates[name]:12,.0f} cycles/s  ({rates[name] * 0.62e-3:8.2f} s bio / s)")
    if len(rates) == 2:
        print(f"speed-up {rates['cython'] / rates['python']:.1f}x, "
              f"identical final state: {hashes['cython'] == hashes['python']}")
    else:
        print("compiled kernel not built; only the numpy backend was measured")


if __name__ == "__main__":
    main()
