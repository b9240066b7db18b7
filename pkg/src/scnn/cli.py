"""Command line entry point: ``scnn <command> ...``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import protocol as proto
from .harness import analysis as an
from .harness.builtins import builtin_description, builtin_names, builtin_spec
from .harness.csvio import read_table
from .harness.experiments import run_experiment
from .harness.specfile import load_spec
from .sc_core import CYCLE_MS_REALTIME, ConfigError


def _cmd_run(args) -> int:
    spec = load_spec(args.spec)
    run_experiment(spec, args.out, backend=args.backend, verbose=True)
    return 0


def _cmd_experiment(args) -> int:
    try:
        spec = builtin_spec(args.name)
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return 2
    run_experiment(spec, args.out, backend=args.backend, verbose=True)
    return 0


def _cmd_list(args) -> int:
    for name in builtin_names():
        print(f"{name:22s} {builtin_description(name)}")
    return 0


def _columns(table, x, y):
    xs = table.column(x or table.header[0])
    ys = table.column(y or table.header[1])
    return [float(v) for v in xs], [float(v) for v in ys]


def _cmd_fit(args) -> int:
    table = read_table(args.csv)
    xs, ys = _columns(table, args.x, args.y)
    if args.kind == "exp":
        scale = 1.0 if args.x_unit == "ms" else CYCLE_MS_REALTIME
        tr = an.Trace([v * scale / CYCLE_MS_REALTIME for v in xs], ys)
        amp, tau = an.fit_exponential(tr)
        print(f"amplitude = {amp:.6g}")
        print(f"tau_ms = {tau:.6g}")
    else:
        pts = [an.RatePoint(a, b) for a, b in zip(xs, ys)]
        window = (args.window[0], args.window[1])
        fit = an.fit_linear_window(pts, window, args.axis)
        print(f"slope = {fit.slope:.6g}")
        print(f"intercept = {fit.intercept:.6g}")
        print(f"r2 = {an.r_squared(pts, fit, window, args.axis):.6g}")
        if fit.slope:
            print(f"f_on_hz = {-fit.intercept / fit.slope:.6g}")
    return 0


def _describe(p: proto.Packet) -> str:
    try:
        ev = proto.decode_packet(p)
    except proto.ProtocolError as exc:
        return f"{p.hex()}  error: {exc}"
    if isinstance(ev, proto.SpikeEvent):
        body = "spikes " + (" ".join(map(str, ev.addresses)) or "(none)")
    elif isinstance(ev, proto.ConfigWrite):
        body = f"config-write {ev.addr:#05x} = {ev.value:#x}"
    elif isinstance(ev, proto.ConfigRead):
        body = f"config-read {ev.addr:#05x}"
    else:
        body = f"advance {ev.cycles}"
    return f"{p.hex()}  {body}"


def _read_packets(src: str) -> list[proto.Packet]:
    path = Path(src)
    if path.exists():
        return proto.read_pkt_file(path)
    try:
        data = bytes.fromhex(src.replace(" ", ""))
    except ValueError:
        raise ConfigError(f"{src!r} is neither a file nor hex bytes") from None
    return proto.from_stream(data)


def _cmd_codec(args) -> int:
    if args.action == "decode":
        for p in _read_packets(args.data):
            print(_describe(p))
        return 0
    # encode: tokens like "spike 1 5 9", "write 0xA00 100", "read 0xA00", "advance 10"
    words = args.data.split()
    if not words:
        raise ConfigError("nothing to encode")
    kind, vals = words[0], [int(w, 0) for w in words[1:]]
    if kind == "spike":
        packets = proto.spike_packets(vals)
    elif kind == "write" and len(vals) == 2:
        packets = [proto.encode_config_write(*vals)]
    elif kind == "read" and len(vals) == 1:
        packets = [proto.encode_config_read(vals[0])]
    elif kind == "advance" and len(vals) == 1:
        packets = [proto.encode_advance(vals[0])]
    else:
        raise ConfigError(f"cannot encode {args.data!r}")
    if args.out:
        proto.write_pkt_file(args.out, packets)
    for p in packets:
        print(p.hex())
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="scnn", description="Switched-capacitor neuromorphic system emulator")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment spec file")
    p.add_argument("spec")
    p.add_argument("--out", default=None, help="directory for CSV/SVG/summary output")
    p.add_argument("--backend", choices=("python", "cython"), default=None)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("experiment", help="run a built-in experiment")
    p.add_argument("name")
    p.add_argument("--out", default=None)
    p.add_argument("--backend", choices=("python", "cython"), default=None)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("list-experiments", help="list built-in experiments")
    p.set_defaults(func=_cmd_list)

    p = sub.add_parser("fit", help="fit a CSV trace or transfer curve")
    p.add_argument("kind", choices=("exp", "linear"))
    p.add_argument("csv")
    p.add_argument("--x", default=None, help="x column (default: first)")
    p.add_argument("--y", default=None, help="y column (default: second)")
    p.add_argument("--x-unit", choices=("ms", "cycles"), default="ms", help="time unit for exp fits")
    p.add_argument("--window", type=float, nargs=2, default=(50.0, 150.0))
    p.add_argument("--axis", choices=("input", "output"), default="output")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("codec", help="encode or decode packets")
    p.add_argument("action", choices=("encode", "decode"))
    p.add_argument("data", help="decode: hex bytes or .pkt file; encode: 'spike 1 2', 'write ADDR VAL', "
                                "'read ADDR', 'advance N'")
    p.add_argument("--out", default=None, help="write encoded packets to a .pkt file")
    p.set_defaults(func=_cmd_codec)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"scnn: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
