import numpy as np
import pytest

from scnn.cli import main
from scnn.harness import builtin_names, builtin_spec, parse_spec, run_experiment
from scnn.harness.experiments import run_transfer
from scnn.sc_core import ConfigError


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_builtin_catalogue():
    names = builtin_names()
    for n in ("fig5-psc-psp", "fig6-depression", "fig7-facilitation", "fig7-combined",
              "fig9-transfer", "fig10-onset", "fig11-weight-sweep", "tau-fidelity"):
        assert n in names
    with pytest.raises(KeyError):
        builtin_spec("fig99")


def test_fig6_parameter_set():
    p = builtin_spec("fig6-depression").engine.presyn[0]
    assert p.U == pytest.approx(0.96, abs=0.01)
    assert p.alpha == 0.5
    assert p.tau_u.tau_ms == pytest.approx(10, rel=0.05)
    assert p.tau_R.tau_ms == pytest.approx(490, rel=0.01)
    assert p.tau_psc.tau_ms == pytest.approx(13, rel=0.05)


def test_fig11_is_integrate_and_fire():
    s = builtin_spec("fig11-weight-sweep")
    assert all(n.tau_m_code == 0 for n in s.engine.neurons)
    assert s.sweep["weight"] == list(range(16))
    assert s.sweep["inputs"] == [0]


@pytest.mark.parametrize("name", ["fig5-psc-psp", "fig6-depression"])
def test_rerun_is_byte_identical(tmp_path, name):
    a, b = tmp_path / "a", tmp_path / "b"
    run_experiment(builtin_spec(name), a)
    run_experiment(builtin_spec(name), b)
    fa, fb = _files(a), _files(b)
    assert fa == fb
    assert any(n.endswith(".csv") for n in fa) and any(n.endswith(".svg") for n in fa)
    assert f"{name}-summary.txt" in fa


def test_flat_when_nothing_connected():
    spec = parse_spec("""
[experiment]
name = flat
kind = trace
cycles = 50
[probe]
neurons = 0
rows = 0
""")
    res = run_experiment(spec)
    rec = res.data["record"]
    assert not rec.v_mem.any() and not rec.v_psc.any() and not rec.fired.any()


TRANSFER = """
[experiment]
name = tiny
kind = transfer
[engine]
U = 63
tau_psc = 30
gain = 70
g_w = 0.006
tau_m = 0
[sweep]
period = 0 20..60:10
weight = 1 2
inputs = 0
duration_ms = 2000
window = 0 100
window_axis = input
[analysis]
background_weight = 15
"""


def test_small_transfer_sweep():
    res = run_transfer(parse_spec(TRANSFER), workers=1)
    t = res.tables["transfer"]
    assert t.header[:3] == ["input_hz", "nominal_hz", "period_cycles"]
    assert t.column("input_hz") == sorted(t.column("input_hz"))
    w1, w2 = np.array(t.column("w1_tm0")), np.array(t.column("w2_tm0"))
    assert np.all(np.diff(w1) >= 0) and np.all(w2 >= w1)
    assert res.summary["min_r2"] > 0.99
    assert "max_slope_ratio_err" in res.summary


def test_transfer_worker_pool_matches_serial():
    spec = parse_spec(TRANSFER)
    a = run_transfer(spec, workers=1).tables["transfer"].rows
    b = run_transfer(spec, workers=2).tables["transfer"].rows
    assert a == b


def test_transfer_validation():
    with pytest.raises(ConfigError):
        run_transfer(parse_spec(TRANSFER.replace("weight = 1 2", "weight = 0..16")))
    with pytest.raises(ConfigError):
        run_transfer(parse_spec(TRANSFER.replace("inputs = 0", "inputs = 127")))


def test_seed_changes_poisson_output(monkeypatch):
    text = """
[experiment]
name = p
kind = trace
seed = 1
cycles = 400
[engine]
U = 63
[stimulus]
row.0 = poisson 40 240
[probe]
rows = 0
"""
    base = run_experiment(parse_spec(text)).data["record"].v_psc
    monkeypatch.setenv("SCNN_SEED", "2")
    other = run_experiment(parse_spec(text)).data["record"].v_psc
    assert not np.array_equal(base, other)


# ----------------------------------------------------------------------
# command line


def test_cli_list(capsys):
    assert main(["list-experiments"]) == 0
    out = capsys.readouterr().out
    assert "fig6-depression" in out


def test_cli_experiment(tmp_path, capsys):
    assert main(["experiment", "fig5-psc-psp", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "psc_rms_rel" in out
    csv = tmp_path / "fig5-psc-psp-probe.csv"
    assert csv.exists()
    assert main(["experiment", "nope"]) == 2


def test_cli_fit(tmp_path, capsys):
    f = tmp_path / "d.csv"
    t = np.arange(30) * 0.62
    f.write_text("t_ms,v\n" + "".join(f"{float(a)!r},{float(5 * np.exp(-a / 12.0))!r}\n" for a in t))
    assert main(["fit", "exp", str(f)]) == 0
    assert "tau_ms = 12" in capsys.readouterr().out
    g = tmp_path / "l.csv"
    g.write_text("x,y\n" + "".join(f"{x},{2 * x - 60}\n" for x in range(30, 120, 5)))
    assert main(["fit", "linear", str(g), "--window", "0", "200"]) == 0
    out = capsys.readouterr().out
    assert "slope = 2" in out and "f_on_hz = 30" in out


def test_cli_run_spec_file(tmp_path):
    p = tmp_path / "s.ini"
    p.write_text(TRANSFER.replace("20..60:10", "30"))
    assert main(["run", str(p), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "tiny-transfer.csv").exists()


def test_cli_codec(tmp_path, capsys):
    assert main(["codec", "encode", "spike 5"]) == 0
    assert capsys.readouterr().out.strip() == "000085000000"
    out = tmp_path / "x.pkt"
    assert main(["codec", "encode", "write 0xA00 100", "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["codec", "decode", str(out)]) == 0
    assert "config-write 0xa00 = 0x64" in capsys.readouterr().out
    assert main(["codec", "decode", "00f0 00000000"]) == 0
    assert "error" in capsys.readouterr().out
    assert main(["codec", "decode", "0000000000000000"]) == 1
    assert main(["codec", "encode", "jump 3"]) == 1
