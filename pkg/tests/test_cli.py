import io
import math

import numpy as np
import pytest

from optophonon import cli
from optophonon.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_SYNTHESIS,
    RunConfig,
    SweepAxis,
    cmd_sweep_delta,
    cmd_sweep_gamma,
    main,
    parse_target,
)
from optophonon.errors import ConfigError
from optophonon.schedule_io import load_schedule
from optophonon.synthesis import verify_schedule


def data_rows(text):
    lines = [l for l in text.splitlines() if l and not l.startswith("#")]
    header = lines[0].split(",")
    return header, [l.split(",") for l in lines[1:]]


def test_synth_superposition(tmp_path, capsys):
    out = tmp_path / "s.txt"
    code = main(["synth", "--target", "0:0.7071, 2:-0.7071", "--eta", "0.1", "--algorithm", "reverse", "--out", str(out)])
    assert code == EXIT_OK
    schedule = load_schedule(out)
    assert len(schedule) == 4
    assert verify_schedule(schedule) >= 1 - 1e-9
    assert "ideal fidelity" in capsys.readouterr().out


def test_synth_forward_fock1(capsys):
    assert main(["synth", "--target", "1:1", "--algorithm", "forward"]) == EXIT_OK
    assert "segments: 2" in capsys.readouterr().out


def test_synth_rejects_unnormalized(capsys):
    assert main(["synth", "--target", "0:0.8"]) == EXIT_CONFIG
    assert "auto-normalize" in capsys.readouterr().err
    assert main(["synth", "--target", "0:0.8", "--auto-normalize"]) == EXIT_OK


def test_synthesis_error_exit(capsys):
    code = main(["synth", "--target", "2:1", "--algorithm", "forward", "--couplings", "lamb-dicke"])
    assert code == EXIT_SYNTHESIS


def test_missing_config_file(tmp_path):
    assert main(["synth", "--target", "1:1", "--config", str(tmp_path / "nope.ini")]) == EXIT_CONFIG


def test_simulate_schedule_file(tmp_path, capsys):
    path = tmp_path / "s.txt"
    main(["synth", "--target", "0:1, 2:-1", "--auto-normalize", "--out", str(path)])
    capsys.readouterr()
    for model in ("ideal", "leakage", "lindblad-simplified"):
        assert main(["simulate", "--schedule", str(path), "--model", model]) == EXIT_OK
    lines = [l for l in capsys.readouterr().out.splitlines() if l.startswith("fidelity")]
    values = [float(l.split()[-1]) for l in lines]
    assert values[0] == pytest.approx(1.0, abs=1e-9)
    assert 0.85 < values[1] < 0.95
    assert 0.9 < values[2] < 1.0


def test_parse_target_tolerance():
    assert parse_target("0:0.7071, 2:-0.7071").N == 2
    with pytest.raises(ConfigError):
        parse_target("0:0.8")
    assert abs(parse_target("0:0.8", auto_normalize=True).coefficients[0] - 1) < 1e-15


def test_config_roundtrip_bit_exact():
    config = RunConfig(
        system={"omega_m_hz": 1e8 / 3, "g_hz": math.pi * 1e6, "Omega_hz": 5e4 + 1e-9, "gamma_c_hz": 0.1},
        target="0:0.6, 1:0.8j",
        model="lindblad-simplified",
        algorithm="forward",
        couplings="lamb-dicke",
        sweep={"start": 5.0, "stop": 100.0, "points": 40.0},
        out="x.csv",
    )
    back = RunConfig.from_ini(config.to_ini())
    assert back == config
    assert RunConfig.from_ini(back.to_ini()) == back


@pytest.mark.parametrize(
    "text",
    [
        "[bogus]\nx = 1\n",
        "[run]\nmodel = quantum\n",
        "[system]\nomega_m_hz = fast\n",
        "not an ini file",
        "[target]\nstate = 1:1\nauto_normalize = maybe\n",
    ],
)
def test_config_rejects(text):
    with pytest.raises(ConfigError):
        RunConfig.from_ini(text)


def test_config_params_from_ratios():
    config = RunConfig(system={"eta": 0.1, "delta_over_Omega": 40.0, "Omega_hz": 5e4, "gamma_c_hz": 1e3})
    p = config.params()
    assert p.eta == pytest.approx(0.1)
    assert abs(p.delta) / p.Omega == pytest.approx(40.0)
    assert p.gamma_c / p.Omega == pytest.approx(0.02)
    with pytest.raises(ConfigError):
        RunConfig(system={"g_hz": 1.0}).params()


def test_sweep_axis():
    np.testing.assert_allclose(SweepAxis("x", 5, 100, 40).values()[[0, -1]], [5, 100])
    assert SweepAxis("x", 1, 100, 3, "log").values()[1] == pytest.approx(10)
    assert list(SweepAxis("x", 7, 9, 1).values()) == [7]
    with pytest.raises(ConfigError):
        SweepAxis("x", 1, 2, 0)
    with pytest.raises(ConfigError):
        SweepAxis("x", 0, 2, 3, "log")


def test_sweep_delta_single_point():
    buf = io.StringIO()
    config = RunConfig(system={"eta": 0.1}, sweep={"start": 10.0, "stop": 10.0, "points": 1.0})
    cmd_sweep_delta(config, out=buf)
    header, rows = data_rows(buf.getvalue())
    assert header == ["delta_over_Omega", "F1_numeric", "F1_analytic", "F2_numeric", "F2_analytic", "status"]
    assert len(rows) == 1
    f1, f1a = float(rows[0][1]), float(rows[0][2])
    assert abs(f1 - f1a) <= 0.01
    assert rows[0][-1] == "ok"


def test_sweep_delta_parallel_and_deterministic(tmp_path):
    config = RunConfig(system={"eta": 0.1}, sweep={"start": 5.0, "stop": 30.0, "points": 6.0})
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    cmd_sweep_delta(RunConfig(**{**config.__dict__, "out": str(a)}), jobs=1)
    cmd_sweep_delta(RunConfig(**{**config.__dict__, "out": str(b)}), jobs=2)
    strip = lambda p: [l for l in p.read_text().splitlines() if not l.startswith("# created")]
    assert strip(a) == strip(b)
    _, rows = data_rows(a.read_text())
    assert [float(r[0]) for r in rows] == sorted(float(r[0]) for r in rows)


def test_sweep_delta_marks_failed_rows(monkeypatch):
    from optophonon.errors import IntegrationError

    def boom(*args, **kwargs):
        raise IntegrationError("forced")

    monkeypatch.setattr(cli, "protocol_fidelity_numeric", boom)
    buf = io.StringIO()
    cmd_sweep_delta(RunConfig(sweep={"start": 10.0, "stop": 20.0, "points": 2.0}), out=buf)
    _, rows = data_rows(buf.getvalue())
    assert all(r[-1] == "failed" and r[1] == "nan" for r in rows)
    assert all(len(r) == 6 for r in rows)


def test_sweep_gamma_noiseless_limit():
    buf = io.StringIO()
    config = RunConfig(
        system={"eta": 0.1, "delta_over_Omega": 1e6},
        sweep={"gamma_values": "0", "nbar_values": "0", "target": "fock2"},
    )
    cmd_sweep_gamma(config, out=buf)
    header, rows = data_rows(buf.getvalue())
    assert header == ["gamma_c_over_Omega", "F_nbar_0", "status"]
    assert float(rows[0][1]) == pytest.approx(1.0, abs=1e-6)


def test_sweep_gamma_row_ordering():
    buf = io.StringIO()
    config = RunConfig(
        system={"eta": 0.1, "delta_over_Omega": 10.0},
        sweep={"gamma_values": "0.02, 0", "nbar_values": "0, 1", "target": "superposition02"},
    )
    cmd_sweep_gamma(config, out=buf)
    _, rows = data_rows(buf.getvalue())
    assert [float(r[0]) for r in rows] == [0.02, 0.0]
    assert float(rows[0][1]) >= float(rows[0][2])
    assert float(rows[1][1]) > float(rows[0][1])


def test_sweep_gamma_bad_target():
    with pytest.raises(ConfigError):
        cmd_sweep_gamma(RunConfig(sweep={"target": "fock7"}), out=io.StringIO())


def test_csv_precision(tmp_path):
    path = tmp_path / "o.csv"
    cli.write_csv(path, {"k": "v"}, ["x"], [[1 / 3]])
    text = path.read_text()
    assert "# k = v" in text
    assert float(text.splitlines()[-1]) == 1 / 3


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "optophonon", "synth", "--target", "1:1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "segments: 2" in proc.stdout
