import json
import math

import numpy as np
import pytest

from perilotka import cli, scenario
from perilotka.exceptions import ConfigError
from perilotka.io import format_float, read_csv

from conftest import OMEGA


def constant_config(**values):
    coeffs = {"omega": OMEGA}
    for name in ("a1", "a2", "a3", "b11", "b12", "b21", "b22", "c1", "c2",
                 "d1", "d2", "alpha", "beta", "gamma"):
        coeffs[name] = {"mean": values.get(name, 1.0), "harmonics": []}
    return {"coefficients": coeffs, "initial": {"x1": 0.5, "x2": 0.5, "x3": 0.5}, "horizon": 10}


def write_json(path, data):
    path.write_text(json.dumps(data))
    return path


# presets and config ------------------------------------------------------------

def test_fig1_preset_matches_published_coefficients(fig1):
    p = fig1.params
    t = np.linspace(0, 2, 101)
    s, c = np.sin(8 * t), np.cos(8 * t)
    published = {
        "a1": 3 + s, "a2": 5.5 - 0.2 * c, "a3": 0.4 - 0.3 * c,
        "b11": 2 + c, "b22": 5 + 0.4 * s, "b12": 0.04 - 0.02 * s, "b21": 0.15 - 0.1 * c,
        "c1": 0.5 - 0.4 * s, "c2": 0.4 - 0.3 * s, "alpha": 0.03 - 0.02 * c,
        "beta": 0.3 + 0.2 * c, "gamma": 2 - s, "d1": 3 + 2 * s, "d2": 3 - 2 * s,
    }
    for name, ref in published.items():
        assert np.max(np.abs(getattr(p, name)(t) - ref)) < 1e-14, name
    assert np.array_equal(fig1.initial, [0.5, 0.7, 1.0])
    assert fig1.horizon == 100.0
    assert fig1.period == pytest.approx(math.pi / 4, abs=0)


def test_fig2_preset_overrides(fig1, fig2):
    t = np.linspace(0, 2, 101)
    assert np.max(np.abs(fig2.params.a3(t) - (4 - 0.3 * np.cos(8 * t)))) < 1e-14
    assert np.max(np.abs(fig2.params.beta(t) - (3 + 0.2 * np.cos(8 * t)))) < 1e-14
    for name, f in fig1.params.items():
        if name not in ("a3", "beta"):
            assert getattr(fig2.params, name) == f


def test_config_roundtrip(fig2):
    again = scenario.ScenarioConfig.from_dict(json.loads(json.dumps(fig2.to_dict())))
    assert again.params == fig2.params
    assert np.array_equal(again.initial, fig2.initial)


def test_negative_initial_component_names_field(tmp_path):
    data = scenario.preset_dict("fig1")
    data["initial"]["x1"] = -0.5
    with pytest.raises(ConfigError, match=r"initial\.x1"):
        scenario.load(write_json(tmp_path / "c.json", data))


def test_nonpositive_coefficient_names_field():
    data = constant_config(c2=0.0)
    with pytest.raises(ConfigError, match=r"coefficients\.c2"):
        scenario.ScenarioConfig.from_dict(data)


def test_mismatched_period_rejected():
    data = constant_config()
    data["coefficients"]["a1"] = {"mean": 3, "omega": 1.0, "harmonics": [{"k": 1, "sin": 1, "cos": 0}]}
    data["coefficients"]["a2"] = {"mean": 3, "harmonics": [{"k": 1, "sin": 1, "cos": 0}]}
    with pytest.raises(ConfigError, match="coefficients"):
        scenario.ScenarioConfig.from_dict(data)


def test_file_layers_over_preset(tmp_path):
    path = write_json(tmp_path / "c.json", {"horizon": 5, "initial": {"x3": 0.0}})
    cfg = scenario.load(path, "fig2")
    assert cfg.horizon == 5.0
    assert np.array_equal(cfg.initial, [0.5, 0.7, 0.0])


def test_bad_json(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        scenario.load(path)


def test_format_float_roundtrips():
    for v in (math.pi, 1e-300, -2.5e17, 0.1):
        assert float(format_float(v)) == v


# commands ----------------------------------------------------------------------

def test_simulate_fig2(tmp_path):
    assert cli.main(["simulate", "--preset", "fig2", "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "trajectory.csv")
    assert header == ["t", "x1", "x2", "x3"]
    assert data[-1, 0] == 100.0
    assert data[-1, 3] < 1e-4
    assert data.shape[0] == int(round(100 / OMEGA * 64)) + 1
    raw = (tmp_path / "trajectory.csv").read_bytes()
    assert b"\r" not in raw
    rec = json.loads((tmp_path / "record.json").read_text())
    for f in rec["outputs"]:
        assert (tmp_path / f.split("/")[-1]).exists()


def test_simulate_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert cli.main(["simulate", "--preset", "fig1", "--t-end", "5", "--out", str(out)]) == 0
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()


def test_simulate_fig1_periodic_tail(tmp_path):
    cli.main(["simulate", "--preset", "fig1", "--out", str(tmp_path)])
    _, data = read_csv(tmp_path / "trajectory.csv")
    last = data[-129:, 1:]
    assert np.max(np.abs(last[64:] - last[:65])) < 1e-3


def test_simulate_config_error_exit(tmp_path, capsys):
    data = scenario.preset_dict("fig1")
    data["initial"]["x1"] = -0.5
    path = write_json(tmp_path / "c.json", data)
    assert cli.main(["simulate", "--config", str(path), "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG
    assert "initial.x1" in capsys.readouterr().err


def test_simulate_solver_failure_keeps_partial_csv(tmp_path):
    path = write_json(tmp_path / "c.json", {"integrator": {"max_steps": 10}})
    code = cli.main(["simulate", "--preset", "fig1", "--config", str(path), "--out", str(tmp_path / "o")])
    assert code == cli.EXIT_SOLVER
    _, data = read_csv(tmp_path / "o" / "trajectory.csv")
    assert 0 < data[-1, 0] < 100
    rec = json.loads((tmp_path / "o" / "record.json").read_text())
    assert rec["status"].startswith("integration failed")


def test_check_verdicts(tmp_path):
    assert cli.main(["check", "--preset", "fig2", "--out", str(tmp_path / "f2")]) == 0
    rec = json.loads((tmp_path / "f2" / "record.json").read_text())
    assert rec["scalars"]["attraction_i"] is True
    assert rec["reports"]["boundary_stability"]["verdict"] is True
    assert cli.main(["check", "--preset", "fig1", "--out", str(tmp_path / "f1")]) == 0
    rec = json.loads((tmp_path / "f1" / "record.json").read_text())
    s = rec["scalars"]
    assert not (s["attraction_i"] or s["attraction_ii"] or s["attraction_iii"])
    assert s["existence"] is False


def test_check_singular_competition(tmp_path):
    path = write_json(tmp_path / "c.json", constant_config())
    assert cli.main(["check", "--config", str(path), "--out", str(tmp_path / "o")]) == 0
    rec = json.loads((tmp_path / "o" / "record.json").read_text())
    entry = rec["reports"]["existence"]["entries"][0]
    assert entry["name"] == "b_det_nonzero" and entry["verdict"] is False


def test_orbit_logistic_constants(tmp_path):
    path = write_json(tmp_path / "c.json", constant_config())
    assert cli.main(["orbit", "--config", str(path), "--mode", "logistic-1",
                     "--guess", "0.5,0,0", "--out", str(tmp_path / "o")]) == 0
    rec = json.loads((tmp_path / "o" / "record.json").read_text())
    assert rec["scalars"]["anchor"][0] == pytest.approx(1.0, abs=1e-12)
    header, data = read_csv(tmp_path / "o" / "orbit.csv")
    assert header == ["t", "x1", "x2", "x3"]
    assert np.allclose(data[:, 1], 1.0, atol=1e-12)


def test_orbit_fig2_boundary(tmp_path):
    assert cli.main(["orbit", "--preset", "fig2", "--mode", "boundary", "--out", str(tmp_path)]) == 0
    rec = json.loads((tmp_path / "record.json").read_text())
    assert rec["scalars"]["residual"] < 1e-9
    anchor = rec["scalars"]["anchor"]
    assert anchor[0] > 0 and anchor[1] > 0 and anchor[2] == 0
    assert len(rec["reports"]["orbit"]["embedded_multipliers"]) == 3


def test_orbit_bad_guess(tmp_path):
    assert cli.main(["orbit", "--preset", "fig1", "--guess", "1,x,2",
                     "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert cli.main(["orbit", "--preset", "fig1", "--mode", "boundary", "--guess", "1,1,1",
                     "--out", str(tmp_path)]) == cli.EXIT_CONFIG


def test_lyapunov_start_on_orbit(tmp_path):
    assert cli.main(["lyapunov", "--preset", "fig2", "--t-end", "5", "--start-on-orbit",
                     "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "lyapunov.csv")
    assert header == ["t", "V", "delta", "bound"]
    assert np.max(np.abs(data[:, 1])) <= 1e-10


def test_lyapunov_fig1_negative_control(tmp_path):
    assert cli.main(["lyapunov", "--preset", "fig1", "--t-end", "20", "--out", str(tmp_path)]) == 0
    rec = json.loads((tmp_path / "record.json").read_text())
    assert rec["scalars"]["monotone"] is False
    assert (tmp_path / "lyapunov.svg").read_text().startswith("<svg")
