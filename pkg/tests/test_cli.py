import json
from pathlib import Path

import numpy as np
import pytest

from lindsim.cli import ConfigError, ExperimentConfig, build_protocol, config_hash, emit_csv, resolve_operator, run
from lindsim.hilbert import HilbertSpace, collective_spin, embed, pauli
from lindsim.numerics import DEFAULT_TOLERANCES
from lindsim.protocol import matrix_to_json, protocol_to_dict
from lindsim.superop import hamiltonian_superop

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def summary(out):
    return json.loads((Path(out) / "summary.json").read_text())


def test_build_sigma_minus(tmp_path, capsys):
    out = tmp_path / "o"
    assert run(["build", "--config", str(CONFIGS / "build_sigma_minus.json"), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "M = 1" in text and "g = 1\n" in text
    s = summary(out)
    assert s["passed"] and s["exit_code"] == 0 and len(s["config_hash"]) == 16
    assert set(s["tolerances"]) == set(DEFAULT_TOLERANCES.as_dict())
    assert "wall_clock_s" in s and s["assertions"]
    # the serialized protocol reloads to the same model
    cfg = ExperimentConfig(protocol_file=str(out / "protocol.json"))
    p = build_protocol(cfg)
    q = build_protocol(ExperimentConfig.model_validate(json.loads((CONFIGS / "build_sigma_minus.json").read_text())))
    assert np.array_equal(p.k, q.k) and np.array_equal(p.l_b, q.l_b)
    assert json.loads((out / "protocol.json").read_text()) == json.loads(json.dumps(protocol_to_dict(q), sort_keys=True))


def test_negative_rate_is_validation_error(tmp_path, capsys):
    cfg = write(tmp_path, {"model": {"dims": [2], "jumps": [{"op": "pauli:minus", "rate": -1.0}]}})
    assert run(["build", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "model.jumps.0.rate" in capsys.readouterr().err


@pytest.mark.parametrize(
    "data, field",
    [
        ({"bogus": 1}, "bogus"),
        ({"model": {"dims": [2], "jumps": [{"op": "pauli:minus:site=4", "rate": 1.0}]}}, "model.jumps.0.op"),
        ({"model": {"dims": [3], "jumps": [{"op": "pauli:minus", "rate": 1.0}]}}, "model.jumps.0.op"),
        ({"model": {"dims": [2], "jumps": [{"op": [[[1, 0]]], "rate": 1.0}]}}, "model.jumps.0.op"),
        ({"scenario": "nope"}, "scenario"),
        ({"scenario": "collective-thermal", "params": {"omega": 1.0}}, "params.omega"),
        ({"scenario": "collective-thermal", "cutoff": 4}, "cutoff"),
        ({"scenario": "collective-thermal", "model": {"dims": [2], "jumps": [{"op": "identity", "rate": 1}]}}, "scenario"),
        ({"mode": "sweep"}, "mode"),
        ({"tolerances": {"nope": 1.0}}, "tolerances"),
    ],
)
def test_validation_errors_name_field(tmp_path, capsys, data, field):
    assert run(["build", "--config", write(tmp_path, data), "--out", str(tmp_path / "o")]) == 2
    assert field in capsys.readouterr().err


def test_missing_config(tmp_path, capsys):
    assert run(["build", "--config", str(tmp_path / "none.json")]) == 2
    assert "--config" in capsys.readouterr().err


def test_tol_override(tmp_path, capsys):
    out = tmp_path / "o"
    assert run(["regress", "--out", str(out), "--tol", "bad"]) == 2
    assert run(["regress", "--out", str(out), "--tol", "nope=1"]) == 2
    assert run(["hierarchy", "--out", str(out), "--tol", "oracle_abs=1e-7"]) == 0
    assert summary(out)["tolerances"]["oracle_abs"] == 1e-7


def test_resolve_operator():
    space = HilbertSpace([2, 2])
    assert np.array_equal(resolve_operator("pauli:minus:site=1", space, "x"), embed(pauli("minus"), 1, space))
    assert np.array_equal(resolve_operator("collective_spin:minus:N=2", space, "x"), collective_spin(2, "minus"))
    assert np.array_equal(resolve_operator("identity", space, "x"), np.eye(4))
    m = np.arange(16).reshape(4, 4) * (1 + 2j)
    assert np.array_equal(resolve_operator(matrix_to_json(m), space, "x"), m)
    assert resolve_operator("boson:a:site=0", HilbertSpace([4, 2]), "x").shape == (8, 8)
    with pytest.raises(ConfigError, match="x"):
        resolve_operator("pauli:minus", space, "x")
    with pytest.raises(ConfigError):
        resolve_operator("pauli:minus:site", space, "x")
    with pytest.raises(ConfigError):
        resolve_operator("spin:minus", space, "x")


def test_numeric_failure_exit_code(tmp_path, capsys):
    p = protocol_to_dict(build_protocol(ExperimentConfig(scenario="collective-dephasing")))
    p["l_b"] = matrix_to_json(hamiltonian_superop(pauli("z")))
    proto = tmp_path / "p.json"
    proto.write_text(json.dumps(p))
    assert run(["build", "--config", write(tmp_path, {"protocol_file": str(proto)}), "--out", str(tmp_path / "o")]) == 3
    assert "numeric failure" in capsys.readouterr().err


def test_trace_csv_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["trace", "--config", str(CONFIGS / "fig3.json")]
    assert run(args + ["--out", str(a), "--svg"]) == 0
    assert run(args + ["--out", str(b)]) == 0
    for name in ("trace_T100.csv", "trace_T1000.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    lines = (a / "trace_T100.csv").read_text().splitlines()
    assert lines[0].startswith("# config_hash=") and "columns=t,log10_t,distance" in lines[0] and "column-stacking" in lines[0]
    assert lines[1] == "t,log10_t,distance"
    assert all(len(line.split(",")) == 3 for line in lines[2:])
    assert (a / "trace_T100.svg").read_text().lstrip().startswith("<?xml")
    s = summary(a)
    assert s["passed"] and 2.5 <= s["results"]["max_error_ratio"] <= 4.0


def test_sweep_csv(tmp_path):
    cfg = write(tmp_path, {
        "mode": "sweep", "scenario": "collective-dephasing", "g_mode": "figure",
        "T_list": [100, 316.2, 1000, 3162, 10000], "t_grid": {"points_per_decade": 10},
        "assertions": {"min_r_squared": 0.99},
    })
    out = tmp_path / "o"
    assert run(["sweep", "--config", cfg, "--out", str(out), "--threads", "2", "--svg"]) == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[1] == "T,inv_sqrt_T,sup_error,fit_prediction" and len(lines) == 7
    row = lines[2].split(",")
    assert float(row[1]) == pytest.approx(0.1)
    assert (out / "sweep.svg").exists()
    assert summary(out)["results"]["r_squared"] >= 0.99


def test_sweep_bad_t_list(tmp_path, capsys):
    cfg = write(tmp_path, {"scenario": "collective-dephasing", "T_list": [1, 2]})
    assert run(["sweep", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "T_list" in capsys.readouterr().err


def test_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("LF_THREADS", "x")
    assert run(["hierarchy", "--out", str(tmp_path / "o")]) == 2
    monkeypatch.setenv("LF_THREADS", "2")
    assert run(["hierarchy", "--out", str(tmp_path / "o")]) == 0


def test_regress_and_threshold_failure(tmp_path, capsys):
    out = tmp_path / "o"
    assert run(["regress", "--config", str(CONFIGS / "regress.json"), "--out", str(out)]) == 0
    assert (out / "regress.csv").read_text().splitlines()[1].startswith("scenario,distance")
    strict = write(tmp_path, {"assertions": {"max_distance": 1e-30}})
    assert run(["regress", "--config", strict, "--out", str(out)]) == 4
    assert not summary(out)["passed"]


def test_hierarchy_command(tmp_path):
    out = tmp_path / "o"
    assert run(["hierarchy", "--config", str(CONFIGS / "hierarchy.json"), "--out", str(out)]) == 0
    rows = (out / "hierarchy.csv").read_text().splitlines()[2:]
    assert [r.split(",")[1] for r in rows] == ["16", "4", "1"]
    assert summary(out)["results"]["tau_ratio"] >= 10


def test_evolve_cavity(tmp_path):
    out = tmp_path / "o"
    assert run(["evolve", "--config", str(CONFIGS / "evolve_cavity.json"), "--out", str(out)]) == 0
    s = summary(out)
    assert s["results"]["leakage"]["100"] <= 1e-8
    assert (out / "evolve.csv").exists()


def test_config_hash_ignores_output_location():
    a = ExperimentConfig(scenario="collective-thermal", out="x")
    b = ExperimentConfig(scenario="collective-thermal", out="y", svg=True)
    assert config_hash(a, DEFAULT_TOLERANCES) == config_hash(b, DEFAULT_TOLERANCES)
    assert config_hash(a, DEFAULT_TOLERANCES) != config_hash(a, DEFAULT_TOLERANCES.with_overrides(psd_abs=1e-9))


def test_emit_csv_rejects_other_types(tmp_path):
    with pytest.raises(TypeError):
        emit_csv(object(), tmp_path / "x.csv")
