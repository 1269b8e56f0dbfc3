import json
import math
import os
import pathlib
import subprocess

import numpy as np
import pytest

import tempus

ROOT = pathlib.Path(__file__).resolve().parents[2]


def test_metrics_match_hand_values():
    assert tempus.mae([1, 3], [2, 5]) == 1.5
    assert tempus.mse([1, 3], [2, 5]) == 2.5
    assert tempus.rmse([0], [3]) == 3.0
    assert tempus.mape([110], [100]) == pytest.approx(10.0, rel=1e-15)
    assert tempus.mase([5], [4], [1, 2, 3]) == 1.0
    assert tempus.metric("MAPE", [1], [0], [1, 2]) is None
    f = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert tempus.mae(f, f + 1) == 1.0


def test_errors_carry_their_code():
    with pytest.raises(tempus.TempusError, match="UndefinedMetric"):
        tempus.mase([1], [2], [3, 3, 3])
    with pytest.raises(tempus.TempusError, match="ShapeMismatch"):
        tempus.mae([1, 2], [1, 2, 3])
    with pytest.raises(tempus.TempusError, match="UnknownModel"):
        tempus.forecast("prophet", {}, [1, 2, 3], 2)


def test_forecasters():
    out = tempus.forecast("seasonal_naive", {"L": 2}, [10, 20, 30, 40], 3)
    assert out.shape == (1, 3)
    assert out.tolist() == [[30.0, 40.0, 30.0]]
    flat = tempus.forecast("ses", {"alpha": 0.3}, np.full(12, 4.5), 5)
    assert np.all(flat == 4.5)
    assert "holt_winters" in tempus.native_families()


def test_generator_is_deterministic():
    a = tempus.generate("additive_fixed", 1000, noise_scale=2.0, seed=3)
    b = tempus.generate("additive_fixed", 1000, noise_scale=2.0, seed=3)
    assert a == b
    resid = np.array(a["y"]) - np.array(a["y_base"])
    assert resid.min() >= 0
    clean = tempus.generate("periodic", 48, period=24.0)
    assert clean["y"] == clean["y_base"]
    assert clean["alpha_drawn"] is None
    assert tempus.generate("additive_random", 5, seed=1)["alpha_drawn"] is not None


def test_plan_windows_layout():
    plan = tempus.plan_windows(40, 10, 5, 2, 2)
    assert [w["eval"] for w in plan["tune"]] == [(20, 25), (25, 30)]
    assert [w["eval"] for w in plan["test"]] == [(30, 35), (35, 40)]
    assert plan["test"][0]["context"] == (20, 30)
    assert plan["stride"] == 5
    with pytest.raises(tempus.TempusError, match="InsufficientHistory"):
        tempus.plan_windows(20, 10, 5, 2, 2)


def test_aggregation():
    cells = [[1.0, 2.0, None], [2.0, 1.0, 3.0], [0.5, 0.5, 1.0]]
    models = ["seasonal_naive", "theta", "arima"]
    tasks = ["a", "b", "c"]
    assert tempus.skill_score(cells, models, tasks, "seasonal_naive") == 0.0
    assert tempus.win_rate([[1.0, 2.0], [2.0, 1.0]], ["x", "y"], ["a", "b"], "x") == 0.5
    report = tempus.aggregate(cells, models, tasks)
    assert report["ranking"][0] == "arima"
    assert report["models"]["seasonal_naive"]["skill_score"] == 0.0
    expected = 1 - math.sqrt(0.5 * 0.25)
    assert report["models"]["arima"]["skill_score"] == pytest.approx(expected, rel=1e-12)


def test_run_cli_end_to_end(tmp_path):
    spec = tmp_path / "gen.json"
    spec.write_text(json.dumps({"family": "periodic", "num_points": 200, "period": 12, "seed": 1}))
    code, out, _ = tempus.run_cli(["generate", str(spec), str(tmp_path / "s.csv")])
    assert code == 0 and "200 points" in out
    manifest = {
        "run_id": "py",
        "tasks": [{"id": "s", "csv": "s.csv", "context_len": 36, "horizon": 12}],
        "models": ["seasonal_naive", "theta"],
    }
    (tmp_path / "m.json").write_text(json.dumps(manifest))
    code, out, err = tempus.run_cli(["eval", str(tmp_path / "m.json")])
    assert code == 0, err
    assert out.startswith("rank,model,")
    assert (tmp_path / "py" / "metadata.json").exists()
    code, _, err = tempus.run_cli(["eval", str(tmp_path / "missing.json")])
    assert code == 1 and "missing.json" in err


@pytest.mark.skipif("TEMPUS_CLI" not in os.environ, reason="command-line tool not built")
def test_command_line_tool():
    done = subprocess.run([os.environ["TEMPUS_CLI"], "--version"], capture_output=True, text=True)
    assert done.returncode == 0
    assert tempus.__version__ in done.stdout
    bad = subprocess.run([os.environ["TEMPUS_CLI"], "eval", "--nope", "m.json"], capture_output=True, text=True)
    assert bad.returncode == 1
    assert "--nope" in bad.stderr


def test_protocol_schema_is_valid():
    jsonschema = pytest.importorskip("jsonschema")
    schema = json.loads((ROOT / "schema" / "protocol_v1.schema.json").read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)
    validator.validate({"op": "hello", "protocol_version": 1})
    validator.validate({"name": "x", "protocol_version": 1, "hyper_grid": {"L": [1, 4]}})
    validator.validate({
        "op": "forecast", "protocol_version": 1, "task_id": "t", "horizon": 2,
        "context": [[1, 2, 3]], "covariates_past": [], "covariates_future": [],
        "params": {"L": 1},
    })
    validator.validate({"values": [[1.0, 2.0]]})
    validator.validate({"error": {"code": "InvalidPeriod", "message": "bad L"}})
    with pytest.raises(jsonschema.ValidationError):
        validator.validate({"values": [[1.0]], "error": {"code": "X"}})
