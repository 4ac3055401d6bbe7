import json
import shutil
import subprocess

import pytest

from distload.cli import EXIT_CONFIG, EXIT_RUNTIME, main


def write_cfg(tmp_path, raw):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(raw))
    return p


def test_validate_default(capsys):
    assert main(["validate"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["valid"] and out["rounds"] == 20_000 and out["total_time"] == 200.0


def test_invalid_config_reports_field(tmp_path, capsys):
    p = write_cfg(tmp_path, {"laws": {"k_e": -2}})
    assert main(["validate", str(p)]) == EXIT_CONFIG
    err = json.loads(capsys.readouterr().out)
    assert err == {"error": "invalid_config", "field": "laws.k_e", "message": err["message"]}


def test_flag_override_is_validated(capsys):
    assert main(["validate", "--sigma", "-1"]) == EXIT_CONFIG
    assert json.loads(capsys.readouterr().out)["field"] == "sigma"


def test_missing_file(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "nope.json")]) == EXIT_CONFIG
    assert json.loads(capsys.readouterr().out)["error"] == "invalid_config"


def test_run_writes_outputs(tmp_path, capsys, fast_raw):
    p = write_cfg(tmp_path, fast_raw)
    out_dir = tmp_path / "out"
    assert main(["run", str(p), "--out-dir", str(out_dir), "--seed", "3", "--sigma", "0.1"]) == 0
    brief = json.loads(capsys.readouterr().out)
    assert brief["seed"] == 3 and brief["sigma"] == 0.1 and brief["completed"]
    assert (out_dir / "trace.csv").exists()
    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["config"]["seed"] == 3


def test_run_io_failure(tmp_path, capsys, fast_raw):
    blocker = tmp_path / "blocker"
    blocker.write_text("x")
    p = write_cfg(tmp_path, fast_raw)
    assert main(["run", str(p), "--out-dir", str(blocker / "sub")]) == EXIT_RUNTIME
    assert json.loads(capsys.readouterr().out)["error"] == "runtime_failure"


def test_sweep(tmp_path, capsys, fast_raw):
    p = write_cfg(tmp_path, fast_raw)
    assert main(["sweep", str(p), "--seeds", "2", "--seed", "5", "--out-dir", str(tmp_path / "sw")]) == 0
    agg = json.loads(capsys.readouterr().out)
    assert agg["seeds"] == [5, 6]
    assert "max_J_rel_err" in agg
    assert (tmp_path / "sw" / "seed_6" / "trace.csv").exists()
    assert json.loads((tmp_path / "sw" / "sweep.json").read_text()) == agg
    assert main(["sweep", str(p), "--seeds", "0"]) == EXIT_CONFIG


def test_usage_error():
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code != 0


@pytest.mark.skipif(shutil.which("distload") is None, reason="console script not installed")
def test_console_script():
    r = subprocess.run(["distload", "validate"], capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["valid"]
