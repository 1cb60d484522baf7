import json
from pathlib import Path

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from waveinvis.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def write_config(tmp_path, **overrides):
    config = {
        "k": "0.8*pi",
        "ell": 3.0,
        "obstacle": [{"shape": "rectangle", "x0": -1.0, "x1": 1.0,
                      "y0": 0.25, "y1": 0.75}],
        "discretization": {"nx": 120, "ny": 16},
        "output_dir": str(tmp_path / "out"),
    }
    config.update(overrides)
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(config))
    return path


def test_modes_command(runner):
    result = runner.invoke(main, ["modes", "--k", "4"])
    assert result.exit_code == 0
    assert "2 propagating mode(s)" in result.output


def test_modes_cutoff_exits_2(runner):
    result = runner.invoke(main, ["modes", "--k", "pi"])
    assert result.exit_code == 2


def test_missing_config_exits_2(runner, tmp_path):
    result = runner.invoke(main, ["scatter", "--config", str(tmp_path / "nope.yaml")])
    assert result.exit_code == 2


def test_oracle_command(runner):
    result = runner.invoke(main, ["oracle", "--k", "0.8*pi", "--rho", "0.1"])
    assert result.exit_code == 0
    assert "flux defect" in result.output


def test_scatter_writes_deterministic_artifacts(runner, tmp_path):
    config = write_config(tmp_path)
    result = runner.invoke(main, ["scatter", "--config", str(config)])
    assert result.exit_code == 0, result.output
    csv_path = tmp_path / "out" / "scatter" / "scattering.csv"
    assert csv_path.exists()
    first = csv_path.read_bytes()
    result = runner.invoke(main, ["scatter", "--config", str(config)])
    assert result.exit_code == 0
    assert csv_path.read_bytes() == first


def test_cloak_command_and_log(runner, tmp_path):
    config = write_config(tmp_path, continuation={
        "functional": "full_invisibility", "aleph": 1, "seed": 0})
    result = runner.invoke(main, ["cloak", "--config", str(config)])
    assert result.exit_code == 0, result.output
    log_path = tmp_path / "out" / "cloak" / "run_log.json"
    log = json.loads(log_path.read_text())
    assert log["completed"] is True
    assert log["steps"][0]["residual"] < 1e-6
    assert (tmp_path / "out" / "cloak" / "rho_step01.vtk").exists()
    assert (tmp_path / "out" / "cloak" / "s_step01.csv").exists()


def test_verify_command(runner, tmp_path):
    config = write_config(tmp_path)
    result = runner.invoke(main, ["verify", "--config", str(config)])
    assert result.exit_code == 0, result.output
    assert "all checks passed" in result.output


def test_differential_command(runner, tmp_path):
    config = write_config(
        tmp_path,
        mu=[{"shape": "rectangle", "x0": -0.5, "x1": 0.5, "y0": 0.3,
             "y1": 0.7, "value": 1.0}])
    result = runner.invoke(main, ["differential", "--config", str(config)])
    assert result.exit_code == 0, result.output
    assert "finite-difference relative error" in result.output
    assert (tmp_path / "out" / "differential" / "differential.csv").exists()


def test_output_dir_flag_overrides_config(runner, tmp_path):
    config = write_config(tmp_path)
    alt = tmp_path / "alt"
    result = runner.invoke(main, ["scatter", "--config", str(config),
                                  "--output-dir", str(alt)])
    assert result.exit_code == 0
    assert (alt / "scatter" / "scattering.csv").exists()


def test_output_dir_env_override(runner, tmp_path, monkeypatch):
    config = write_config(tmp_path)
    env_dir = tmp_path / "env_out"
    monkeypatch.setenv("WAVEINVIS_OUTDIR", str(env_dir))
    result = runner.invoke(main, ["scatter", "--config", str(config)])
    assert result.exit_code == 0
    assert (env_dir / "scatter" / "scattering.csv").exists()


def test_degenerate_partition_exits_4(runner, tmp_path):
    # exactly as many cells as constraints: no nontrivial step exists
    cells = [{"shape": "rectangle", "x0": -0.9 + 0.6 * i, "x1": -0.3 + 0.6 * i,
              "y0": 0.25, "y1": 0.75} for i in range(3)]
    config = write_config(tmp_path, obstacle=cells, partition=cells,
                          continuation={"functional": "full_invisibility",
                                        "aleph": 1})
    result = runner.invoke(main, ["cloak", "--config", str(config)])
    assert result.exit_code == 4
