"""Tests for the command-line driver and its exit codes."""
import json

import pytest

from csl_sim.cli import EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, build_parser, main
from csl_sim.services.run_archive import RunArchive


def write_config(tmp_path, doc):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path


def test_successful_run_writes_outputs(tmp_path):
    out = tmp_path / "out"
    config = write_config(tmp_path, {"experiment": "mach_zehnder", "seed": 7, "params": {"n_points": 5}})
    assert main(["--config", str(config), "--out", str(out), "--check"]) == EXIT_OK
    assert (out / "mach_zehnder_7.csv").exists()
    assert (out / "mach_zehnder_7.json").exists()
    assert (out / "csl_sim.log").exists()


def test_seed_override_changes_file_names(tmp_path):
    config = write_config(tmp_path, {"experiment": "appendix_a", "seed": 1, "params": {"n_rho": 2}})
    assert main(["--config", str(config), "--out", str(tmp_path), "--seed", "9"]) == EXIT_OK
    report = json.loads((tmp_path / "appendix_a_9.json").read_text())
    assert report["seed"] == 9


def test_config_errors_exit_1(tmp_path):
    config = write_config(tmp_path, {"experiment": "born_rule", "params": {"speed": 3}})
    assert main(["--config", str(config), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["--config", str(tmp_path / "absent.json"), "--out", str(tmp_path)]) == EXIT_CONFIG
    good = write_config(tmp_path, {"experiment": "appendix_a", "params": {"n_rho": 2}})
    assert main(["--config", str(good), "--out", str(tmp_path), "--threads", "0"]) == EXIT_CONFIG


def test_numeric_errors_exit_2(tmp_path):
    config = write_config(tmp_path, {"experiment": "lindblad_decay", "n_traj": 2, "params": {"p1": 1.0}})
    assert main(["--config", str(config), "--out", str(tmp_path)]) == EXIT_NUMERIC


def test_preset_rejected_for_finite_basis_exit_1(tmp_path):
    config = write_config(tmp_path, {"experiment": "lindblad_decay", "n_traj": 2})
    assert main(["--config", str(config), "--out", str(tmp_path), "--preset", "grw"]) == EXIT_CONFIG


def test_preset_scales_grid_experiment(tmp_path):
    config = write_config(tmp_path, {"experiment": "clump_grid", "params": {"n_grid": 256, "n_points": 3}})
    assert main(["--config", str(config), "--out", str(tmp_path), "--preset", "grw", "--check"]) == EXIT_OK


def test_bad_dimension_range_exit_1(tmp_path):
    for params in ({"min_dim": 1}, {"min_dim": 4, "max_dim": 3}):
        config = write_config(tmp_path, {"experiment": "appendix_a", "params": params})
        assert main(["--config", str(config), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_unexpected_errors_exit_2(tmp_path, monkeypatch):
    def broken(cfg, workers=1):
        raise IndexError("index 1 is out of bounds")

    monkeypatch.setattr("csl_sim.cli.run_experiment", broken)
    config = write_config(tmp_path, {"experiment": "appendix_a", "params": {"n_rho": 2}})
    assert main(["--config", str(config), "--out", str(tmp_path)]) == EXIT_NUMERIC
    assert "IndexError" in (tmp_path / "csl_sim.log").read_text()


def test_failed_check_exit_3_only_with_check(tmp_path):
    doc = {
        "experiment": "born_rule",
        "n_traj": 2,
        "params": {"T": 1.0, "dt": 0.01, "ruin_stake": 3, "ruin_total": 10},
    }
    config = write_config(tmp_path, doc)
    assert main(["--config", str(config), "--out", str(tmp_path), "--check"]) == EXIT_CHECK_FAILED
    assert main(["--config", str(config), "--out", str(tmp_path)]) == EXIT_OK


def test_archive_option_records_run(tmp_path):
    db = tmp_path / "runs.duckdb"
    config = write_config(tmp_path, {"experiment": "mach_zehnder", "params": {"n_points": 3}})
    assert main(["--config", str(config), "--out", str(tmp_path), "--archive", str(db), "--threads", "2"]) == EXIT_OK
    runs = RunArchive.list_runs(db_path=db)
    assert runs.height == 1
    assert runs["experiment"][0] == "mach_zehnder"


def test_parser_rejects_unknown_preset():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["--config", "x.json", "--preset", "penrose"])


if __name__ == "__main__":
    pytest.main([__file__])
