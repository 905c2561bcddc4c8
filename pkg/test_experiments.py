"""Tests for experiment configs, runners and result files."""
import json
from pathlib import Path

import numpy as np
import polars as pl
import pytest

from csl_sim.services.errors import ConfigError, ParameterError
from csl_sim.services.experiments import (
    EXPERIMENTS,
    ExperimentConfig,
    Series,
    config_from_dict,
    load_config,
    parse_config,
    relative_error,
    run_experiment,
    series_frame,
    with_overrides,
)

EXAMPLES = Path("data/config/examples")


def make_config(tmp_path, experiment, params=None, **top):
    doc = {"experiment": experiment, "out_dir": str(tmp_path), "params": params or {}}
    doc.update(top)
    return config_from_dict(doc)


def test_defaults_fill_missing_params(tmp_path):
    cfg = make_config(tmp_path, "mach_zehnder", {"t_max_rate": 2.0})
    assert cfg.params["t_max_rate"] == 2.0
    assert cfg.params["n_quad"] == 10_000
    assert cfg.seed == 0
    assert cfg.n_traj == 10_000


@pytest.mark.parametrize(
    "doc, key",
    [
        ([], "config"),
        ({"experiment": "born_rule", "colour": "red"}, "colour"),
        ({"seed": 1}, "experiment"),
        ({"experiment": "tunnelling"}, "experiment"),
        ({"experiment": "born_rule", "seed": -1}, "seed"),
        ({"experiment": "born_rule", "seed": 2**64}, "seed"),
        ({"experiment": "born_rule", "n_traj": 1}, "n_traj"),
        ({"experiment": "born_rule", "n_traj": True}, "n_traj"),
        ({"experiment": "born_rule", "params": {"gamma": 1.0}}, "params.gamma"),
        ({"experiment": "born_rule", "params": {"lambda": -1.0}}, "params.lambda"),
        ({"experiment": "born_rule", "params": {"p1": 1.5}}, "params.p1"),
        ({"experiment": "born_rule", "params": {"ruin_total": 10.5}}, "params.ruin_total"),
        ({"experiment": "born_rule", "params": {"T": "long"}}, "params.T"),
        ({"experiment": "appendix_a", "params": {"min_dim": 1}}, "params.min_dim"),
        ({"experiment": "appendix_a", "params": {"min_dim": 4, "max_dim": 3}}, "params.max_dim"),
    ],
)
def test_invalid_configs_name_the_key(doc, key):
    with pytest.raises(ConfigError) as excinfo:
        config_from_dict(doc)
    assert excinfo.value.key == key


def test_parse_and_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        parse_config("{not json")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_every_example_config_parses():
    names = set()
    for path in sorted(EXAMPLES.glob("*.json")):
        names.add(load_config(path).experiment)
    assert names == set(EXPERIMENTS)


def test_overrides_and_presets(tmp_path):
    cfg = make_config(tmp_path, "mach_zehnder", seed=3)
    changed = with_overrides(cfg, seed=11, out_dir=tmp_path / "other", preset="grw")
    assert changed.seed == 11
    assert changed.out_dir == tmp_path / "other"
    assert changed.params["lambda"] == 1e-16
    assert changed.params["a"] == 1e-5
    assert cfg.params["lambda"] == 1.0
    hermite = with_overrides(make_config(tmp_path, "hermite_check"), preset="grw")
    assert hermite.params["a"] == 1e-5
    assert "lambda" not in hermite.params
    with pytest.raises(ConfigError):
        with_overrides(cfg, preset="unknown")


@pytest.mark.parametrize("experiment", ["born_rule", "lindblad_decay", "appendix_a"])
def test_finite_basis_experiments_reject_presets(tmp_path, experiment):
    with pytest.raises(ConfigError) as excinfo:
        with_overrides(make_config(tmp_path, experiment), preset="grw")
    assert excinfo.value.key == "preset"


def test_clump_grid_runs_in_physical_units(tmp_path):
    cfg = with_overrides(make_config(tmp_path, "clump_grid", {"n_grid": 256, "n_points": 5}, n_traj=2), preset="grw")
    report = run_experiment(cfg)
    assert report.passed, report.failed_checks()
    frame = pl.read_csv(report.csv_path)
    # times run to 5 / (lambda N^2) seconds
    assert frame["t"][-1] == pytest.approx(5e16)


def test_relative_error_uses_absolute_error_at_zero():
    assert relative_error([1.1, 0.5], [1.0, 0.0]) == pytest.approx([0.1, 0.5])


def test_series_frame_is_full_precision():
    series = Series("t", np.array([0.1]), np.array([1.0 / 3.0]), np.array([0.3]))
    frame = series_frame(series)
    assert frame.columns == ["t", "value", "oracle", "rel_err"]
    assert float(frame["value"][0]) == 1.0 / 3.0


@pytest.mark.parametrize(
    "experiment, params",
    [
        ("mach_zehnder", {"n_points": 11}),
        ("two_slit", {"n_points": 21}),
        ("hermite_check", {"n_grid": 41}),
        ("appendix_a", {"n_rho": 20}),
        ("clump_grid", {"n_grid": 256, "n_points": 5}),
    ],
)
def test_deterministic_experiments_pass(tmp_path, experiment, params):
    report = run_experiment(make_config(tmp_path, experiment, params, n_traj=2))
    assert report.passed, report.failed_checks()
    frame = pl.read_csv(report.csv_path)
    assert frame.columns == [EXPERIMENTS[experiment].axis, "value", "oracle", "rel_err"]
    doc = json.loads(report.json_path.read_text())
    assert doc["passed"] is True
    assert doc["config"]["experiment"] == experiment
    assert set(doc) >= {"summary", "oracle", "checks", "wall_time_s", "version", "seed"}


def test_clump_grid_reports_physical_times(tmp_path):
    report = run_experiment(make_config(tmp_path, "clump_grid", {"n_grid": 256, "n_points": 3}, n_traj=2))
    assert report.summary["gold_cube_time_s"] == pytest.approx(1.0)
    assert report.summary["single_nucleon_time_s"] == pytest.approx(1e16)
    assert report.summary["rate_coefficient_at_L_a"] == pytest.approx(0.2212, abs=5e-5)


def test_packet_equilibrium_deterministic_checks(tmp_path):
    cfg = make_config(tmp_path, "packet_equilibrium", {"noise_steps": 5000, "n_points": 11}, n_traj=500)
    report = run_experiment(cfg)
    for name in (
        "riccati_rk4_vs_closed_form_1e-8",
        "riccati_converged_1e-6",
        "riccati_rate_within_2pct",
        "noise_round_trip_1e-10",
        "model_noise_reproduces_mean_x_1e-8",
    ):
        assert report.checks[name], name


def test_packet_msd_cubic_ratio(tmp_path):
    report = run_experiment(make_config(tmp_path, "packet_msd", {"n_points": 2}, n_traj=200))
    assert report.checks["cubic_dominance_1pct"]
    assert report.summary["cubic_ratio"]["100/alpha"] == pytest.approx(1.0303, abs=1e-3)


def test_lindblad_decay_needs_a_superposition(tmp_path):
    with pytest.raises(ParameterError):
        run_experiment(make_config(tmp_path, "lindblad_decay", {"p1": 1.0}, n_traj=2))


def test_reruns_are_byte_identical(tmp_path):
    params = {"T": 2.0, "dt": 0.01, "ruin_stake": 3, "ruin_total": 10}
    first = run_experiment(make_config(tmp_path / "a", "born_rule", params, n_traj=300, seed=5))
    second = run_experiment(make_config(tmp_path / "b", "born_rule", params, n_traj=300, seed=5), workers=3)
    assert first.csv_path.read_bytes() == second.csv_path.read_bytes()
    assert first.summary == second.summary
    third = run_experiment(make_config(tmp_path / "c", "born_rule", params, n_traj=300, seed=6))
    assert third.csv_path.read_bytes() != first.csv_path.read_bytes()


def test_born_rule_checks_collapse_completion(tmp_path):
    params = {"T": 25.0, "dt": 0.01, "ruin_stake": 3, "ruin_total": 10}
    report = run_experiment(make_config(tmp_path / "long", "born_rule", params, n_traj=500, seed=11))
    assert report.summary["collapsed_fraction"] >= 0.99
    assert report.checks["collapse_complete_99pct"]

    early = run_experiment(make_config(tmp_path / "short", "born_rule", {**params, "T": 0.5}, n_traj=500, seed=11))
    assert early.summary["collapsed_fraction"] < 0.99
    assert not early.checks["collapse_complete_99pct"]
    assert "collapse_complete_99pct" in early.failed_checks()


def test_output_names_follow_experiment_and_seed(tmp_path):
    report = run_experiment(make_config(tmp_path, "appendix_a", {"n_rho": 3}, seed=42))
    assert report.csv_path == tmp_path / "appendix_a_42.csv"
    assert report.json_path == tmp_path / "appendix_a_42.json"
    assert isinstance(report.config, ExperimentConfig)


if __name__ == "__main__":
    pytest.main([__file__])
