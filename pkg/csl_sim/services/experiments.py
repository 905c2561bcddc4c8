"""
Experiment driver
=================
Parses JSON experiment configs, runs the named experiment against the
physics services and writes `<experiment>_<seed>.csv` plus
`<experiment>_<seed>.json` into the output directory.

Every CSV has the columns (t | theta | X | trial), value, oracle, rel_err;
numbers are written with 17 significant digits so reruns are byte-identical.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import polars as pl
from scipy import stats

from csl_sim import __version__

from . import clump_dynamics as clump
from . import discrete_collapse as dc
from . import gaussian_packet as gp
from . import hermite_noise as hn
from . import interference as itf
from .errors import ConfigError, ParameterError
from .presets import PresetTable
from .stochastic import MAX_SEED, NoisePath, RngStream, sample_noise_path

logger = logging.getLogger(__name__)

TOP_LEVEL_KEYS = {"experiment", "seed", "n_traj", "out_dir", "params"}
DEFAULT_N_TRAJ = 10_000
DEFAULT_OUT_DIR = "output"
PRESET_KEYS = {"lambda": "lambda", "a": "a", "M": "M"}


# ---------------------------------------------------------------------------
# Config and report types
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    experiment: str
    params: Dict[str, float]
    seed: int = 0
    n_traj: int = DEFAULT_N_TRAJ
    out_dir: Path = Path(DEFAULT_OUT_DIR)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment,
            "params": dict(self.params),
            "seed": self.seed,
            "n_traj": self.n_traj,
            "out_dir": str(self.out_dir),
        }


@dataclass
class Series:
    """One CSV table: abscissa plus value/oracle columns."""

    axis: str
    points: np.ndarray
    value: np.ndarray
    oracle: np.ndarray

    def rel_err(self) -> np.ndarray:
        return relative_error(self.value, self.oracle)

    def max_rel_err(self) -> float:
        errors = self.rel_err()
        return float(np.max(errors)) if errors.size else 0.0


@dataclass
class ExperimentOutcome:
    series: Series
    summary: Dict[str, Any]
    oracle: Dict[str, Any]
    checks: Dict[str, bool]


@dataclass
class RunReport:
    config: ExperimentConfig
    summary: Dict[str, Any]
    oracle: Dict[str, Any]
    checks: Dict[str, bool]
    max_rel_err: float
    wall_time: float
    version: str = __version__
    csv_path: Optional[Path] = None
    json_path: Optional[Path] = None

    @property
    def experiment(self) -> str:
        return self.config.experiment

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def failed_checks(self) -> List[str]:
        return [name for name, ok in self.checks.items() if not ok]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "summary": self.summary,
            "oracle": self.oracle,
            "checks": self.checks,
            "passed": self.passed,
            "max_rel_err": self.max_rel_err,
            "wall_time_s": self.wall_time,
            "version": self.version,
            "seed": self.seed,
        }


@dataclass
class ExperimentSpec:
    name: str
    axis: str
    defaults: Dict[str, float]
    runner: Callable[[ExperimentConfig, int], ExperimentOutcome]
    positive: Sequence[str] = ()
    integers: Sequence[str] = ()
    unit_interval: Sequence[str] = ()
    description: str = ""
    # lengths in units of a and times in units of 1/alpha or 1/(lambda N^2)
    accepts_preset: bool = False


def relative_error(value, oracle) -> np.ndarray:
    """|value - oracle| / |oracle|, or the absolute error where the oracle is zero."""
    value = np.asarray(value, dtype=float)
    oracle = np.asarray(oracle, dtype=float)
    diff = np.abs(value - oracle)
    scale = np.abs(oracle)
    safe = np.where(scale > 0, scale, 1.0)
    return np.where(scale > 0, diff / safe, diff)


def _clean(value: Any) -> Any:
    """Plain JSON types for summaries."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_clean(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return value


def _clump_params(p: Dict[str, float]) -> clump.ClumpParams:
    return clump.ClumpParams(N=int(p.get("N", 1)), M=p.get("M", 1.0), lam=p["lambda"], a=p.get("a", 1.0))


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

def _run_born_rule(cfg: ExperimentConfig, workers: int) -> ExperimentOutcome:
    p = cfg.params
    sup = dc.DiscreteSuperposition.from_probabilities([p["a1"], p["a2"]], [p["p1"], 1.0 - p["p1"]], p["lambda"])
    checkpoints = np.linspace(0.0, p["T"], int(p["n_checkpoints"]) + 1)[1:]
    ensemble = dc.trajectory_ensemble(sup, p["T"], p["dt"], cfg.n_traj, cfg.seed, workers, record_times=checkpoints)
    frequencies = np.bincount(ensemble.outcomes, minlength=2) / ensemble.n_traj
    mean_x, se = dc.martingale_mean(ensemble)
    collapsed = float(np.mean(ensemble.x_final.max(axis=1) > 0.999))
    ks = stats.kstest(ensemble.B_final, lambda b: dc.final_B_cdf(sup, p["T"], b))

    ruin = dc.gamblers_ruin_ensemble(
        int(p["ruin_stake"]), int(p["ruin_total"]), cfg.n_traj, cfg.seed, workers
    )
    series = Series(
        axis="t",
        points=checkpoints,
        value=ensemble.x_recorded[:, :, 0].mean(axis=0),
        oracle=np.full(checkpoints.size, sup.probabilities[0]),
    )
    martingale_se = np.sqrt(p["p1"] * (1.0 - p["p1"]) / cfg.n_traj)
    return ExperimentOutcome(
        series=series,
        summary={
            "frequencies": frequencies,
            "mean_x_final": mean_x,
            "mean_x_final_se": se,
            "collapsed_fraction": collapsed,
            "B_final_ks_statistic": float(ks.statistic),
            "gamblers_ruin": ruin.to_dict(),
        },
        oracle={"probabilities": sup.probabilities, "ruin_win_fraction": ruin.win_fraction_oracle},
        checks={
            "born_frequency_within_0.02": bool(abs(frequencies[0] - p["p1"]) <= 0.02),
            "martingale_within_5se": bool(abs(mean_x[0] - p["p1"]) <= 5.0 * martingale_se),
            "B_final_ks_below_0.02": bool(ks.statistic < 0.02),
            "ruin_win_fraction_within_0.02": bool(abs(ruin.win_fraction - ruin.win_fraction_oracle) <= 0.02),
            "collapse_complete_99pct": bool(collapsed >= 0.99),
        },
    )


def _run_lindblad_decay(cfg: ExperimentConfig, workers: int) -> ExperimentOutcome:
    p = cfg.params
    lam = p["lambda"]
    if not 0.0 < p["p1"] < 1.0 or p["a1"] == p["a2"]:
        raise ParameterError("lindblad_decay needs 0 < p1 < 1 and distinct eigenvalues")
    sup = dc.DiscreteSuperposition.from_probabilities([p["a1"], p["a2"]], [p["p1"], 1.0 - p["p1"]], lam)
    A = np.diag(sup.eigenvalues).astype(complex)
    H = np.zeros_like(A)
    times = np.linspace(0.0, p["t_max"], int(p["n_points"]))
    rho = dc.analytic_rho(sup, 0.0)
    numeric = []
    previous = 0.0
    for t in times:
        if t > previous:
            rho = dc.lindblad_evolve(rho, H, [A], lam, t - previous, p["dt"])
        numeric.append(rho.entries[0, 1])
        previous = t
    numeric = np.array(numeric)
    analytic = np.array([dc.analytic_rho(sup, t).entries[0, 1] for t in times])
    lindblad_err = float(np.max(np.abs(numeric - analytic)))

    decay_fit = float(-np.polyfit(times, np.log(np.abs(numeric)), 1)[0])
    decay_oracle = 0.5 * lam * (sup.eigenvalues[0] - sup.eigenvalues[1]) ** 2

    trajectory_errors = {}
    for lam_t in (0.5, 1.0, 2.0):
        T = lam_t / lam
        ensemble = dc.trajectory_ensemble(sup, T, min(p["traj_dt"], T / 10.0), cfg.n_traj, cfg.seed, workers)
        estimate = dc.ensemble_rho(ensemble)
        trajectory_errors[str(lam_t)] = float(np.max(np.abs(estimate - dc.analytic_rho(sup, T).entries)))

    return ExperimentOutcome(
        series=Series("t", times, np.abs(numeric), np.abs(analytic)),
        summary={
            "lindblad_max_abs_err": lindblad_err,
            "decay_exponent_fit": decay_fit,
            "trajectory_rho_max_abs_err": trajectory_errors,
        },
        oracle={"decay_exponent": decay_oracle},
        checks={
            "lindblad_vs_closed_form_1e-8": lindblad_err < 1e-8,
            "decay_exponent_1e-6": abs(decay_fit - decay_oracle) <= 1e-6 * decay_oracle,
            "trajectory_rho_within_0.05": all(err < 0.05 for err in trajectory_errors.values()),
        },
    )


def _run_clump_grid(cfg: ExperimentConfig, workers: int) -> ExperimentOutcome:
    p = cfg.params
    params = _clump_params(p)
    rate = params.collapse_rate
    grid = clump.make_grid(int(p["n_grid"]), p["extent_over_a"] * params.a)
    width = p["width_over_a"] * params.a
    rho0 = clump.gaussian_pure_state(grid, 0.0, width)
    times = np.linspace(0.0, p["t_max_rate"] / rate, int(p["n_points"]))
    lengths = {"a": params.a, "4a": 4.0 * params.a}
    overlap0 = {name: clump.modular_overlap(rho0, L) for name, L in lengths.items()}

    ratios = {name: [] for name in lengths}
    diagonal_change = 0.0
    for t in times:
        rho_t = clump.grid_evolve_cm(rho0, params, t, p["dt_rate"] / rate, include_kinetic=False)
        diagonal_change = max(diagonal_change, float(np.max(np.abs(rho_t.diagonal() - rho0.diagonal()))))
        for name, L in lengths.items():
            ratios[name].append(clump.modular_overlap(rho_t, L) / overlap0[name])
    oracles = {name: np.exp(-clump.modular_overlap_rate(L, params) * times) for name, L in lengths.items()}
    errors = {name: float(np.max(relative_error(ratios[name], oracles[name]))) for name in lengths}

    grw = PresetTable().get("grw")
    gold = clump.ClumpParams(N=100_000_000, M=grw["M"], lam=grw["lambda"], a=grw["a"])
    nucleon = replace(gold, N=1)
    far = 1e3 * grw["a"]
    gold_time = clump.characteristic_time(far, gold)
    nucleon_time = clump.characteristic_time(far, nucleon)
    coefficient = clump.modular_overlap_rate(params.a, params) / params.collapse_rate

    return ExperimentOutcome(
        series=Series("t", times, np.array(ratios["a"]), oracles["a"]),
        summary={
            "overlap_ratio_max_rel_err": errors,
            "overlap_at_t0": overlap0,
            "max_diagonal_change": diagonal_change,
            "rate_coefficient_at_L_a": coefficient,
            "gold_cube_time_s": gold_time,
            "single_nucleon_time_s": nucleon_time,
        },
        oracle={
            "rate_coefficient_at_L_a": -np.expm1(-0.25),
            "gold_cube_time_s": 1.0,
            "single_nucleon_time_s": 1e16,
            "overlap_at_t0": {name: float(np.exp(-(L**2) / (8.0 * width**2))) for name, L in lengths.items()},
        },
        checks={
            "overlap_decay_1e-4": all(err < 1e-4 for err in errors.values()),
            "diagonal_invariance_1e-12": diagonal_change < 1e-12,
            "coefficient_0.2212": abs(coefficient - 0.2212) < 5e-5,
            "gold_cube_1s": abs(gold_time - 1.0) < 1e-12,
            "single_nucleon_1e16s": abs(nucleon_time / 1e16 - 1.0) < 1e-12,
        },
    )


def _run_packet_equilibrium(cfg: ExperimentConfig, workers: int) -> ExperimentOutcome:
    p = cfg.params
    params = _clump_params(p)
    derived = gp.derived_params(params)
    alpha = derived.alpha
    A_eq = derived.A_eq

    A0 = p["A0_over_Aeq"] * A_eq.real + 0j
    times = np.linspace(0.0, p["t_max_alpha"] / alpha, int(p["n_points"]))
    numeric = gp.riccati_integrate(A0, params, times, p["riccati_dt_alpha"] / alpha)
    closed = gp.riccati_A(times, A0, params)

    convergence = {}
    fits = {}
    fit_times = np.linspace(3.0 / alpha, 8.0 / alpha, 26)
    for scale in (1e-2, 1e-1, 10.0, 1e2):
        for phase in (-np.pi / 4, 0.0, np.pi / 4):
            start = scale * abs(A_eq) * np.exp(1j * phase)
            if start.real <= 0:
                continue
            key = f"{scale:g}@{phase:+.3f}"
            convergence[key] = float(abs(gp.riccati_A(20.0 / alpha, start, params) - A_eq) / abs(A_eq))
            fits[key] = gp.riccati_rate_fit(start, params, fit_times) / (2.0 * alpha)

    T = p["T_alpha"] / alpha
    momentum = gp.momentum_variance_monte_carlo(params, T, cfg.n_traj, cfg.seed, workers=workers)

    n_noise = int(p["noise_steps"])
    v = sample_noise_path(gp.MAX_ALPHA_DT / alpha, n_noise, params.lam, RngStream(cfg.seed, cfg.n_traj))
    w = gp.w_from_v(v, params)
    round_trip = float(np.max(np.abs(gp.w_from_v(gp.v_from_w(w, params), params).increments - w.increments)))

    head = NoisePath(dt=v.dt, increments=v.increments[: min(n_noise, 2000)], lam=v.lam)
    trajectory = gp.packet_trajectory_from_v(head, params)
    from_b = gp.mean_x_from_b(gp.b_from_w(trajectory.w_path, params), params)
    scale = max(float(np.max(np.abs(trajectory.meanX))), np.sqrt(derived.equilibrium_variance))
    b_err = float(np.max(np.abs(from_b - trajectory.meanX)) / scale)

    return ExperimentOutcome(
        series=Series("t", times, np.abs(numeric), np.abs(closed)),
        summary={
            "riccati_rel_dev_at_20_over_alpha": convergence,
            "riccati_rate_over_2alpha": fits,
            "momentum": momentum,
            "noise_round_trip_max_abs_err": round_trip,
            "model_noise_mean_x_rel_err": b_err,
            "alpha": alpha,
            "lambda_tilde": derived.lambda_tilde,
        },
        oracle={
            "A_eq": complex(A_eq),
            "momentum_variance": momentum["variance_oracle"],
            "equilibrium_spread": float(np.sqrt(derived.equilibrium_variance)),
        },
        checks={
            "riccati_rk4_vs_closed_form_1e-8": float(np.max(relative_error(np.abs(numeric), np.abs(closed)))) < 1e-8,
            "riccati_converged_1e-6": all(d < 1e-6 for d in convergence.values()),
            "riccati_rate_within_2pct": all(abs(f - 1.0) < 0.02 for f in fits.values()),
            "momentum_mean_within_5se": abs(momentum["mean"]) <= 5.0 * momentum["standard_error"],
            "momentum_variance_within_5pct": abs(momentum["variance"] / momentum["variance_oracle"] - 1.0) < 0.05,
            "noise_round_trip_1e-10": round_trip < 1e-10,
            "model_noise_reproduces_mean_x_1e-8": b_err < 1e-8,
        },
    )


def _run_packet_msd(cfg: ExperimentConfig, workers: int) -> ExperimentOutcome:
    p = cfg.params
    params = _clump_params(p)
    alpha = params.alpha
    n_points = int(p["n_points"])
    times = np.linspace(0.0, p["t_max_alpha"] / alpha, n_points + 1)[1:]
    check_times = {"1/alpha": 1.0 / alpha, "3/alpha": 3.0 / alpha}

    values = np.array([gp.msd_monte_carlo(params, t, cfg.n_traj, cfg.seed, workers=workers) for t in times])
    oracle = np.array([gp.ensemble_msd(params, t) for t in times])
    msd_errors = {
        name: float(relative_error(gp.msd_monte_carlo(params, t, cfg.n_traj, cfg.seed, workers=workers), gp.ensemble_msd(params, t)))
        for name, t in check_times.items()
    }

    cubic = {}
    for label in (100.0, float(p["cubic_alpha"])):
        t = label / alpha
        cubic[f"{label:g}/alpha"] = gp.ensemble_msd(params, t) / (alpha**2 * t**3 / (3.0 * params.m))
    cubic_key = f"{float(p['cubic_alpha']):g}/alpha"

    return ExperimentOutcome(
        series=Series("t", times, values, oracle),
        summary={"msd_rel_err": msd_errors, "cubic_ratio": cubic},
        oracle={"equilibrium_variance": gp.derived_params(params).equilibrium_variance},
        checks={
            "msd_within_5pct": all(err < 0.05 for err in msd_errors.values()),
            "cubic_dominance_1pct": abs(cubic[cubic_key] - 1.0) < 0.01,
        },
    )


def _run_mach_zehnder(cfg: ExperimentConfig, workers: int) -> ExperimentOutcome:
    p = cfg.params
    params = _clump_params(p)
    times = np.linspace(0.0, p["t_max_rate"] / params.collapse_rate, int(p["n_points"]))
    separation = p["separation_over_a"] * params.a
    values = np.array([itf.mach_zehnder_quadrature(t, params, separation, int(p["n_quad"])) for t in times])
    oracle = itf.mach_zehnder_prob(times, params)
    error = float(np.max(relative_error(values, oracle)))

    arms = itf.mach_zehnder_packets(lambda X, t: 1.0, separation)
    screen = np.array([itf.screen_density(0.0, t, arms, params, int(p["n_quad"])) for t in times])
    screen_err = float(np.max(np.abs(screen - values)))
    return ExperimentOutcome(
        series=Series("t", times, values, oracle),
        summary={"max_rel_err": error, "collapse_rate": params.collapse_rate, "screen_density_max_abs_err": screen_err},
        oracle={"p_up_limit": 0.5},
        checks={
            "quadrature_vs_closed_form_1e-6": error < 1e-6,
            "screen_density_matches_port_1e-12": screen_err < 1e-12,
        },
    )


def _run_two_slit(cfg: ExperimentConfig, workers: int) -> ExperimentOutcome:
    p = cfg.params
    params = _clump_params(p)
    b = p["b_over_a"] * params.a
    t = p["t_rate"] / params.collapse_rate
    cfg_slit = itf.SlitConfig(b=b, k=p["kb"] / b, L=p["L_over_b"] * b, params=params, A_amp=p["A_amp"])
    thetas = np.linspace(-2.0 * cfg_slit.fringe_period, 2.0 * cfg_slit.fringe_period, int(p["n_points"]))
    values = itf.two_slit_intensity_quadrature(thetas, t, cfg_slit, int(p["n_quad"]))
    oracle = itf.two_slit_intensity(thetas, t, cfg_slit)
    pattern_err = float(np.max(relative_error(values, oracle)))

    rate = itf.two_slit_rate(cfg_slit)
    limits = {}
    for ratio in (0.01, 100.0):
        limit_slit = itf.SlitConfig(
            b=ratio * params.a, k=p["kb"] / (ratio * params.a), L=100.0 * ratio * params.a, params=params
        )
        expected = params.collapse_rate * (ratio**2 / 3.0 if ratio < 1 else 1.0)
        limits[f"{ratio:g}"] = itf.two_slit_rate(limit_slit) / expected
    visibility = itf.fringe_visibility(t, cfg_slit)

    return ExperimentOutcome(
        series=Series("theta", thetas, values, oracle),
        summary={
            "rate": rate,
            "rate_over_limit": limits,
            "visibility": visibility,
            "max_rel_err": pattern_err,
        },
        oracle={"visibility": float(np.exp(-rate * t))},
        checks={
            "pattern_quadrature_1e-6": pattern_err < 1e-6,
            "rate_limits_within_1pct": all(abs(r - 1.0) < 0.01 for r in limits.values()),
            "visibility_matches_survival": abs(visibility - np.exp(-rate * t)) < 1e-9,
        },
    )


def _run_hermite_check(cfg: ExperimentConfig, workers: int) -> ExperimentOutcome:
    p = cfg.params
    a = p["a"]
    n_max = int(p["n_max"])
    reach = p["X_range_over_a"] * a
    axis = np.linspace(-reach, reach, int(p["n_grid"]))
    X, Xp = np.meshgrid(axis, axis, indexing="ij")
    kernel = hn.kernel_reconstruction(X, Xp, n_max, a)
    completeness = float(np.max(np.abs(kernel - np.exp(-((X - Xp) ** 2) / (4.0 * a**2)))))

    basis = hn.HermiteBasis(a=a, n_max=40)
    orthonormality = float(np.max(np.abs(basis.orthonormality_matrix() - np.eye(41))))

    small = np.linspace(-p["small_range_over_a"] * a, p["small_range_over_a"] * a, 21)
    S, Sp = np.meshgrid(small, small, indexing="ij")
    off = S != Sp
    truncated = 0.5 * np.sum(hn.generator_terms(S, Sp, 1, a), axis=0)
    lowest_order = (S - Sp) ** 2 / (4.0 * a**2)
    small_err = float(np.max(np.abs(truncated[off] - lowest_order[off]) / lowest_order[off]))

    offsets = np.logspace(-3, -2, 11) * a
    orders = hn.generator_terms(offsets, np.zeros_like(offsets), 1, a)
    slopes = {f"n={n}": float(np.polyfit(np.log(offsets / a), np.log(orders[n]), 1)[0]) for n in (0, 1)}

    params = clump.ClumpParams(N=1, M=1.0, lam=1.0, a=a)
    rho0 = clump.gaussian_pure_state(axis, 0.0, 0.3 * a)
    exact = clump.grid_evolve_cm(rho0, params, 1.0 / params.collapse_rate, 0.01)
    hermite = hn.evolve_truncated(rho0, n_max, params, 1.0 / params.collapse_rate)
    evolution_diff = float(np.max(np.abs(exact.entries - hermite.entries)))

    line = axis
    values = hn.kernel_reconstruction(line, -line, n_max, a)
    oracle = np.exp(-((2.0 * line) ** 2) / (4.0 * a**2))
    return ExperimentOutcome(
        series=Series("X", line, values, oracle),
        summary={
            "completeness_max_abs_err": completeness,
            "orthonormality_max_dev": orthonormality,
            "lowest_order_generator_rel_err": small_err,
            "small_X_power_law": slopes,
            "evolution_vs_exact_max_abs_diff": evolution_diff,
        },
        oracle={"kernel_at_a_minus_a": float(np.exp(-1.0)), "small_X_power_law": {"n=0": 4.0, "n=1": 2.0}},
        checks={
            "completeness_1e-8": completeness < 1e-8,
            "orthonormality_1e-8": orthonormality < 1e-8,
            "lowest_order_generator_1e-3": small_err < 1e-3,
            "n0_term_quartic_0.1": abs(slopes["n=0"] - 4.0) < 0.1,
            "truncated_evolution_1e-6": evolution_diff < 1e-6,
        },
    )


def _random_density_matrix(gen: np.random.Generator, dim: int) -> dc.DensityMatrixFinite:
    G = gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))
    rho = G @ G.conj().T
    rho = rho / np.trace(rho).real
    return dc.DensityMatrixFinite(0.5 * (rho + rho.conj().T))


def _run_appendix_a(cfg: ExperimentConfig, workers: int) -> ExperimentOutcome:
    p = cfg.params
    lam = p["lambda"]
    n_rho = int(p["n_rho"])
    gen = RngStream(cfg.seed, 0).generator()
    family_defects = []
    offdiag_positive = []
    drift = 0.0
    for _ in range(n_rho):
        dim = int(gen.integers(int(p["min_dim"]), int(p["max_dim"]) + 1))
        rho = _random_density_matrix(gen, dim)
        alphas = gen.standard_normal(dim)
        R, V = dc.diagonal_fair_game_pair(alphas, rho, lam)
        family_defects.append(float(np.max(np.abs(dc.fair_game_defect(R, V, rho, lam)))))
        x = np.diag(rho.entries).real
        for c in (0.0, p["c"]):
            drift = max(drift, float(np.max(np.abs(dc.x_ito_drift(alphas, x, lam, c)))))
        R_off = R.copy()
        R_off[0, 1] = R_off[1, 0] = 1e-3
        offdiag_positive.append(bool(np.max(dc.fair_game_defect(R_off, V, rho, lam)) > 0))

    r = p["probe_r"]
    R_probe = np.zeros((2, 2))
    R_probe[0, 1] = R_probe[1, 0] = r
    probe = dc.fair_game_defect(R_probe, np.zeros((2, 2)), dc.DensityMatrixFinite(np.diag([0.0, 1.0])), lam)
    probe_err = float(abs(probe[0] - lam * r**2))

    trials = np.arange(n_rho, dtype=float)
    values = np.array(family_defects)
    return ExperimentOutcome(
        series=Series("trial", trials, values, np.zeros(n_rho)),
        summary={
            "max_family_defect": float(values.max()),
            "max_ito_drift": drift,
            "probe_defect": float(probe[0]),
            "offdiagonal_detected_fraction": float(np.mean(offdiag_positive)),
        },
        oracle={"probe_defect": lam * r**2},
        checks={
            "diagonal_family_zero_1e-10": float(values.max()) < 1e-10,
            "probe_equals_lambda_r2_1e-12": probe_err < 1e-12,
            "offdiagonal_always_detected": all(offdiag_positive),
            "ito_drift_zero_1e-10": drift < 1e-10,
        },
    )


PHYSICAL = {"N": 1, "M": 1.0, "lambda": 1.0, "a": 1.0}

EXPERIMENTS: Dict[str, ExperimentSpec] = {
    spec.name: spec
    for spec in (
        ExperimentSpec(
            "born_rule",
            "t",
            {"p1": 0.3, "a1": 0.0, "a2": 1.0, "lambda": 1.0, "T": 25.0, "dt": 0.01,
             "n_checkpoints": 10, "ruin_stake": 30, "ruin_total": 100},
            _run_born_rule,
            positive=("lambda", "T", "dt", "n_checkpoints", "ruin_stake", "ruin_total"),
            integers=("n_checkpoints", "ruin_stake", "ruin_total"),
            unit_interval=("p1",),
            description="Born-rule frequencies, martingale mean and the gambler's ruin analogue",
        ),
        ExperimentSpec(
            "lindblad_decay",
            "t",
            {"p1": 0.5, "a1": 0.0, "a2": 1.0, "lambda": 1.0, "t_max": 2.0, "dt": 1e-4,
             "n_points": 21, "traj_dt": 0.01},
            _run_lindblad_decay,
            positive=("lambda", "t_max", "dt", "n_points", "traj_dt"),
            integers=("n_points",),
            unit_interval=("p1",),
            description="Off-diagonal decay: Lindblad RK4 and trajectory ensembles vs closed form",
        ),
        ExperimentSpec(
            "clump_grid",
            "t",
            {**PHYSICAL, "n_grid": 512, "extent_over_a": 64.0, "width_over_a": 4.0, "t_max_rate": 5.0, "n_points": 11,
             "dt_rate": 0.01},
            _run_clump_grid,
            positive=("N", "M", "lambda", "a", "n_grid", "extent_over_a", "width_over_a", "t_max_rate", "n_points",
                      "dt_rate"),
            integers=("N", "n_grid", "n_points"),
            accepts_preset=True,
            description="Modular-momentum overlap decay and diagonal invariance on a grid",
        ),
        ExperimentSpec(
            "packet_equilibrium",
            "t",
            {**PHYSICAL, "A0_over_Aeq": 10.0, "t_max_alpha": 5.0, "n_points": 51, "riccati_dt_alpha": 1e-3,
             "T_alpha": 2.0, "noise_steps": 100_000},
            _run_packet_equilibrium,
            positive=("N", "M", "lambda", "a", "A0_over_Aeq", "t_max_alpha", "n_points", "riccati_dt_alpha",
                      "T_alpha", "noise_steps"),
            integers=("N", "n_points", "noise_steps"),
            accepts_preset=True,
            description="Riccati approach to equilibrium, momentum Brownian motion, noise transform round trip",
        ),
        ExperimentSpec(
            "packet_msd",
            "t",
            {**PHYSICAL, "t_max_alpha": 3.0, "n_points": 6, "cubic_alpha": 1000.0},
            _run_packet_msd,
            positive=("N", "M", "lambda", "a", "t_max_alpha", "n_points", "cubic_alpha"),
            integers=("N", "n_points"),
            accepts_preset=True,
            description="Ensemble mean-squared displacement vs the closed-form law",
        ),
        ExperimentSpec(
            "mach_zehnder",
            "t",
            {**PHYSICAL, "t_max_rate": 5.0, "n_points": 51, "separation_over_a": 50.0, "n_quad": 10_000},
            _run_mach_zehnder,
            positive=("N", "M", "lambda", "a", "t_max_rate", "n_points", "separation_over_a", "n_quad"),
            integers=("N", "n_points", "n_quad"),
            accepts_preset=True,
            description="Dark-port probability: quadrature vs closed form",
        ),
        ExperimentSpec(
            "two_slit",
            "theta",
            {**PHYSICAL, "b_over_a": 1.0, "kb": 100.0, "L_over_b": 1000.0, "t_rate": 1.0, "A_amp": 1.0,
             "n_points": 101, "n_quad": 10_000},
            _run_two_slit,
            positive=("N", "M", "lambda", "a", "b_over_a", "kb", "L_over_b", "t_rate", "A_amp", "n_points", "n_quad"),
            integers=("N", "n_points", "n_quad"),
            accepts_preset=True,
            description="Two-slit pattern damping, rate limits and fringe visibility",
        ),
        ExperimentSpec(
            "hermite_check",
            "X",
            {"a": 1.0, "n_max": 60, "n_grid": 101, "X_range_over_a": 2.0, "small_range_over_a": 0.03},
            _run_hermite_check,
            positive=("a", "n_max", "n_grid", "X_range_over_a", "small_range_over_a"),
            integers=("n_max", "n_grid"),
            accepts_preset=True,
            description="Hermite completeness, orthonormality and the lowest-order generator",
        ),
        ExperimentSpec(
            "appendix_a",
            "trial",
            {"lambda": 1.0, "n_rho": 100, "min_dim": 2, "max_dim": 5, "probe_r": 0.1, "c": 0.7},
            _run_appendix_a,
            positive=("lambda", "n_rho", "min_dim", "max_dim", "probe_r"),
            integers=("n_rho", "min_dim", "max_dim"),
            description="Fair-game defect of the diagonal family and off-diagonal probes",
        ),
    )
}


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _validate_params(spec: ExperimentSpec, raw: Dict[str, Any]) -> Dict[str, float]:
    unknown = sorted(set(raw) - set(spec.defaults))
    if unknown:
        raise ConfigError(f"params.{unknown[0]}", f"unknown parameter for experiment '{spec.name}'")
    params = dict(spec.defaults)
    for key, value in raw.items():
        if not _is_number(value) or not np.isfinite(value):
            raise ConfigError(f"params.{key}", f"expected a finite number, got {value!r}")
        params[key] = value
    for key in spec.positive:
        if not params[key] > 0:
            raise ConfigError(f"params.{key}", f"must be > 0, got {params[key]}")
    for key in spec.integers:
        if int(params[key]) != params[key]:
            raise ConfigError(f"params.{key}", f"must be an integer, got {params[key]}")
        params[key] = int(params[key])
    for key in spec.unit_interval:
        if not 0.0 <= params[key] <= 1.0:
            raise ConfigError(f"params.{key}", f"must lie in [0, 1], got {params[key]}")
    if "min_dim" in params:
        if params["min_dim"] < 2:
            raise ConfigError("params.min_dim", f"must be >= 2 for an off-diagonal entry, got {params['min_dim']}")
        if params["min_dim"] > params["max_dim"]:
            raise ConfigError("params.max_dim", f"must be >= min_dim, got {params['max_dim']} < {params['min_dim']}")
    return params


def config_from_dict(doc: Any) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config", "top level must be a JSON object")
    unknown = sorted(set(doc) - TOP_LEVEL_KEYS)
    if unknown:
        raise ConfigError(unknown[0], "unknown configuration key")
    if "experiment" not in doc:
        raise ConfigError("experiment", "missing required key")
    name = doc["experiment"]
    if name not in EXPERIMENTS:
        raise ConfigError("experiment", f"unknown experiment {name!r}, expected one of {sorted(EXPERIMENTS)}")

    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < MAX_SEED:
        raise ConfigError("seed", f"must be an integer in [0, 2^64), got {seed!r}")
    n_traj = doc.get("n_traj", DEFAULT_N_TRAJ)
    if not isinstance(n_traj, int) or isinstance(n_traj, bool) or n_traj < 2:
        raise ConfigError("n_traj", f"must be an integer >= 2, got {n_traj!r}")
    out_dir = doc.get("out_dir", DEFAULT_OUT_DIR)
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("out_dir", f"must be a non-empty path string, got {out_dir!r}")
    raw_params = doc.get("params", {})
    if not isinstance(raw_params, dict):
        raise ConfigError("params", "must be a JSON object")

    return ExperimentConfig(
        experiment=name,
        params=_validate_params(EXPERIMENTS[name], raw_params),
        seed=seed,
        n_traj=n_traj,
        out_dir=Path(out_dir),
    )


def parse_config(text: str) -> ExperimentConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("config", f"invalid JSON: {e}") from e
    return config_from_dict(doc)


def load_config(path: Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError("config", f"cannot read {path}: {e}") from e
    return parse_config(text)


def with_overrides(
    cfg: ExperimentConfig,
    seed: Optional[int] = None,
    out_dir: Optional[Path] = None,
    preset: Optional[str] = None,
    table: Optional[PresetTable] = None,
) -> ExperimentConfig:
    """Copy of cfg with CLI overrides applied; presets only touch keys the experiment uses."""
    params = dict(cfg.params)
    if preset is not None:
        if not EXPERIMENTS[cfg.experiment].accepts_preset:
            raise ConfigError(
                "preset", f"experiment '{cfg.experiment}' runs in units lambda = 1 and takes no physical preset"
            )
        values = (table or PresetTable()).get(preset)
        for key, code in PRESET_KEYS.items():
            if key in params:
                params[key] = values[code]
        logger.info(f"Preset '{preset}' applied: {values}")
    if seed is not None and not 0 <= seed < MAX_SEED:
        raise ConfigError("seed", f"must be an integer in [0, 2^64), got {seed}")
    return replace(
        cfg,
        params=params,
        seed=cfg.seed if seed is None else seed,
        out_dir=cfg.out_dir if out_dir is None else Path(out_dir),
    )


# ---------------------------------------------------------------------------
# Running and writing
# ---------------------------------------------------------------------------

def _format(values: np.ndarray) -> List[str]:
    return [f"{float(v):.17g}" for v in np.asarray(values, dtype=float)]


def series_frame(series: Series) -> pl.DataFrame:
    return pl.DataFrame(
        {
            series.axis: _format(series.points),
            "value": _format(series.value),
            "oracle": _format(series.oracle),
            "rel_err": _format(series.rel_err()),
        }
    )


def output_paths(cfg: ExperimentConfig) -> Dict[str, Path]:
    stem = f"{cfg.experiment}_{cfg.seed}"
    return {"csv": cfg.out_dir / f"{stem}.csv", "json": cfg.out_dir / f"{stem}.json"}


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> RunReport:
    """Run one experiment and write its CSV and JSON report."""
    spec = EXPERIMENTS[cfg.experiment]
    logger.info(f"Running {cfg.experiment} (seed={cfg.seed}, n_traj={cfg.n_traj}, workers={workers})")
    started = time.perf_counter()
    outcome = spec.runner(cfg, workers)
    wall_time = time.perf_counter() - started

    report = RunReport(
        config=cfg,
        summary=_clean(outcome.summary),
        oracle=_clean(outcome.oracle),
        checks={name: bool(ok) for name, ok in outcome.checks.items()},
        max_rel_err=outcome.series.max_rel_err(),
        wall_time=wall_time,
    )
    paths = output_paths(cfg)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    series_frame(outcome.series).write_csv(paths["csv"])
    paths["json"].write_text(json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    report.csv_path, report.json_path = paths["csv"], paths["json"]

    logger.info(f"{cfg.experiment} finished in {wall_time:.2f}s; wrote {paths['csv']} and {paths['json']}")
    for name in report.failed_checks():
        logger.warning(f"Check failed: {name}")
    return report
