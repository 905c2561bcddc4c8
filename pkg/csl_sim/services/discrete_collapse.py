"""
Collapse in a finite eigenbasis
===============================
Single collapse-generating operator A with eigenvalues a_n acting on a
superposition sum_n c_n |a_n>. Covers the closed-form evolution, trajectory
sampling, Born statistics, density matrices, the Lindblad evolver, the
gambler's ruin game and the fair-game (diagonality) defect.

Unnormalized amplitudes are kept in the log domain: component n of a
trajectory is c_n * exp(a_n B' - a_n^2 lam t), which depends only on the
accumulated B'(t), so the state is never renormalized step by step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from .errors import ContractViolation, InputError, NumericError, ParameterError
from .stochastic import RngStream, run_blocks

logger = logging.getLogger(__name__)

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
EIGEN_TOL = 1e-8
COMMUTE_TOL = 1e-10
MAX_STEP_SCALE = 0.1
TRAJECTORY_BLOCK = 256
RUIN_CHUNK = 1024
# gambler's-ruin games draw from streams past any trajectory index
RUIN_STREAM_OFFSET = 2**32


@dataclass(frozen=True)
class DiscreteSuperposition:
    eigenvalues: np.ndarray
    amplitudes: np.ndarray
    lam: float = 1.0

    def __post_init__(self):
        eigenvalues = np.atleast_1d(np.asarray(self.eigenvalues, dtype=float))
        amplitudes = np.atleast_1d(np.asarray(self.amplitudes, dtype=complex))
        if eigenvalues.ndim != 1 or eigenvalues.size == 0:
            raise InputError("eigenvalues must be a non-empty vector")
        if amplitudes.shape != eigenvalues.shape:
            raise InputError(
                f"amplitudes shape {amplitudes.shape} does not match eigenvalues {eigenvalues.shape}"
            )
        norm = float(np.sum(np.abs(amplitudes) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise InputError(f"amplitudes must be normalized, sum |c_n|^2 = {norm!r}")
        if not self.lam > 0:
            raise ParameterError(f"lambda must be > 0, got {self.lam}")
        eigenvalues.setflags(write=False)
        amplitudes.setflags(write=False)
        object.__setattr__(self, "eigenvalues", eigenvalues)
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def from_probabilities(
        cls,
        eigenvalues: Sequence[float],
        probabilities: Sequence[float],
        lam: float = 1.0,
        phases: Optional[Sequence[float]] = None,
    ) -> "DiscreteSuperposition":
        """Build amplitudes sqrt(p_n) e^{i phase_n}; p is renormalized to sum 1."""
        p = np.asarray(probabilities, dtype=float)
        if np.any(p < 0) or p.sum() <= 0:
            raise InputError(f"probabilities must be non-negative with positive sum, got {p}")
        p = p / p.sum()
        phase = np.zeros_like(p) if phases is None else np.asarray(phases, dtype=float)
        amplitudes = np.sqrt(p) * np.exp(1j * phase)
        amplitudes = amplitudes / np.sqrt(np.sum(np.abs(amplitudes) ** 2))
        return cls(np.asarray(eigenvalues, dtype=float), amplitudes, lam)

    @property
    def dimension(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def log_probabilities(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.probabilities)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "probabilities": self.probabilities.tolist(),
            "lambda": self.lam,
        }


@dataclass
class TrajectoryResult:
    B_final: float
    x_final: np.ndarray
    outcome: int
    weight_log: float
    psi_final: np.ndarray


@dataclass
class TrajectoryEnsemble:
    """Trajectory outputs stacked along axis 0, in trajectory-index order."""

    B_final: np.ndarray
    x_final: np.ndarray
    outcomes: np.ndarray
    weight_log: np.ndarray
    psi_final: np.ndarray
    T: float
    record_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    x_recorded: np.ndarray = field(default_factory=lambda: np.empty((0, 0, 0)))

    @property
    def n_traj(self) -> int:
        return int(self.outcomes.size)

    def __getitem__(self, i: int) -> TrajectoryResult:
        return TrajectoryResult(
            B_final=float(self.B_final[i]),
            x_final=self.x_final[i],
            outcome=int(self.outcomes[i]),
            weight_log=float(self.weight_log[i]),
            psi_final=self.psi_final[i],
        )


@dataclass(frozen=True)
class DensityMatrixFinite:
    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise InputError(f"density matrix must be square, got shape {entries.shape}")
        if np.max(np.abs(entries - entries.conj().T)) > HERMITIAN_TOL:
            raise InputError("density matrix is not Hermitian")
        trace = np.trace(entries).real
        if abs(trace - 1.0) > TRACE_TOL:
            raise InputError(f"density matrix trace is {trace!r}, expected 1")
        lowest = np.linalg.eigvalsh(entries).min()
        if lowest < -EIGEN_TOL:
            raise InputError(f"density matrix has negative eigenvalue {lowest!r}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_pure(cls, psi: Sequence[complex]) -> "DensityMatrixFinite":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @property
    def dimension(self) -> int:
        return int(self.entries.shape[0])

    def expectation(self, operator: np.ndarray) -> float:
        return float(np.trace(np.asarray(operator) @ self.entries).real)


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

def _require_positive_time(t: float) -> None:
    if not t > 0:
        raise ParameterError(f"t must be > 0, got {t}")


def evolve_closed_form(sup: DiscreteSuperposition, B, t: float) -> np.ndarray:
    """Unnormalized amplitudes c_n exp(-(B - 2 lam t a_n)^2 / (4 lam t))."""
    _require_positive_time(t)
    lam_t = sup.lam * t
    B = np.asarray(B, dtype=float)
    exponent = -((B[..., None] - 2.0 * lam_t * sup.eigenvalues) ** 2) / (4.0 * lam_t)
    return sup.amplitudes * np.exp(exponent)


def final_B_density(sup: DiscreteSuperposition, t: float, B):
    _require_positive_time(t)
    lam_t = sup.lam * t
    B = np.asarray(B, dtype=float)
    gauss = np.exp(-((B[..., None] - 2.0 * lam_t * sup.eigenvalues) ** 2) / (2.0 * lam_t))
    density = (gauss @ sup.probabilities) / np.sqrt(2.0 * np.pi * lam_t)
    return float(density) if density.ndim == 0 else density


def final_B_cdf(sup: DiscreteSuperposition, t: float, B):
    """Cumulative distribution matching final_B_density."""
    _require_positive_time(t)
    lam_t = sup.lam * t
    B = np.asarray(B, dtype=float)
    z = (B[..., None] - 2.0 * lam_t * sup.eigenvalues) / np.sqrt(lam_t)
    cdf = special.ndtr(z) @ sup.probabilities
    return float(cdf) if cdf.ndim == 0 else cdf


def analytic_rho(sup: DiscreteSuperposition, t: float) -> DensityMatrixFinite:
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    a = sup.eigenvalues
    c = sup.amplitudes
    damping = np.exp(-(sup.lam * t / 2.0) * (a[:, None] - a[None, :]) ** 2)
    return DensityMatrixFinite(np.outer(c, c.conj()) * damping)


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------

def _step_count(T: float, dt: float) -> int:
    if not dt > 0 or dt >= T:
        raise ParameterError(f"need 0 < dt < T, got dt={dt}, T={T}")
    n_steps = int(round(T / dt))
    if abs(n_steps * dt - T) > 1e-9 * T:
        logger.warning(f"T={T} is not a multiple of dt={dt}; running {n_steps} steps to t={n_steps * dt}")
    return n_steps


def _log_weights(sup: DiscreteSuperposition, B: np.ndarray, t: float) -> np.ndarray:
    """log |c_n|^2 + 2(a_n B - a_n^2 lam t), broadcast over trajectories."""
    a = sup.eigenvalues
    return sup.log_probabilities() + 2.0 * (B[:, None] * a - a**2 * sup.lam * t)


def _simulate_block(
    sup: DiscreteSuperposition,
    n_steps: int,
    dt: float,
    streams: List[RngStream],
    record_steps: np.ndarray,
) -> Dict[str, np.ndarray]:
    n_block = len(streams)
    uniforms = np.empty((n_block, n_steps))
    normals = np.empty((n_block, n_steps))
    for i, stream in enumerate(streams):
        gen = stream.generator()
        uniforms[i] = gen.random(n_steps)
        normals[i] = gen.standard_normal(n_steps)

    a = sup.eigenvalues
    lam_dt = sup.lam * dt
    sigma = np.sqrt(lam_dt)
    B = np.zeros(n_block)
    recorded = np.empty((n_block, record_steps.size, a.size))
    next_record = 0

    for k in range(n_steps):
        while next_record < record_steps.size and record_steps[next_record] == k:
            recorded[:, next_record] = special.softmax(_log_weights(sup, B, k * dt), axis=1)
            next_record += 1
        x = special.softmax(_log_weights(sup, B, k * dt), axis=1)
        cumulative = np.cumsum(x, axis=1)
        chosen = np.sum(uniforms[:, k, None] >= cumulative[:, :-1], axis=1)
        B += 2.0 * lam_dt * a[chosen] + sigma * normals[:, k]

    T = n_steps * dt
    while next_record < record_steps.size:
        recorded[:, next_record] = special.softmax(_log_weights(sup, B, T), axis=1)
        next_record += 1

    log_w = _log_weights(sup, B, T)
    weight_log = special.logsumexp(log_w, axis=1)
    x_final = np.exp(log_w - weight_log[:, None])
    psi_final = np.sqrt(x_final) * np.exp(1j * np.angle(sup.amplitudes))
    if not np.all(np.isfinite(x_final)):
        raise NumericError("trajectory weights became non-finite")
    return {
        "B_final": B,
        "x_final": x_final,
        "outcomes": np.argmax(x_final, axis=1),
        "weight_log": weight_log,
        "psi_final": psi_final,
        "x_recorded": recorded,
    }


def trajectory_ensemble(
    sup: DiscreteSuperposition,
    T: float,
    dt: float,
    n_traj: int,
    master_seed: int,
    workers: int = 1,
    record_times: Optional[Sequence[float]] = None,
) -> TrajectoryEnsemble:
    """Run n_traj trajectories, trajectory i drawing from stream (master_seed, i).

    Each step samples dB' from the |psi|^2-weighted Gaussian mixture with
    means 2 lam dt a_n and variance lam dt, then reweights component n by
    exp(a_n dB' - a_n^2 lam dt).
    """
    n_steps = _step_count(T, dt)
    if n_traj < 1:
        raise ParameterError(f"n_traj must be >= 1, got {n_traj}")
    times = np.asarray(record_times if record_times is not None else [], dtype=float)
    record_steps = np.clip(np.rint(times / dt).astype(int), 0, n_steps)
    order = np.argsort(record_steps, kind="stable")
    record_steps = record_steps[order]

    def block(bounds: Tuple[int, int]) -> Dict[str, np.ndarray]:
        start, stop = bounds
        streams = [RngStream(master_seed, i) for i in range(start, stop)]
        return _simulate_block(sup, n_steps, dt, streams, record_steps)

    logger.debug(f"Sampling {n_traj} trajectories of {n_steps} steps (dim={sup.dimension})")
    parts = run_blocks(block, n_traj, TRAJECTORY_BLOCK, workers)
    stacked = {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}
    recorded = np.empty_like(stacked["x_recorded"])
    recorded[:, order] = stacked["x_recorded"]
    return TrajectoryEnsemble(
        B_final=stacked["B_final"],
        x_final=stacked["x_final"],
        outcomes=stacked["outcomes"],
        weight_log=stacked["weight_log"],
        psi_final=stacked["psi_final"],
        T=n_steps * dt,
        record_times=times,
        x_recorded=recorded,
    )


def run_trajectory(sup: DiscreteSuperposition, T: float, dt: float, stream: RngStream) -> TrajectoryResult:
    n_steps = _step_count(T, dt)
    out = _simulate_block(sup, n_steps, dt, [stream], np.empty(0, dtype=int))
    return TrajectoryResult(
        B_final=float(out["B_final"][0]),
        x_final=out["x_final"][0],
        outcome=int(out["outcomes"][0]),
        weight_log=float(out["weight_log"][0]),
        psi_final=out["psi_final"][0],
    )


def born_statistics(
    sup: DiscreteSuperposition,
    T: float,
    dt: float,
    n_traj: int,
    master_seed: int,
    workers: int = 1,
) -> np.ndarray:
    ensemble = trajectory_ensemble(sup, T, dt, n_traj, master_seed, workers)
    counts = np.bincount(ensemble.outcomes, minlength=sup.dimension)
    return counts / ensemble.n_traj


def martingale_mean(ensemble: TrajectoryEnsemble) -> Tuple[np.ndarray, np.ndarray]:
    """Mean of x_n(T) and its standard error per component."""
    x = ensemble.x_final
    n = x.shape[0]
    se = np.std(x, axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.full(x.shape[1], np.inf)
    return x.mean(axis=0), se


def ensemble_rho(ensemble: TrajectoryEnsemble) -> np.ndarray:
    """Average of the normalized projectors |psi><psi| over the ensemble."""
    psi = ensemble.psi_final
    return np.einsum("tn,tm->nm", psi, psi.conj()) / psi.shape[0]


# ---------------------------------------------------------------------------
# Lindblad evolution
# ---------------------------------------------------------------------------

def _as_matrix(value, dim: Optional[int], name: str) -> np.ndarray:
    matrix = np.asarray(value, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InputError(f"{name} must be a square matrix, got shape {matrix.shape}")
    if dim is not None and matrix.shape[0] != dim:
        raise InputError(f"{name} has dimension {matrix.shape[0]}, expected {dim}")
    return matrix


def _check_hermitian(matrix: np.ndarray, name: str) -> None:
    if np.max(np.abs(matrix - matrix.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise InputError(f"{name} is not Hermitian")


def _commutator(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x @ y - y @ x


def _validate_generator(H, A_ops, dim: int) -> Tuple[np.ndarray, List[np.ndarray]]:
    H = _as_matrix(H, dim, "H")
    _check_hermitian(H, "H")
    ops = [_as_matrix(A, dim, f"A_ops[{i}]") for i, A in enumerate(A_ops)]
    for i, A in enumerate(ops):
        _check_hermitian(A, f"A_ops[{i}]")
    for i in range(len(ops)):
        for j in range(i + 1, len(ops)):
            if np.max(np.abs(_commutator(ops[i], ops[j]))) > COMMUTE_TOL:
                raise ContractViolation(f"A_ops[{i}] and A_ops[{j}] do not commute")
    return H, ops


def lindblad_rhs(rho: np.ndarray, H: np.ndarray, A_ops: List[np.ndarray], lam: float) -> np.ndarray:
    drho = -1j * _commutator(H, rho)
    for A in A_ops:
        drho -= (lam / 2.0) * _commutator(A, _commutator(A, rho))
    return drho


def lindblad_evolve(
    rho0: DensityMatrixFinite,
    H,
    A_ops: Sequence,
    lam: float,
    t: float,
    dt: float,
) -> DensityMatrixFinite:
    """Classical RK4 for d rho/dt = -i[H, rho] - (lam/2) sum [A, [A, rho]].

    The step is shrunk to t / ceil(t / dt) so the final time is hit exactly;
    rho is Hermitized after every step.
    """
    if lam < 0:
        raise ParameterError(f"lambda must be >= 0, got {lam}")
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    if not dt > 0:
        raise ParameterError(f"dt must be > 0, got {dt}")
    H, ops = _validate_generator(H, A_ops, rho0.dimension)
    scale = np.linalg.norm(H, 2) + lam * sum(np.linalg.norm(A, 2) ** 2 for A in ops)
    if dt * scale >= MAX_STEP_SCALE:
        raise ParameterError(f"dt={dt} too large: dt*(|H| + lam |A|^2) = {dt * scale:.3g} >= {MAX_STEP_SCALE}")
    if t == 0:
        return rho0

    n_steps = int(np.ceil(t / dt - 1e-12))
    h = t / n_steps
    rho = rho0.entries.copy()
    for _ in range(n_steps):
        k1 = lindblad_rhs(rho, H, ops, lam)
        k2 = lindblad_rhs(rho + 0.5 * h * k1, H, ops, lam)
        k3 = lindblad_rhs(rho + 0.5 * h * k2, H, ops, lam)
        k4 = lindblad_rhs(rho + h * k3, H, ops, lam)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
    if not np.all(np.isfinite(rho)):
        raise NumericError("Lindblad integration diverged")
    return DensityMatrixFinite(rho)


def ensemble_rate(O, rho: DensityMatrixFinite, H, A_ops: Sequence, lam: float) -> float:
    """d Tr(O rho)/dt = -i Tr([O, H] rho) - (lam/2) sum Tr([A, [A, O]] rho)."""
    O = _as_matrix(O, rho.dimension, "O")
    _check_hermitian(O, "O")
    H, ops = _validate_generator(H, A_ops, rho.dimension)
    rate = -1j * np.trace(_commutator(O, H) @ rho.entries)
    for A in ops:
        rate -= (lam / 2.0) * np.trace(_commutator(A, _commutator(A, O)) @ rho.entries)
    return float(rate.real)


# ---------------------------------------------------------------------------
# Gambler's ruin
# ---------------------------------------------------------------------------

@dataclass
class GameResult:
    winner: int
    steps: int


@dataclass
class RuinStatistics:
    n_games: int
    win_fraction: float
    win_fraction_oracle: float
    mean_steps: float
    mean_steps_oracle: float
    mean_final_fortune: float

    def to_dict(self) -> Dict[str, float]:
        return dict(self.__dict__)


def _check_stakes(x1_start: int, total: int) -> None:
    if int(x1_start) != x1_start or int(total) != total:
        raise ParameterError("stakes must be whole dollars")
    if not 0 < x1_start < total:
        raise ParameterError(f"need 0 < x1_start < total, got x1_start={x1_start}, total={total}")


def gamblers_ruin(x1_start: int, total: int, stream: RngStream) -> GameResult:
    """Fair +-1 dollar walk for gambler 1 until someone is broke.

    winner is 1 when gambler 1 ends holding `total`, 2 otherwise.
    """
    _check_stakes(x1_start, total)
    gen = stream.generator()
    fortune = int(x1_start)
    steps = 0
    while True:
        tosses = gen.integers(0, 2, size=RUIN_CHUNK) * 2 - 1
        path = fortune + np.cumsum(tosses)
        absorbed = np.flatnonzero((path <= 0) | (path >= total))
        if absorbed.size:
            k = int(absorbed[0])
            return GameResult(winner=1 if path[k] >= total else 2, steps=steps + k + 1)
        fortune = int(path[-1])
        steps += RUIN_CHUNK


def gamblers_ruin_ensemble(
    x1_start: int,
    total: int,
    n_games: int,
    master_seed: int,
    workers: int = 1,
    stream_offset: int = RUIN_STREAM_OFFSET,
) -> RuinStatistics:
    _check_stakes(x1_start, total)
    if n_games < 1:
        raise ParameterError(f"n_games must be >= 1, got {n_games}")

    def block(bounds: Tuple[int, int]) -> List[GameResult]:
        return [gamblers_ruin(x1_start, total, RngStream(master_seed, stream_offset + i)) for i in range(*bounds)]

    games = [g for part in run_blocks(block, n_games, TRAJECTORY_BLOCK, workers) for g in part]
    wins = sum(1 for g in games if g.winner == 1)
    win_fraction = wins / n_games
    return RuinStatistics(
        n_games=n_games,
        win_fraction=win_fraction,
        win_fraction_oracle=x1_start / total,
        mean_steps=float(np.mean([g.steps for g in games])),
        mean_steps_oracle=float(x1_start * (total - x1_start)),
        mean_final_fortune=win_fraction * total,
    )


# ---------------------------------------------------------------------------
# Diagonality requirement
# ---------------------------------------------------------------------------

def _check_symmetric(matrix: np.ndarray, name: str) -> None:
    if np.max(np.abs(matrix - matrix.T), initial=0.0) > HERMITIAN_TOL:
        raise InputError(f"{name} must be symmetric")


def fair_game_defect(R, V, rho, lam: float) -> np.ndarray:
    """dt-coefficient of d rho_nn for the generalized update exp(R dB + V dt).

    Vanishes for every rho exactly when the pair (R, V) keeps the diagonal
    elements of rho a fair game.
    """
    rho_m = rho.entries if isinstance(rho, DensityMatrixFinite) else _as_matrix(rho, None, "rho")
    dim = rho_m.shape[0]
    R = np.asarray(R, dtype=float)
    V = np.asarray(V, dtype=float)
    for name, matrix in (("R", R), ("V", V)):
        if matrix.shape != (dim, dim):
            raise InputError(f"{name} has shape {matrix.shape}, expected {(dim, dim)}")
        _check_symmetric(matrix, name)

    diag = np.diag(rho_m)
    tr_V = np.trace(V @ rho_m)
    tr_R = np.trace(R @ rho_m)
    tr_R2 = np.trace(R @ R @ rho_m)
    anti_V = np.diag(V @ rho_m + rho_m @ V)
    anti_R = np.diag(R @ rho_m + rho_m @ R)
    sandwich = np.diag(R @ rho_m @ R)
    defect = anti_V - 2.0 * diag * tr_V + lam * (
        sandwich - diag * tr_R2 - 2.0 * tr_R * (anti_R - 2.0 * diag * tr_R)
    )
    return defect.real


def diagonal_fair_game_pair(alphas: Sequence[float], rho, lam: float, c: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """Diagonal (R, V) built from the fair-game stepping rule.

    R = diag(alpha_n), V = diag(-(lam/2) alpha_n^2 + alpha_n f - c alpha_n)
    with f = 2 lam sum_m alpha_m rho_mm + c. The c terms cancel, so any c
    gives the same V.
    """
    rho_m = rho.entries if isinstance(rho, DensityMatrixFinite) else np.asarray(rho, dtype=complex)
    alphas = np.asarray(alphas, dtype=float)
    if alphas.shape != (rho_m.shape[0],):
        raise InputError(f"alphas has shape {alphas.shape}, expected {(rho_m.shape[0],)}")
    f = 2.0 * lam * float(np.sum(alphas * np.diag(rho_m).real)) + c
    beta = -c * alphas - lam * alphas**2
    V = 0.5 * lam * alphas**2 + alphas * f + beta
    return np.diag(alphas), np.diag(V)


def x_ito_drift(alphas: Sequence[float], x: Sequence[float], lam: float, c: float = 0.0) -> np.ndarray:
    """dt-coefficient of dx_n under the fair-game rule with free parameter c.

    x_n is a martingale, so this is zero up to roundoff for every c.
    """
    alphas = np.asarray(alphas, dtype=float)
    x = np.asarray(x, dtype=float)
    mean_alpha = float(np.sum(alphas * x))
    mean_alpha2 = float(np.sum(alphas**2 * x))
    f = 2.0 * lam * mean_alpha + c
    beta = -c * alphas - lam * alphas**2
    mean_beta = float(np.sum(beta * x))
    drift = (alphas - mean_alpha) * f + (beta - mean_beta) + lam * (
        -mean_alpha2 + mean_alpha**2 + (alphas - mean_alpha) ** 2
    )
    return 2.0 * x * drift
