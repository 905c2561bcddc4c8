"""
Exactly solvable small packet
=============================
A free Gaussian packet much smaller than a: the width parameter A(t) obeys a
Riccati equation with equilibrium A_eq = m alpha (1 - i)/2, and once at
equilibrium the centre performs a damped Brownian motion driven by the
physical noise v.

Noise transform on the dt lattice: v is step-constant, Btilde = int v is
piecewise linear and its integral I = int Btilde is accumulated with the
trapezoid rule (exact for piecewise-linear Btilde). Then

    w_k = v_k + 2 alpha (Btilde_k + alpha I_k)

and <X>_k = (Btilde_k + alpha I_k) / sqrt(m lam) = (w_k - v_k) / (2 lam_tilde).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .clump_dynamics import ClumpParams
from .errors import InputError, NumericError, ParameterError
from .stochastic import NoisePath, RngStream, run_blocks, sample_noise_path

logger = logging.getLogger(__name__)

MAX_ALPHA_DT = 0.01
POLE_TOL = 1e-14
PACKET_BLOCK = 512


@dataclass(frozen=True)
class DerivedPacketParams:
    lambda_tilde: float
    alpha: float
    A_eq: complex

    @property
    def equilibrium_variance(self) -> float:
        """Position variance 1/(2(A + A*)) at equilibrium."""
        return 1.0 / (4.0 * self.A_eq.real)


def derived_params(params: ClumpParams) -> DerivedPacketParams:
    alpha = params.alpha
    return DerivedPacketParams(
        lambda_tilde=params.lambda_tilde,
        alpha=alpha,
        A_eq=complex(params.m * alpha * (1 - 1j) / 2.0),
    )


@dataclass(frozen=True)
class GaussianPacketState:
    """psi(X) ~ exp(-A X^2 + B X); the overall constant is not tracked."""

    A: complex
    B: complex
    params: ClumpParams

    def __post_init__(self):
        if not complex(self.A).real > 0:
            raise InputError(f"Re(A) must be > 0 for a normalizable packet, got A={self.A}")

    @property
    def mean_x(self) -> float:
        return float((self.B + np.conj(self.B)).real / (2.0 * (self.A + np.conj(self.A)).real))

    @property
    def var_x(self) -> float:
        return float(1.0 / (2.0 * (self.A + np.conj(self.A)).real))


def riccati_rhs(A: complex, params: ClumpParams) -> complex:
    """Right-hand side of dA/dt = -(2i/m) A^2 + lam_tilde^2 / lam."""
    return -(2j / params.m) * A**2 + params.lambda_tilde**2 / params.lam


def riccati_A(t, A0: complex, params: ClumpParams):
    """Closed-form width parameter; vectorized over t."""
    A0 = complex(A0)
    if not A0.real > 0:
        raise InputError(f"Re(A0) must be > 0, got {A0}")
    derived = derived_params(params)
    A_eq = derived.A_eq
    if abs(A_eq + A0) <= POLE_TOL * abs(A_eq):
        raise InputError("A0 = -A_eq is a pole of the closed form")
    K = (A_eq - A0) / (A_eq + A0)
    t = np.asarray(t, dtype=float)
    decay = K * np.exp(-2.0 * derived.alpha * (1 + 1j) * t)
    A = A_eq * (1.0 - decay) / (1.0 + decay)
    return complex(A) if A.ndim == 0 else A


def riccati_integrate(A0: complex, params: ClumpParams, times, dt: float) -> np.ndarray:
    """RK4 solution of dA/dt = -(2i/m) A^2 + lam_tilde^2 / lam at increasing `times`."""
    times = np.asarray(times, dtype=float)
    if not dt > 0:
        raise ParameterError(f"dt must be > 0, got {dt}")
    if np.any(np.diff(times) < 0) or (times.size and times[0] < 0):
        raise ParameterError("times must be non-negative and increasing")
    A = complex(A0)
    now = 0.0
    out = np.empty(times.size, dtype=complex)
    for i, target in enumerate(times.tolist()):
        span = target - now
        n_steps = int(np.ceil(span / dt - 1e-12)) if span > 0 else 0
        h = span / n_steps if n_steps else 0.0
        for _ in range(n_steps):
            k1 = riccati_rhs(A, params)
            k2 = riccati_rhs(A + 0.5 * h * k1, params)
            k3 = riccati_rhs(A + 0.5 * h * k2, params)
            k4 = riccati_rhs(A + h * k3, params)
            A = A + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.isfinite(A):
            raise NumericError(f"Riccati integration diverged before t={target}")
        out[i] = A
        now = target
    return out


def riccati_rate_fit(A0: complex, params: ClumpParams, times) -> float:
    """Fitted exponent of |A(t) - A_eq| ~ C exp(-rate t)."""
    times = np.asarray(times, dtype=float)
    deviation = np.abs(riccati_A(times, A0, params) - derived_params(params).A_eq)
    if np.any(deviation <= 0):
        raise NumericError("A(t) reached A_eq exactly; nothing to fit")
    slope, _ = np.polyfit(times, np.log(deviation), 1)
    return float(-slope)


# ---------------------------------------------------------------------------
# Noise transform
# ---------------------------------------------------------------------------

def _btilde_and_integral(dv: np.ndarray, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """Btilde_k and I_k at the left endpoint of every step, plus the final point."""
    btilde = np.concatenate(([0.0], np.cumsum(dv)))
    integral = np.concatenate(([0.0], np.cumsum(dt * (btilde[:-1] + btilde[1:]) / 2.0)))
    return btilde, integral


def w_from_v(v: NoisePath, params: ClumpParams) -> NoisePath:
    alpha = params.alpha
    btilde, integral = _btilde_and_integral(v.increments, v.dt)
    dw = v.increments + 2.0 * alpha * v.dt * (btilde[:-1] + alpha * integral[:-1])
    return NoisePath(dt=v.dt, increments=dw, lam=v.lam)


def v_from_w(w: NoisePath, params: ClumpParams) -> NoisePath:
    """Exact inverse of w_from_v by forward substitution."""
    alpha = params.alpha
    dt = w.dt
    dv = np.empty(w.n_steps)
    btilde = 0.0
    integral = 0.0
    for k, dw_k in enumerate(w.increments.tolist()):
        dv_k = dw_k - 2.0 * alpha * dt * (btilde + alpha * integral)
        dv[k] = dv_k
        nxt = btilde + dv_k
        integral = integral + dt * (btilde + nxt) / 2.0
        btilde = nxt
    return NoisePath(dt=dt, increments=dv, lam=w.lam)


def transform_matrix(n_steps: int, dt: float, params: ClumpParams) -> np.ndarray:
    """Dense matrix T with dw = T dv on a lattice of n_steps."""
    columns = []
    for j in range(n_steps):
        unit = np.zeros(n_steps)
        unit[j] = 1.0
        columns.append(w_from_v(NoisePath(dt=dt, increments=unit), params).increments)
    return np.column_stack(columns)


def _check_same_lattice(first: NoisePath, second: NoisePath) -> None:
    if first.dt != second.dt or first.n_steps != second.n_steps:
        raise InputError(
            f"noise paths differ: dt {first.dt} vs {second.dt}, steps {first.n_steps} vs {second.n_steps}"
        )


def mean_x_from_noise_pair(w: NoisePath, v: NoisePath, params: ClumpParams) -> np.ndarray:
    """<X>_k = (w_k - v_k) / (2 lam_tilde) on the step values."""
    _check_same_lattice(w, v)
    return (w.values() - v.values()) / (2.0 * params.lambda_tilde)


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------

@dataclass
class PacketTrajectory:
    times: np.ndarray
    meanX: np.ndarray
    meanP: np.ndarray
    varX: np.ndarray
    v_path: NoisePath
    w_path: NoisePath
    Btilde: np.ndarray

    def final_state(self, params: ClumpParams) -> GaussianPacketState:
        A_eq = derived_params(params).A_eq
        x, p = self.meanX[-1], self.meanP[-1]
        B = 2.0 * A_eq.real * x + 1j * (p + 2.0 * A_eq.imag * x)
        return GaussianPacketState(A=A_eq, B=B, params=params)


def _check_packet_step(params: ClumpParams, T: float, dt: float) -> int:
    alpha = params.alpha
    if not dt > 0:
        raise ParameterError(f"dt must be > 0, got {dt}")
    if dt > MAX_ALPHA_DT / alpha * (1 + 1e-12):
        raise ParameterError(f"dt={dt} exceeds {MAX_ALPHA_DT}/alpha = {MAX_ALPHA_DT / alpha:.3g}")
    if T < dt:
        raise ParameterError(f"T={T} must be >= dt={dt}")
    n_steps = int(round(T / dt))
    if abs(n_steps * dt - T) > 1e-9 * T:
        logger.warning(f"T={T} is not a multiple of dt={dt}; running {n_steps} steps to t={n_steps * dt}")
    return n_steps


def packet_trajectory_from_v(v: NoisePath, params: ClumpParams) -> PacketTrajectory:
    """Deterministic trajectory for a given physical noise path v, started at A_eq."""
    _check_packet_step(params, v.duration, v.dt)
    alpha = params.alpha
    btilde, integral = _btilde_and_integral(v.increments, v.dt)
    mean_x = (btilde + alpha * integral) / np.sqrt(params.m * params.lam)
    mean_p = (params.lambda_tilde / params.lam) * btilde
    return PacketTrajectory(
        times=v.times(),
        meanX=mean_x,
        meanP=mean_p,
        varX=np.full(btilde.size, derived_params(params).equilibrium_variance),
        v_path=v,
        w_path=w_from_v(v, params),
        Btilde=btilde,
    )


def run_packet_trajectory(params: ClumpParams, T: float, dt: float, stream: RngStream) -> PacketTrajectory:
    n_steps = _check_packet_step(params, T, dt)
    v = sample_noise_path(dt, n_steps, params.lam, stream)
    return packet_trajectory_from_v(v, params)


def b_from_w(w: NoisePath, params: ClumpParams, substeps: int = 4) -> np.ndarray:
    """Integrate dB/dt = -alpha(1+i) B + (lam_tilde/lam) w(t) from B(0) = 0 with RK4.

    w(t) inside step k is the continuous image of the step-constant v:
    w(t_k + s) = v_k + 2 alpha (Btilde(t_k + s) + alpha I(t_k + s)).
    Returns B at the lattice points.
    """
    if substeps < 1:
        raise ParameterError(f"substeps must be >= 1, got {substeps}")
    alpha = params.alpha
    gamma = alpha * (1 + 1j)
    drive = params.lambda_tilde / params.lam
    dt = w.dt
    h = dt / substeps
    v = v_from_w(w, params)
    btilde, integral = _btilde_and_integral(v.increments, dt)
    rates = v.values().tolist()

    B = np.empty(w.n_steps + 1, dtype=complex)
    B[0] = 0.0
    b = 0.0 + 0.0j
    for k, v_k in enumerate(rates):
        bt_k = float(btilde[k])
        i_k = float(integral[k])

        def forcing(s: float) -> float:
            bt = bt_k + v_k * s
            it = i_k + bt_k * s + v_k * s * s / 2.0
            return drive * (v_k + 2.0 * alpha * (bt + alpha * it))

        for j in range(substeps):
            s = j * h
            k1 = -gamma * b + forcing(s)
            k2 = -gamma * (b + 0.5 * h * k1) + forcing(s + 0.5 * h)
            k3 = -gamma * (b + 0.5 * h * k2) + forcing(s + 0.5 * h)
            k4 = -gamma * (b + h * k3) + forcing(s + h)
            b = b + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        B[k + 1] = b
    return B


def mean_x_from_b(B, params: ClumpParams):
    """(B + B*) / (2 (A + A*)) at A = A_eq."""
    A_eq = derived_params(params).A_eq
    return np.real(B) / (2.0 * A_eq.real)


# ---------------------------------------------------------------------------
# Ensembles
# ---------------------------------------------------------------------------

def ensemble_msd(params: ClumpParams, t: float) -> float:
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    alpha = params.alpha
    m = params.m
    return 1.0 / (2.0 * m * alpha) + (t + alpha * t**2 + alpha**2 * t**3 / 3.0) / m


def _ensemble_steps(params: ClumpParams, t: float, dt: Optional[float]) -> Tuple[int, float]:
    if dt is None:
        n_steps = max(1, int(np.ceil(t * params.alpha / MAX_ALPHA_DT - 1e-12)))
        return n_steps, t / n_steps
    return _check_packet_step(params, t, dt), dt


def packet_endpoints(
    params: ClumpParams,
    t: float,
    n_traj: int,
    master_seed: int,
    dt: Optional[float] = None,
    workers: int = 1,
) -> Tuple[np.ndarray, np.ndarray]:
    """<X>(t) and <P>(t) of n_traj trajectories, trajectory i on stream (master_seed, i)."""
    if t <= 0:
        raise ParameterError(f"t must be > 0, got {t}")
    if n_traj < 1:
        raise ParameterError(f"n_traj must be >= 1, got {n_traj}")
    n_steps, step = _ensemble_steps(params, t, dt)
    alpha = params.alpha

    def block(bounds: Tuple[int, int]) -> Tuple[np.ndarray, np.ndarray]:
        start, stop = bounds
        dv = np.stack(
            [sample_noise_path(step, n_steps, params.lam, RngStream(master_seed, i)).increments for i in range(start, stop)]
        )
        btilde = np.cumsum(dv, axis=1)
        left = np.concatenate((np.zeros((dv.shape[0], 1)), btilde[:, :-1]), axis=1)
        integral = np.sum(step * (left + btilde) / 2.0, axis=1)
        final = btilde[:, -1]
        mean_x = (final + alpha * integral) / np.sqrt(params.m * params.lam)
        return mean_x, (params.lambda_tilde / params.lam) * final

    logger.debug(f"Packet ensemble: {n_traj} trajectories, {n_steps} steps of {step:.4g}")
    parts = run_blocks(block, n_traj, PACKET_BLOCK, workers)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def msd_monte_carlo(
    params: ClumpParams,
    t: float,
    n_traj: int,
    master_seed: int,
    dt: Optional[float] = None,
    workers: int = 1,
) -> float:
    """Ensemble average of <X>^2 + 1/(2(A + A*))."""
    variance = derived_params(params).equilibrium_variance
    if t == 0:
        return variance
    mean_x, _ = packet_endpoints(params, t, n_traj, master_seed, dt, workers)
    return float(np.mean(mean_x**2) + variance)


def momentum_variance_monte_carlo(
    params: ClumpParams,
    T: float,
    n_traj: int,
    master_seed: int,
    dt: Optional[float] = None,
    workers: int = 1,
) -> Dict[str, float]:
    """Mean and variance of <P>(T); the oracle variance is lam_tilde^2 T / lam."""
    _, mean_p = packet_endpoints(params, T, n_traj, master_seed, dt, workers)
    return {
        "mean": float(np.mean(mean_p)),
        "standard_error": float(np.std(mean_p, ddof=1) / np.sqrt(n_traj)),
        "variance": float(np.var(mean_p, ddof=1)),
        "variance_oracle": params.lambda_tilde**2 * T / params.lam,
    }
