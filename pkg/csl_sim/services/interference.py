"""
Collapse-modified interference
==============================
Interfering packets whose points move on straight lines. The cross term of
each packet pair is damped by exp(-E) with

    E = lam N^2 int_0^t dt' [1 - exp(-sep(t')^2 / 4a^2)]

where sep(t') is the distance, a time t - t' earlier, between the points of
the two packets that reach X at t. Covers the generic screen density, the
Mach-Zehnder output port and the two-slit pattern.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .clump_dynamics import ClumpParams
from .errors import InputError, NumericError, ParameterError
from .stochastic import erf, integrate

logger = logging.getLogger(__name__)

DEFAULT_QUADRATURE = 10_000
RICHARDSON_TOL = 1e-8
REALNESS_TOL = 1e-10
MIN_SCREEN_RATIO = 100.0
MIN_PACKET_WAVES = 10.0

# (X, t, t_prime) -> position at time t - t_prime of the point reaching X at t
Trajectory = Callable[[float, float, np.ndarray], np.ndarray]


@dataclass
class PacketSpec:
    """One interfering packet.

    `profile(X, t)` is the packet envelope at the screen. Unless `trajectory`
    is given, packet points move on straight lines with velocity k_at(X)/m.
    `size` is the packet extent used to check the well-defined-momentum regime.
    """

    amplitude: complex
    k_at: Callable[[float], float]
    profile: Callable[[float, float], complex]
    trajectory: Optional[Trajectory] = None
    size: Optional[float] = None

    def position_history(self, X: float, t: float, t_prime, m: float) -> np.ndarray:
        t_prime = np.asarray(t_prime, dtype=float)
        if self.trajectory is not None:
            return np.asarray(self.trajectory(X, t, t_prime), dtype=float)
        return X - (self.k_at(X) / m) * (t - t_prime)

    def check_momentum_regime(self, X: float) -> None:
        if self.size is None:
            return
        k = abs(self.k_at(X))
        if k == 0 or self.size * k < MIN_PACKET_WAVES:
            raise InputError(f"packet size {self.size} is not large compared to 1/|k| = {1 / k if k else np.inf}")


@dataclass(frozen=True)
class SlitConfig:
    b: float
    k: float
    L: float
    params: ClumpParams
    A_amp: float = 1.0

    def __post_init__(self):
        for name in ("b", "k", "L", "A_amp"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.L / self.b < MIN_SCREEN_RATIO:
            raise ParameterError(f"screen distance must be >= {MIN_SCREEN_RATIO:g} b, got L/b = {self.L / self.b:.3g}")

    @property
    def fringe_period(self) -> float:
        """Angular period of cos^2(k b theta)."""
        return np.pi / (self.k * self.b)


def _check_window(t: float, t_prime) -> None:
    t_prime = np.asarray(t_prime, dtype=float)
    if t < 0 or np.any(t_prime < 0) or np.any(t_prime > t):
        raise ParameterError(f"t_prime must lie in [0, t] with t={t}")


def packet_separation(X: float, k1: float, k2: float, m: float, t: float, t_prime):
    """|X_1(t - t') - X_2(t - t')| for straight-line packets that meet at X at time t."""
    _check_window(t, t_prime)
    t_prime = np.asarray(t_prime, dtype=float)
    x1 = X - (k1 / m) * (t - t_prime)
    x2 = X - (k2 / m) * (t - t_prime)
    sep = np.abs(x1 - x2)
    return float(sep) if sep.ndim == 0 else sep


def pair_exponent(
    sep_fn: Callable[[np.ndarray], np.ndarray],
    t: float,
    params: ClumpParams,
    n_quad: int = DEFAULT_QUADRATURE,
    richardson: bool = True,
) -> float:
    """lam N^2 int_0^t [1 - exp(-sep(t')^2 / 4a^2)] dt'."""
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")

    def integrand(tp: np.ndarray) -> np.ndarray:
        sep = np.asarray(sep_fn(tp), dtype=float)
        return -np.expm1(-(sep**2) / (4.0 * params.a**2))

    value = params.collapse_rate * integrate(integrand, 0.0, t, n_quad)
    if not np.isfinite(value):
        raise NumericError(f"pair exponent quadrature returned {value}")
    if richardson and t > 0:
        refined = params.collapse_rate * integrate(integrand, 0.0, t, 2 * n_quad)
        shift = abs(refined - value) / max(abs(refined), np.finfo(float).tiny)
        if refined != 0 and shift > RICHARDSON_TOL:
            logger.warning(f"Pair exponent moved by {shift:.2e} (relative) when doubling n_quad={n_quad}")
        value = refined
    return float(value)


def screen_density(
    X: float,
    t: float,
    packets: Sequence[PacketSpec],
    params: ClumpParams,
    n_quad: int = DEFAULT_QUADRATURE,
) -> float:
    """Ensemble probability density at X, time t, for a set of interfering packets."""
    if not packets:
        raise InputError("screen_density needs at least one packet")
    for packet in packets:
        packet.check_momentum_regime(X)
    waves = np.array([p.amplitude * p.profile(X, t) for p in packets], dtype=complex)
    total = complex(np.sum(np.abs(waves) ** 2))
    for n in range(len(packets)):
        for n2 in range(n + 1, len(packets)):
            if waves[n] == 0 or waves[n2] == 0:
                continue
            first, second = packets[n], packets[n2]

            def sep_fn(tp, first=first, second=second):
                return np.abs(
                    first.position_history(X, t, tp, params.m) - second.position_history(X, t, tp, params.m)
                )

            survival = np.exp(-pair_exponent(sep_fn, t, params, n_quad))
            cross = waves[n] * np.conj(waves[n2]) * survival
            total += cross + np.conj(cross)
    scale = max(1.0, float(np.sum(np.abs(waves) ** 2)))
    if abs(total.imag) > REALNESS_TOL * scale:
        raise NumericError(f"screen density has imaginary part {total.imag}")
    if total.real < -REALNESS_TOL * scale:
        raise NumericError(f"screen density is negative: {total.real}")
    return float(max(total.real, 0.0))


def screen_scan(
    xs: Sequence[float],
    t: float,
    packets: Sequence[PacketSpec],
    params: ClumpParams,
    n_quad: int = DEFAULT_QUADRATURE,
) -> np.ndarray:
    return np.array([screen_density(float(X), t, packets, params, n_quad) for X in xs])


# ---------------------------------------------------------------------------
# Mach-Zehnder
# ---------------------------------------------------------------------------

def mach_zehnder_prob(t, params: ClumpParams):
    """Probability of leaving through the dark port: (1/2)(1 - exp(-lam N^2 t))."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ParameterError("t must be >= 0")
    prob = -0.5 * np.expm1(-params.collapse_rate * t)
    return float(prob) if prob.ndim == 0 else prob


def mach_zehnder_quadrature(
    t: float,
    params: ClumpParams,
    arm_separation: Optional[float] = None,
    n_quad: int = DEFAULT_QUADRATURE,
) -> float:
    """Dark-port probability from the pair exponent with constant arm separation (default 50a)."""
    separation = 50.0 * params.a if arm_separation is None else arm_separation
    exponent = pair_exponent(lambda tp: np.full_like(tp, separation), t, params, n_quad)
    return float(-0.5 * np.expm1(-exponent))


def mach_zehnder_packets(profile: Callable[[float, float], complex], arm_separation: float) -> List[PacketSpec]:
    """The two recombined arms: equal weights, opposite sign, arms held arm_separation apart."""
    return [
        PacketSpec(0.5, lambda X: 0.0, profile, trajectory=lambda X, t, tp: np.full_like(tp, X)),
        PacketSpec(
            -0.5,
            lambda X: 0.0,
            profile,
            trajectory=lambda X, t, tp: np.full_like(tp, X + arm_separation),
        ),
    ]


# ---------------------------------------------------------------------------
# Two slits
# ---------------------------------------------------------------------------

def two_slit_rate(cfg: SlitConfig) -> float:
    """Effective decay rate lam N^2 [1 - (sqrt(pi) a / 2b) erf(b/a)]."""
    a, b = cfg.params.a, cfg.b
    return float(cfg.params.collapse_rate * (1.0 - np.sqrt(np.pi) * a / (2.0 * b) * erf(b / a)))


def two_slit_intensity(theta, t: float, cfg: SlitConfig):
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    survival = np.exp(-two_slit_rate(cfg) * t)
    theta = np.asarray(theta, dtype=float)
    A2 = cfg.A_amp**2
    intensity = 2.0 * A2 * np.cos(cfg.k * cfg.b * theta) ** 2 * survival + A2 * (1.0 - survival)
    return float(intensity) if intensity.ndim == 0 else intensity


def two_slit_intensity_quadrature(theta, t: float, cfg: SlitConfig, n_quad: int = DEFAULT_QUADRATURE):
    """Same pattern with the damping from quadrature over the straight-line separation 2b(1 - t'/t)."""
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    if t == 0:
        exponent = 0.0
    else:
        # slits at -+b meeting at the pattern centre after time t
        m = cfg.params.m
        k_slit = m * cfg.b / t
        exponent = pair_exponent(
            lambda tp: packet_separation(0.0, -k_slit, k_slit, m, t, tp), t, cfg.params, n_quad
        )
    theta = np.asarray(theta, dtype=float)
    intensity = cfg.A_amp**2 * (1.0 + np.cos(2.0 * cfg.k * cfg.b * theta) * np.exp(-exponent))
    return float(intensity) if intensity.ndim == 0 else intensity


def fringe_visibility(t: float, cfg: SlitConfig, n_scan: int = 2001) -> float:
    """(I_max - I_min)/(I_max + I_min) over one fringe period of the pattern."""
    thetas = np.linspace(0.0, cfg.fringe_period, n_scan)
    intensity = two_slit_intensity(thetas, t, cfg)
    high, low = float(intensity.max()), float(intensity.min())
    return (high - low) / (high + low)
