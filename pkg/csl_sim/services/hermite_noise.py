"""
Hermite-function noise decomposition
====================================
Expands the position-indexed white-noise field on the harmonic-oscillator
functions u_n of length a. The projections v_n are independent white noises,
and the collapse operator exp(-(x - X)^2 / 2a^2) overlaps u_n with
coefficients Z_n(X) = exp(-X^2 / 4a^2) (X / sqrt(2) a)^n / sqrt(n!).

Summing Z_n(X) Z_n(X') over n gives back the Gaussian kernel
exp(-(X - X')^2 / 4a^2), and the order-n terms rebuild the collapse
generator order by order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from scipy import integrate as sp_integrate
from scipy import special

from .clump_dynamics import ClumpParams, GridDensityMatrix, kinetic_phases
from .errors import InputError, ParameterError, ResolutionError
from .stochastic import RngStream

logger = logging.getLogger(__name__)

DEFAULT_N_MAX = 60
POINTS_PER_OSCILLATION = 8
QUADRATURE_HALF_WIDTH = 10.0
TAIL_MARGIN = 6.0


def _check_order(n: int) -> None:
    if int(n) != n or n < 0:
        raise ParameterError(f"order must be a non-negative integer, got {n}")


def _check_length(a: float) -> None:
    if not a > 0:
        raise ParameterError(f"a must be > 0, got {a}")


def _hermite_table(n_max: int, x: np.ndarray, a: float) -> np.ndarray:
    """u_0..u_n_max on x via the normalized three-term recurrence."""
    xi = x / a
    table = np.empty((n_max + 1,) + x.shape)
    table[0] = np.pi**-0.25 * np.exp(-(xi**2) / 2.0) / np.sqrt(a)
    if n_max >= 1:
        table[1] = np.sqrt(2.0) * xi * table[0]
    for n in range(1, n_max):
        table[n + 1] = np.sqrt(2.0 / (n + 1)) * xi * table[n] - np.sqrt(n / (n + 1)) * table[n - 1]
    return table


def hermite_u(n: int, x, a: float):
    """Normalized oscillator function u_n(x) = C_n H_n(x/a) exp(-x^2 / 2a^2)."""
    _check_order(n)
    _check_length(a)
    x = np.asarray(x, dtype=float)
    value = _hermite_table(int(n), x, a)[int(n)]
    return float(value) if value.ndim == 0 else value


@dataclass(frozen=True)
class HermiteBasis:
    a: float
    n_max: int = DEFAULT_N_MAX

    def __post_init__(self):
        _check_length(self.a)
        _check_order(self.n_max)

    def matrix(self, x) -> np.ndarray:
        """u_n(x_j) for n = 0..n_max, shape (n_max + 1, len(x))."""
        return _hermite_table(self.n_max, np.asarray(x, dtype=float), self.a)

    @property
    def turning_point(self) -> float:
        return float(np.sqrt(2 * self.n_max + 1) * self.a)

    @property
    def max_spacing(self) -> float:
        """Coarsest grid spacing that keeps eight points per oscillation of u_n_max."""
        wavelength = 2.0 * np.pi * self.a / np.sqrt(2 * self.n_max + 1)
        return wavelength / POINTS_PER_OSCILLATION

    def orthonormality_matrix(self, n_points: int = 4001) -> np.ndarray:
        """Quadrature of u_n u_m over |x| <= max(10a, turning point + 6a)."""
        half = max(QUADRATURE_HALF_WIDTH * self.a, self.turning_point + TAIL_MARGIN * self.a)
        x = np.linspace(-half, half, n_points)
        u = self.matrix(x)
        return sp_integrate.simpson(u[:, None, :] * u[None, :, :], x=x, axis=-1)


def z_table(n_max: int, X, a: float) -> np.ndarray:
    """Z_0..Z_n_max at X, shape (n_max + 1,) + X.shape, evaluated in the log domain."""
    _check_order(n_max)
    _check_length(a)
    X = np.asarray(X, dtype=float)
    orders = np.arange(n_max + 1).reshape((-1,) + (1,) * X.ndim)
    ratio = np.abs(X) / (np.sqrt(2.0) * a)
    with np.errstate(divide="ignore"):
        log_ratio = np.log(ratio)
    log_z = -(X**2) / (4.0 * a**2) + orders * np.where(ratio > 0, log_ratio, 0.0) - 0.5 * special.gammaln(orders + 1)
    values = np.exp(log_z) * np.where(X < 0, (-1.0) ** orders, 1.0)
    # 0^0 = 1, 0^n = 0
    return np.where((ratio == 0) & (orders > 0), 0.0, values)


def Z_n(n: int, X, a: float):
    _check_order(n)
    value = z_table(int(n), X, a)[int(n)]
    return float(value) if value.ndim == 0 else value


def kernel_reconstruction(X, X_prime, n_max: int, a: float):
    """Truncated sum of Z_n(X) Z_n(X'); tends to exp(-(X - X')^2 / 4a^2)."""
    value = np.sum(z_table(n_max, X, a) * z_table(n_max, X_prime, a), axis=0)
    return float(value) if np.ndim(value) == 0 else value


def generator_terms(X, X_prime, n_max: int, a: float) -> np.ndarray:
    """Per-order contributions (Z_n(X) - Z_n(X'))^2, shape (n_max + 1,) + broadcast shape."""
    return (z_table(n_max, X, a) - z_table(n_max, X_prime, a)) ** 2


def truncated_decay_rates(grid, n_max: int, params: ClumpParams) -> np.ndarray:
    """(lam N^2 / 2) sum_n (Z_n(X) - Z_n(X'))^2 on every grid pair."""
    z = z_table(n_max, np.asarray(grid, dtype=float), params.a)
    squared = np.sum((z[:, :, None] - z[:, None, :]) ** 2, axis=0)
    return 0.5 * params.collapse_rate * squared


def truncated_generator(
    rho: GridDensityMatrix,
    n_max: int,
    params: ClumpParams,
    include_kinetic: bool = False,
) -> np.ndarray:
    """d rho / dt from the orders n <= n_max of the collapse term, optionally plus -i[P^2/2m, rho]."""
    rate = -truncated_decay_rates(rho.grid, n_max, params) * rho.entries
    if include_kinetic:
        k = 2.0 * np.pi * np.fft.fftfreq(rho.n_grid, d=rho.spacing)
        energy = k**2 / (2.0 * params.m)
        h_rho = np.fft.ifft(energy[:, None] * np.fft.fft(rho.entries, axis=0), axis=0)
        rate = rate - 1j * (h_rho - h_rho.conj().T)
    return rate


def evolve_truncated(rho: GridDensityMatrix, n_max: int, params: ClumpParams, t: float) -> GridDensityMatrix:
    """Collapse-only evolution under the truncated generator (exact, entrywise)."""
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    factor = np.exp(-t * truncated_decay_rates(rho.grid, n_max, params))
    return GridDensityMatrix(rho.grid, rho.entries * factor)


# ---------------------------------------------------------------------------
# Noise fields
# ---------------------------------------------------------------------------

def _check_field_grid(x: np.ndarray, basis: HermiteBasis) -> float:
    if x.ndim != 1 or x.size < 2:
        raise InputError("spatial grid must be a 1-D array with at least two points")
    spacing = float(x[1] - x[0])
    if spacing > basis.max_spacing:
        raise ResolutionError(
            f"grid spacing {spacing:.3g} does not resolve u_{basis.n_max} (need <= {basis.max_spacing:.3g})"
        )
    reach = min(-x[0], x[-1])
    if reach < basis.turning_point + 3.0 * basis.a:
        raise ResolutionError(
            f"grid reaches +-{reach:.3g}, u_{basis.n_max} extends to {basis.turning_point + 3.0 * basis.a:.3g}"
        )
    return spacing


def sample_white_field(x, n_t: int, dt: float, lam: float, stream: RngStream) -> np.ndarray:
    """Lattice white noise w(x_j, t_k), variance lam / (dx dt) per cell, shape (len(x), n_t)."""
    x = np.asarray(x, dtype=float)
    if n_t < 1 or not dt > 0 or not lam > 0:
        raise ParameterError(f"need n_t >= 1, dt > 0, lam > 0 (got {n_t}, {dt}, {lam})")
    spacing = float(x[1] - x[0])
    z = stream.generator().standard_normal((x.size, n_t))
    return np.sqrt(lam / (spacing * dt)) * z


def project_noise(w_field, x, basis: HermiteBasis) -> np.ndarray:
    """v_n(t_k) = sum_j w(x_j, t_k) u_n(x_j) dx, shape (n_max + 1, n_t)."""
    x = np.asarray(x, dtype=float)
    w_field = np.asarray(w_field, dtype=float)
    if w_field.ndim == 1:
        w_field = w_field[:, None]
    if w_field.shape[0] != x.size:
        raise InputError(f"field has {w_field.shape[0]} spatial samples, grid has {x.size}")
    spacing = _check_field_grid(x, basis)
    return basis.matrix(x) @ w_field * spacing


def collapse_exponents(
    w_field,
    x,
    dt: float,
    X: float,
    basis: HermiteBasis,
    lam: float,
    N: int = 1,
) -> Dict[str, float]:
    """Both sides of the exponent identity for a sampled field.

    field: sum_k sum_j (w - 2 lam N A(x_j))^2 dx dt, with A the normalized
    Gaussian of width a centred at X; modes: sum_n sum_k (v_n - 2 lam N Z_n(X))^2 dt.
    """
    x = np.asarray(x, dtype=float)
    w_field = np.asarray(w_field, dtype=float)
    if w_field.ndim == 1:
        w_field = w_field[:, None]
    v = project_noise(w_field, x, basis)
    spacing = float(x[1] - x[0])
    profile = (np.pi * basis.a**2) ** -0.25 * np.exp(-((x - X) ** 2) / (2.0 * basis.a**2))
    field_side = float(np.sum((w_field - 2.0 * lam * N * profile[:, None]) ** 2) * spacing * dt)
    z = z_table(basis.n_max, X, basis.a)
    mode_side = float(np.sum((v - 2.0 * lam * N * z[:, None]) ** 2) * dt)
    return {"field": field_side, "modes": mode_side}
