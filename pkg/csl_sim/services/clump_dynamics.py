"""
Small-clump centre-of-mass dynamics
===================================
Density matrix of the centre of mass of a rigid clump of N nucleons on a
uniform 1-D grid: the position-kernel collapse term, off-diagonal decay
rates, diagonal invariance and modular-momentum overlap decay.

Units have hbar = 1, so M is a mass over hbar (time/length^2).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .errors import InputError, ParameterError
from .presets import PresetTable

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-8
DIAGONAL_TOL = 1e-10
BOUNDARY_MASS_LIMIT = 1e-6
BOUNDARY_FRACTION = 0.05
MAX_COLLAPSE_STEP = 0.1


@dataclass(frozen=True)
class ClumpParams:
    N: int = 1
    M: float = 1.0
    lam: float = 1.0
    a: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ParameterError(f"N must be a positive integer, got {self.N}")
        for name in ("M", "lam", "a"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be finite and > 0, got {value}")

    @classmethod
    def from_preset(cls, name: str, N: int = 1, table: Optional[PresetTable] = None) -> "ClumpParams":
        values = (table or PresetTable()).get(name)
        return cls(N=N, M=values["M"], lam=values["lambda"], a=values["a"])

    @property
    def m(self) -> float:
        """Clump mass N*M."""
        return self.N * self.M

    @property
    def lambda_tilde(self) -> float:
        return self.lam * self.N / (np.sqrt(2.0) * self.a)

    @property
    def alpha(self) -> float:
        return self.lambda_tilde / np.sqrt(self.m * self.lam)

    @property
    def collapse_rate(self) -> float:
        """Off-diagonal decay rate for separations much larger than a."""
        return self.lam * self.N**2

    def to_dict(self) -> Dict[str, Any]:
        return {"N": self.N, "M": self.M, "lambda": self.lam, "a": self.a}


@dataclass(frozen=True)
class GridDensityMatrix:
    grid: np.ndarray
    entries: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        entries = np.asarray(self.entries, dtype=complex)
        if grid.ndim != 1 or grid.size < 2:
            raise InputError("grid must be a 1-D array with at least two points")
        steps = np.diff(grid)
        if np.max(np.abs(steps - steps[0])) > 1e-9 * abs(steps[0]) or steps[0] <= 0:
            raise InputError("grid must be uniform and increasing")
        if entries.shape != (grid.size, grid.size):
            raise InputError(f"entries shape {entries.shape} does not match grid of {grid.size} points")
        if np.max(np.abs(entries - entries.conj().T)) > HERMITIAN_TOL * max(1.0, np.max(np.abs(entries))):
            raise InputError("grid density matrix is not Hermitian")
        diagonal = np.diag(entries).real
        if diagonal.min() < -DIAGONAL_TOL:
            raise InputError(f"negative diagonal entry {diagonal.min()!r}")
        trace = steps[0] * diagonal.sum()
        if abs(trace - 1.0) > TRACE_TOL:
            raise InputError(f"grid trace is {trace!r}, expected 1")
        grid.setflags(write=False)
        entries.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "entries", entries)

    @property
    def spacing(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def n_grid(self) -> int:
        return int(self.grid.size)

    def diagonal(self) -> np.ndarray:
        """Position probability density on the grid."""
        return np.diag(self.entries).real.copy()

    def trace(self) -> float:
        return float(self.spacing * np.sum(np.diag(self.entries).real))


def make_grid(n_grid: int, extent: float, center: float = 0.0) -> np.ndarray:
    """n_grid points spaced extent/n_grid apart, periodic-friendly (endpoint excluded)."""
    if n_grid < 2:
        raise ParameterError(f"n_grid must be >= 2, got {n_grid}")
    if not extent > 0:
        raise ParameterError(f"extent must be > 0, got {extent}")
    spacing = extent / n_grid
    return center + (np.arange(n_grid) - n_grid // 2) * spacing


def _gaussian_amplitude(grid: np.ndarray, center: float, width: float, k0: float = 0.0) -> np.ndarray:
    return np.exp(-((grid - center) ** 2) / (4.0 * width**2) + 1j * k0 * grid)


def _density_from_amplitude(grid: np.ndarray, psi: np.ndarray) -> GridDensityMatrix:
    spacing = grid[1] - grid[0]
    psi = psi / np.sqrt(spacing * np.sum(np.abs(psi) ** 2))
    return GridDensityMatrix(grid, np.outer(psi, psi.conj()))


def gaussian_pure_state(grid: np.ndarray, center: float, width: float, k0: float = 0.0) -> GridDensityMatrix:
    """Pure Gaussian packet with position spread `width`, normalized on the grid."""
    if not width > 0:
        raise ParameterError(f"width must be > 0, got {width}")
    grid = np.asarray(grid, dtype=float)
    return _density_from_amplitude(grid, _gaussian_amplitude(grid, center, width, k0))


def cat_state(grid: np.ndarray, separation: float, width: float) -> GridDensityMatrix:
    """Equal superposition of two Gaussians centred at +-separation/2."""
    if not width > 0:
        raise ParameterError(f"width must be > 0, got {width}")
    grid = np.asarray(grid, dtype=float)
    psi = _gaussian_amplitude(grid, -separation / 2.0, width) + _gaussian_amplitude(grid, separation / 2.0, width)
    return _density_from_amplitude(grid, psi)


def boundary_mass(rho: GridDensityMatrix, fraction: float = BOUNDARY_FRACTION) -> float:
    """Probability in the outer `fraction` of the grid on each side."""
    edge = max(1, int(np.ceil(fraction * rho.n_grid)))
    diagonal = rho.diagonal()
    return float(rho.spacing * (diagonal[:edge].sum() + diagonal[-edge:].sum()))


def position_moments(rho: GridDensityMatrix) -> Tuple[float, float]:
    """Mean and variance of the centre-of-mass position."""
    p = rho.diagonal() * rho.spacing
    mean = float(np.sum(p * rho.grid))
    return mean, float(np.sum(p * (rho.grid - mean) ** 2))


def free_width(sigma0: float, m: float, t: float) -> float:
    """Position spread of a free Gaussian that starts unchirped with spread sigma0."""
    return float(sigma0 * np.sqrt(1.0 + (t / (2.0 * m * sigma0**2)) ** 2))


# ---------------------------------------------------------------------------
# Rates
# ---------------------------------------------------------------------------

def _configuration(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise InputError(f"configuration must be (N,) or (N, d), got shape {x.shape}")
    return x


def _gaussian_sum(u: np.ndarray, v: np.ndarray, a: float) -> float:
    d2 = np.sum((u[:, None, :] - v[None, :, :]) ** 2, axis=-1)
    return float(np.sum(np.exp(-d2 / (4.0 * a**2))))


def pair_decay_kernel(x, x_prime, a: float) -> float:
    """Double sum over particle pairs; lam/2 times this is the decay rate of <x|rho|x'>."""
    if not a > 0:
        raise ParameterError(f"a must be > 0, got {a}")
    x = _configuration(x)
    x_prime = _configuration(x_prime)
    if x.shape != x_prime.shape:
        raise InputError(f"configurations differ: {x.shape} vs {x_prime.shape}")
    if np.array_equal(x, x_prime):
        return 0.0
    return _gaussian_sum(x, x, a) + _gaussian_sum(x_prime, x_prime, a) - 2.0 * _gaussian_sum(x, x_prime, a)


def cm_offdiag_rate(D, params: ClumpParams):
    """lam N^2 [1 - exp(-D^2 / 4a^2)]."""
    D = np.asarray(D, dtype=float)
    if np.any(D < 0):
        raise ParameterError("separation must be >= 0")
    rate = -params.collapse_rate * np.expm1(-(D**2) / (4.0 * params.a**2))
    return float(rate) if rate.ndim == 0 else rate


def modular_overlap_rate(L, params: ClumpParams):
    """Decay rate of the ensemble average of cos(P L); same function as cm_offdiag_rate."""
    return cm_offdiag_rate(L, params)


def characteristic_time(D: float, params: ClumpParams) -> float:
    return 1.0 / cm_offdiag_rate(D, params)


# ---------------------------------------------------------------------------
# Grid evolution
# ---------------------------------------------------------------------------

def collapse_factor(grid: np.ndarray, params: ClumpParams, duration: float) -> np.ndarray:
    """Exact collapse-only propagator entrywise on rho(X, X')."""
    separation = grid[:, None] - grid[None, :]
    return np.exp(-duration * cm_offdiag_rate(np.abs(separation), params))


def kinetic_phases(grid: np.ndarray, m: float, duration: float) -> np.ndarray:
    spacing = grid[1] - grid[0]
    k = 2.0 * np.pi * np.fft.fftfreq(grid.size, d=spacing)
    return np.exp(-1j * k**2 * duration / (2.0 * m))


def _apply_kinetic(entries: np.ndarray, phases: np.ndarray) -> np.ndarray:
    """U rho U^dagger with U diagonal in momentum."""
    left = np.fft.ifft(phases[:, None] * np.fft.fft(entries, axis=0), axis=0)
    both = np.fft.ifft(phases[:, None] * np.fft.fft(left.conj().T, axis=0), axis=0)
    return both.conj().T


def grid_evolve_cm(
    rho: GridDensityMatrix,
    params: ClumpParams,
    t: float,
    dt: float,
    include_kinetic: bool = False,
) -> GridDensityMatrix:
    """Strang split step: half collapse, full kinetic, half collapse.

    The step is shrunk to t / ceil(t / dt) so the final time is hit exactly.
    """
    if not dt > 0:
        raise ParameterError(f"dt must be > 0, got {dt}")
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    if dt * params.collapse_rate >= MAX_COLLAPSE_STEP:
        raise ParameterError(f"dt*lam*N^2 = {dt * params.collapse_rate:.3g} must be < {MAX_COLLAPSE_STEP}")
    edge_mass = boundary_mass(rho)
    if edge_mass > BOUNDARY_MASS_LIMIT:
        raise ParameterError(f"grid too small: boundary mass {edge_mass:.3g} exceeds {BOUNDARY_MASS_LIMIT}")
    if t == 0:
        return rho

    n_steps = int(np.ceil(t / dt - 1e-12))
    h = t / n_steps
    entries = rho.entries.copy()
    if not include_kinetic:
        entries *= collapse_factor(rho.grid, params, t)
    else:
        half = collapse_factor(rho.grid, params, h / 2.0)
        phases = kinetic_phases(rho.grid, params.m, h)
        for _ in range(n_steps):
            entries *= half
            entries = _apply_kinetic(entries, phases)
            entries *= half
    logger.debug(f"Grid evolution to t={t} in {n_steps} steps (kinetic={include_kinetic})")
    evolved = GridDensityMatrix(rho.grid, entries)
    if include_kinetic and boundary_mass(evolved) > BOUNDARY_MASS_LIMIT:
        logger.warning(f"Boundary mass {boundary_mass(evolved):.3g} after evolution; grid may alias")
    return evolved


def modular_overlap(rho: GridDensityMatrix, L: float) -> float:
    """Tr(rho cos(P L)) as the translation overlap Re sum_i rho(X_i, X_i + L) dX."""
    shift = L / rho.spacing
    steps = int(round(shift))
    if abs(shift - steps) > 1e-9 * max(1.0, abs(shift)):
        raise ParameterError(f"L={L} is not a multiple of the grid spacing {rho.spacing}")
    if abs(steps) >= rho.n_grid:
        raise ParameterError(f"L={L} exceeds the grid extent")
    return float(np.trace(rho.entries, offset=abs(steps)).real * rho.spacing)
