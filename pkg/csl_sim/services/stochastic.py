"""
Stochastic primitives
=====================
Reproducible random streams, Brownian noise paths, quadrature and the
error function shared by every collapse model.

Brownian convention: an increment dB carries variance lam*dt, so lam lives
inside the noise and formulas can be written without extra sqrt(lam) factors.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Sequence, Tuple, TypeVar

import numpy as np
from scipy import integrate as sp_integrate
from scipy import special

from .errors import InputError, NumericError, ParameterError

logger = logging.getLogger(__name__)

T = TypeVar("T")

MAX_SEED = 2**64


@dataclass(frozen=True)
class RngStream:
    """Counter-based stream keyed by (master_seed, stream_index).

    Trajectory i of any ensemble draws from stream i, so results do not
    depend on how trajectories are split across worker threads.
    """

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < MAX_SEED:
            raise ParameterError(f"master_seed must be in [0, 2^64), got {self.master_seed}")
        if int(self.stream_index) < 0:
            raise ParameterError(f"stream_index must be >= 0, got {self.stream_index}")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        seq = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.stream_index),))
        return np.random.Generator(np.random.Philox(seq))

    def spawn(self, stream_index: int) -> "RngStream":
        return RngStream(self.master_seed, stream_index)

    def to_dict(self) -> Dict[str, int]:
        return {"master_seed": int(self.master_seed), "stream_index": int(self.stream_index)}


def sample_normals(n: int, stream: RngStream) -> np.ndarray:
    """n standard normals from the start of `stream`."""
    if n < 0:
        raise ParameterError(f"sample count must be >= 0, got {n}")
    return stream.generator().standard_normal(n)


@dataclass(frozen=True)
class NoisePath:
    """Brownian increments on the uniform lattice t_k = k*dt, k = 0..n_steps."""

    dt: float
    increments: np.ndarray
    lam: float = 1.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError(f"dt must be > 0, got {self.dt}")
        increments = np.asarray(self.increments, dtype=float)
        if increments.ndim != 1:
            raise InputError(f"increments must be one-dimensional, got shape {increments.shape}")
        increments.setflags(write=False)
        object.__setattr__(self, "increments", increments)

    @property
    def n_steps(self) -> int:
        return int(self.increments.shape[0])

    @property
    def duration(self) -> float:
        return self.n_steps * self.dt

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def cumulative(self) -> np.ndarray:
        """B(t_k) with B(0) = 0, length n_steps + 1."""
        return np.concatenate(([0.0], np.cumsum(self.increments)))

    def values(self) -> np.ndarray:
        """Step-constant white-noise values dB_k / dt."""
        return self.increments / self.dt

    def to_dict(self) -> Dict[str, Any]:
        return {"dt": self.dt, "lam": self.lam, "n_steps": self.n_steps}


def sample_noise_path(dt: float, n_steps: int, lam: float, stream: RngStream) -> NoisePath:
    """Brownian path with increments ~ N(0, lam*dt).

    The same stream gives the same standard normals for every (lam, dt), so
    paths for different rates are rescalings of each other.
    """
    if not dt > 0:
        raise ParameterError(f"dt must be > 0, got {dt}")
    if n_steps < 1:
        raise ParameterError(f"n_steps must be >= 1, got {n_steps}")
    if not lam > 0:
        raise ParameterError(f"lam must be > 0, got {lam}")
    z = sample_normals(n_steps, stream)
    return NoisePath(dt=dt, increments=np.sqrt(lam) * np.sqrt(dt) * z, lam=lam)


def integrate(f: Callable[[np.ndarray], Any], t0: float, t1: float, n: int = 10_000) -> float:
    """Composite Simpson rule for f on [t0, t1] with n intervals (bumped to even)."""
    if not np.isfinite(t0) or not np.isfinite(t1):
        raise ParameterError(f"integration bounds must be finite, got [{t0}, {t1}]")
    if t1 < t0:
        raise ParameterError(f"integration bounds reversed: [{t0}, {t1}]")
    if n < 2:
        raise ParameterError(f"need at least 2 intervals, got {n}")
    if t1 == t0:
        return 0.0
    if n % 2:
        n += 1
    ts = np.linspace(t0, t1, n + 1)
    ys = np.broadcast_to(np.asarray(f(ts)), ts.shape)
    value = sp_integrate.simpson(ys, x=ts)
    if not np.all(np.isfinite(value)):
        raise NumericError(f"quadrature on [{t0}, {t1}] produced {value}")
    if np.iscomplexobj(value):
        return complex(value)
    return float(value)


def erf(x):
    """Error function, double precision over the whole real line."""
    return special.erf(x)


def standard_error(samples: Sequence[float]) -> float:
    values = np.asarray(samples, dtype=float)
    if values.size < 2:
        raise InputError("standard error needs at least two samples")
    return float(np.std(values, ddof=1) / np.sqrt(values.size))


def block_ranges(n_items: int, block_size: int) -> List[Tuple[int, int]]:
    if block_size < 1:
        raise ParameterError(f"block_size must be >= 1, got {block_size}")
    return [(start, min(start + block_size, n_items)) for start in range(0, n_items, block_size)]


def run_blocks(
    fn: Callable[[Tuple[int, int]], T],
    n_items: int,
    block_size: int,
    workers: int = 1,
) -> List[T]:
    """Apply fn to consecutive [start, stop) blocks; results come back in block order."""
    if workers < 1:
        raise ParameterError(f"workers must be >= 1, got {workers}")
    blocks = block_ranges(n_items, block_size)
    logger.debug(f"Running {len(blocks)} blocks of up to {block_size} items on {workers} worker(s)")
    if workers == 1 or len(blocks) <= 1:
        return [fn(block) for block in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, blocks))
