"""Exact circulant-embedding samplers for stationary Gaussian sequences and sheets.

A d-dimensional sheet with separable covariance ``prod_j r_j(i_j - k_j)`` is
obtained by applying the square root of each axis' circulant embedding to a
white-noise grid, one axis at a time, and cropping.

Randomness: every array is drawn from ``numpy.random.PCG64`` seeded with a
64-bit integer.  Replica ``r`` of an experiment with root seed ``S`` uses
``mix_seed(S, r)`` (splitmix64 finalizer applied to ``S ^ splitmix64(r)``), so
replica sets are reproducible whatever the execution order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import fft as sfft

GENERATOR_ID = "numpy.random.PCG64+splitmix64"
MEMORY_CAP_CELLS = 1 << 26  # simulation cells per field
NEGATIVE_EIGEN_TOL = 1e-9

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def mix_seed(root_seed: int, replica: int) -> int:
    """64-bit seed of replica ``replica`` under ``root_seed``."""
    return splitmix64((int(root_seed) & _MASK) ^ splitmix64(int(replica) & _MASK))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK))


@dataclass(frozen=True)
class GridSpec:
    n_per_axis: tuple[int, ...]
    memory_cap: int = MEMORY_CAP_CELLS

    def __post_init__(self):
        n = tuple(int(v) for v in self.n_per_axis)
        object.__setattr__(self, "n_per_axis", n)
        if len(n) < 1:
            raise ValueError("grid needs at least one axis")
        if any(v < 2 for v in n):
            raise ValueError(f"grid resolutions must be >= 2, got {n}")
        if math.prod(n) > self.memory_cap:
            raise MemoryError(f"grid {n} exceeds the memory cap of {self.memory_cap} cells")

    @property
    def d(self) -> int:
        return len(self.n_per_axis)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n_per_axis


@dataclass(frozen=True)
class NoiseArray:
    grid: GridSpec
    values: np.ndarray
    hurst: tuple[float, ...]
    seed: int
    generator: str = GENERATOR_ID
    meta: dict = field(default_factory=dict)


def fgn_autocovariance(h: float, k):
    """Autocovariance of unit-variance fractional Gaussian noise at lag ``k``."""
    if not (0.0 < h < 1.0):
        raise ValueError(f"h must lie in (0, 1), got {h}")
    k = np.abs(np.asarray(k, dtype=float))
    out = 0.5 * (np.abs(k + 1.0) ** (2 * h) - 2.0 * k ** (2 * h) + np.abs(k - 1.0) ** (2 * h))
    return out if out.ndim else float(out)


def circulant_sqrt_eigenvalues(acov: np.ndarray) -> np.ndarray:
    """Square roots of the eigenvalues of a circulant embedding.

    ``acov[k]`` is the covariance at lag ``k`` for ``k = 0..L``; the embedding
    has size ``2L`` (1 when ``L == 0``) and reproduces the covariance of any
    ``L`` consecutive sites.  Tiny negative eigenvalues are clamped to zero;
    anything below ``-NEGATIVE_EIGEN_TOL`` is an error.
    """
    acov = np.asarray(acov, dtype=float)
    n = acov.size
    if n == 1:
        return np.sqrt(np.array([max(acov[0], 0.0)]))
    row = np.concatenate([acov, acov[-2:0:-1]])
    lam = sfft.rfft(row).real
    if lam.min() < -NEGATIVE_EIGEN_TOL * max(1.0, lam.max()):
        raise ValueError(f"circulant embedding not nonnegative definite (min eigenvalue {lam.min():.3e})")
    return np.sqrt(np.clip(lam, 0.0, None))


def embedding_size(n: int) -> int:
    # 2n rather than the minimal 2(n-1): a power of two for dyadic grids
    return 2 * n


@lru_cache(maxsize=64)
def _cached_filter(kind: str, h: float, q: int, n: int) -> np.ndarray:
    return circulant_sqrt_eigenvalues(axis_autocovariance(kind, h, q, n + 1))


def axis_autocovariance(kind: str, h: float, q: int, n: int) -> np.ndarray:
    """Lag-0..n-1 covariance of a named stationary substrate.

    ``"fgn"``: fractional Gaussian noise with index ``h``.
    ``"matched"``: ``fgn_autocovariance(h, k) ** (1/q)``, whose ``q``-th power is
    exactly the fGn covariance with index ``h`` (used for Hermite-rank fields).
    """
    lags = np.arange(n)
    base = fgn_autocovariance(h, lags)
    if kind == "fgn":
        return base
    if kind == "matched":
        return np.power(np.clip(base, 0.0, None), 1.0 / q)
    raise ValueError(f"unknown substrate {kind!r}")


def filter_white_noise(white: np.ndarray, sqrt_eigs: Sequence[np.ndarray], shape: Sequence[int]) -> np.ndarray:
    """Apply per-axis circulant square roots to ``white`` and crop to ``shape``.

    ``white`` has leading batch axes followed by one axis per entry of
    ``sqrt_eigs`` (of embedding size).  Axes are processed last to first; each
    line along an axis is transformed independently, so the result does not
    depend on how lines are batched.
    """
    x = white
    d = len(sqrt_eigs)
    for j in range(d - 1, -1, -1):
        axis = x.ndim - d + j
        m = x.shape[axis]
        s = sqrt_eigs[j]
        bshape = [1] * x.ndim
        bshape[axis] = s.size
        spec = sfft.rfft(x, axis=axis)
        spec *= s.reshape(bshape)
        x = sfft.irfft(spec, n=m, axis=axis, overwrite_x=True)
        crop = [slice(None)] * x.ndim
        crop[axis] = slice(0, shape[j])
        x = x[tuple(crop)]
    return np.ascontiguousarray(x)


def sample_separable(shape: Sequence[int], sqrt_eigs: Sequence[np.ndarray], rng: np.random.Generator,
                     batch: int | None = None) -> np.ndarray:
    emb = tuple(embedding_size(n) for n in shape)
    lead = () if batch is None else (batch,)
    white = rng.standard_normal(lead + emb)
    return filter_white_noise(white, sqrt_eigs, shape)


def sample_fgn(n: int, h: float, seed: int) -> np.ndarray:
    """``n`` exact fractional-Gaussian-noise variates (unit variance)."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if not (0.0 < h < 1.0):
        raise ValueError(f"h must lie in (0, 1), got {h}")
    s = circulant_sqrt_eigenvalues(fgn_autocovariance(h, np.arange(n + 1)))
    return sample_separable((n,), [s], make_rng(seed))


def sample_stationary_sheet(grid: GridSpec, autocovs: Sequence[np.ndarray], seed: int) -> np.ndarray:
    """Gaussian grid with covariance ``prod_j autocovs[j][|i_j - k_j|]``.

    Each autocovariance must cover lags ``0..n_j`` (one beyond the grid).
    """
    if len(autocovs) != grid.d:
        raise ValueError("one autocovariance per axis required")
    eigs = [circulant_sqrt_eigenvalues(a[: n + 1]) for a, n in zip(autocovs, grid.shape)]
    return sample_separable(grid.shape, eigs, make_rng(seed))


def sample_sheet_increments(grid: GridSpec, H, seed: int) -> NoiseArray:
    """Increments of a fractional Brownian sheet on ``grid`` (unit-variance cells)."""
    H = tuple(float(h) for h in np.atleast_1d(H))
    if len(H) != grid.d:
        raise ValueError(f"Hurst vector has {len(H)} entries, grid has {grid.d} axes")
    eigs = [_cached_filter("fgn", h, 1, n) for h, n in zip(H, grid.shape)]
    values = sample_separable(grid.shape, eigs, make_rng(seed))
    return NoiseArray(grid=grid, values=values, hurst=H, seed=int(seed))


def substrate_filters(kind: str, H_sub: Sequence[float], q: int, shape: Sequence[int]) -> list[np.ndarray]:
    return [_cached_filter(kind, float(h), int(q), int(n)) for h, n in zip(H_sub, shape)]


def replica_map(fn: Callable[[int], object], seeds: Sequence[int], workers: int = 1) -> list:
    """Evaluate ``fn(seed)`` for every seed, optionally in worker processes.

    Results come back in seed order and do not depend on ``workers``.
    """
    if workers <= 1:
        return [fn(s) for s in seeds]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, seeds, chunksize=max(1, len(seeds) // (4 * workers))))
