"""Sample fields of the Hermite random field and their rectangular increments.

Two independent constructions are provided:

* ``simulate_hermite_rank`` - normalized partial multi-sums of ``H_q(X)`` where
  ``X`` is a stationary Gaussian sheet whose covariance has long-range tail
  ``|k|**(2H'-2)`` per axis (non-central limit construction).
* ``simulate_direct_kernel`` - discretized double Wiener-Ito integral of the
  finite-time kernel (order 2, one parameter only).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np

from . import gaussian
from scipy.special import beta as beta_fn, betainc

from ._rules import legendre01
from .params import MAX_Q, ModelParams, as_grid
from .volterra import kernel_constant

MIN_RESOLUTION = 8
DIRECT_KERNEL_MAX_N = 256
DEFAULT_SUBSTRATE = "matched"


@dataclass(frozen=True)
class SampleField:
    """Field values on the lattice ``{0, 1/n_j, ..., 1}`` per axis.

    ``values`` has shape ``(n_1 + 1, ..., n_d + 1)``; entries with a zero
    coordinate are 0.
    """

    params: ModelParams
    grid: gaussian.GridSpec
    values: np.ndarray
    method: str
    seed: int
    substrate: str | None = None
    generator: str = gaussian.GENERATOR_ID

    def at_one(self) -> float:
        return float(self.values[(-1,) * self.values.ndim])


@dataclass(frozen=True)
class IncrementArray:
    shape: tuple[int, ...]
    values: np.ndarray
    params: ModelParams
    meta: dict = field(default_factory=dict)


def hermite_poly(q: int, x):
    """Probabilists' Hermite polynomial ``H_q`` (leading coefficient 1)."""
    if int(q) != q or not (0 <= q <= MAX_Q):
        raise ValueError(f"q must be an integer in 0..{MAX_Q}, got {q}")
    x = np.asarray(x, dtype=float)
    if q == 0:
        return np.ones_like(x)
    prev, cur = np.ones_like(x), x.copy()
    for k in range(1, int(q)):
        prev, cur = cur, x * cur - k * prev
    return cur if cur.ndim else float(cur)


def _substrate_hurst(params: ModelParams, substrate: str) -> tuple[float, ...]:
    # "matched" is parametrized by H itself (its q-th power is fGn(H));
    # "fgn" draws fractional Gaussian noise with index H'.
    if substrate == "matched":
        return params.H
    if substrate == "fgn":
        return params.H_prime
    raise ValueError(f"unknown substrate {substrate!r}")


def _axis_power_sum(acov: np.ndarray, q: int) -> float:
    n = acov.size
    m = np.arange(1, n)
    return float(n * acov[0] ** q + 2.0 * np.sum((n - m) * acov[1:] ** q))


def hermite_rank_variance(params: ModelParams, shape: Sequence[int], substrate: str = DEFAULT_SUBSTRATE) -> float:
    """Exact variance of ``sum_i H_q(X_i)`` over a box of the given shape.

    Equals ``q! * prod_j sum_{i,k} r_j(i-k)**q``; for the matched substrate each
    factor is ``n_j**(2 H_j)``.
    """
    hs = _substrate_hurst(params, substrate)
    var = float(math.factorial(params.q))
    for h, n in zip(hs, shape):
        var *= _axis_power_sum(gaussian.axis_autocovariance(substrate, h, params.q, int(n)), params.q)
    return var


def _cumulative(values: np.ndarray) -> np.ndarray:
    out = np.zeros(tuple(s + 1 for s in values.shape))
    out[(slice(1, None),) * values.ndim] = values
    for ax in range(values.ndim):
        np.cumsum(out, axis=ax, out=out)
    return out


def hermite_rank_cells(params: ModelParams, shape: Sequence[int], seed: int,
                       substrate: str = DEFAULT_SUBSTRATE) -> np.ndarray:
    """Normalized cell contributions ``H_q(X_i) / sqrt(Var)`` on the simulation grid."""
    shape = tuple(int(n) for n in shape)
    hs = _substrate_hurst(params, substrate)
    eigs = gaussian.substrate_filters(substrate, hs, params.q, shape)
    x = gaussian.sample_separable(shape, eigs, gaussian.make_rng(seed))
    y = hermite_poly(params.q, x)
    y /= math.sqrt(hermite_rank_variance(params, shape, substrate))
    return y


def simulate_hermite_rank(params: ModelParams, grid, seed: int, substrate: str = DEFAULT_SUBSTRATE) -> SampleField:
    """Hermite-rank sample field normalized to unit variance at the point 1."""
    if not isinstance(grid, gaussian.GridSpec):
        grid = gaussian.GridSpec(as_grid(grid, params.d))
    if grid.d != params.d:
        raise ValueError(f"grid has {grid.d} axes, params have d={params.d}")
    if min(grid.shape) < MIN_RESOLUTION:
        raise ValueError(f"resolution must be >= {MIN_RESOLUTION} per axis, got {grid.shape}")
    cells = hermite_rank_cells(params, grid.shape, seed, substrate)
    return SampleField(params=params, grid=grid, values=_cumulative(cells), method="hermite_rank",
                       seed=int(seed), substrate=substrate)


# --- direct discretization of the double Wiener-Ito integral (q=2, d=1) ---

def _check_direct_scope(params: ModelParams, n: int) -> None:
    if params.q != 2 or params.d != 1:
        raise ValueError("direct-kernel construction supports q=2, d=1 only")
    if not (2 <= n <= DIRECT_KERNEL_MAX_N):
        raise ValueError(f"direct-kernel resolution must be in 2..{DIRECT_KERNEL_MAX_N}, got {n}")


def _graded_segment_rule(levels: int = 10, nodes: int = 8) -> tuple[np.ndarray, np.ndarray]:
    # local rule on [0, 1] graded toward 0, where cell antiderivatives have
    # (t)**(h - 1/2) endpoint behaviour
    tl, wl = legendre01(nodes)
    xs, ws = [], []
    lo = 0.0
    for i in range(levels, 0, -1):
        hi = 2.0 ** (-i + 1) if i > 1 else 1.0
        hi = min(hi, 1.0)
        a = 2.0 ** (-i) if i < levels else 0.0
        a = max(a, lo)
        xs.append(a + (hi - a) * tl)
        ws.append((hi - a) * wl)
        lo = hi
    return np.concatenate(xs), np.concatenate(ws)


def direct_kernel_mesh(n: int, levels: int = 60) -> np.ndarray:
    """Cell edges: the uniform lattice ``k/n`` with the first cell split
    geometrically ``levels`` times toward 0, where the kernel blows up like
    ``x**(1/2 - h)``."""
    first = [0.0] + [2.0 ** (-i) / n for i in range(levels, 0, -1)]
    return np.concatenate([first, np.arange(1, n + 1) / n])


def cell_antiderivative(u, h: float, edges: np.ndarray) -> np.ndarray:
    """``A[t, k] = int_{cell k, x < u_t} dK(u_t, x) dx`` for cells between ``edges``.

    Closed form through the regularized incomplete Beta function.
    """
    u = np.asarray(u, dtype=float)[:, None]
    a = edges[None, :-1]
    b = edges[None, 1:]
    p, r = 1.5 - h, h - 0.5
    lo = np.clip(a / u, 0.0, 1.0)
    hi = np.clip(b / u, 0.0, 1.0)
    scale = kernel_constant(h) * beta_fn(p, r) * u ** (h - 0.5)
    return scale * (betainc(p, r, hi) - betainc(p, r, lo))


@lru_cache(maxsize=8)
def _segment_kernels(h: float, n: int, levels: int = 60):
    """Mesh widths and per-segment kernel matrices.

    ``S[j][k, l] = int_{seg j} A_k(u) A_l(u) du / (w_k w_l)`` for cells
    ``k, l <= j``; summing over segments below ``t`` gives the cell averages of
    ``int_{x v y}^t dK(u, x) dK(u, y) du``.
    """
    edges = direct_kernel_mesh(n, levels)
    widths = np.diff(edges)
    t, w = _graded_segment_rule()
    out = []
    for j in range(widths.size):
        u = edges[j] + widths[j] * t
        A = cell_antiderivative(u, h, edges[: j + 2]) / widths[None, : j + 1]
        out.append((A * (w * widths[j])[:, None]).T @ A)
    return widths, out


def direct_kernel_matrix(params: ModelParams, n: int, upto: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Cell widths and cell-averaged kernel ``b * g_t`` for ``t = upto/n`` (default 1)."""
    _check_direct_scope(params, n)
    widths, S = _segment_kernels(params.H_prime[0], n)
    extra = widths.size - n
    upto = widths.size if upto is None else int(upto) + extra
    m = widths.size
    g = np.zeros((m, m))
    for j in range(upto):
        g[: j + 1, : j + 1] += S[j]
    return widths, params.b_qH * g


def _check_diagonal(diagonal: str) -> None:
    if diagonal not in ("wick", "exclude"):
        raise ValueError(f"diagonal must be 'wick' or 'exclude', got {diagonal!r}")


def direct_kernel_second_moment(params: ModelParams, n: int, diagonal: str = "wick") -> float:
    """Exact ``E[Z(1)^2]`` of the discretized integral, ``2 sum_kl G_kl^2 w_k w_l``."""
    _check_diagonal(diagonal)
    w, g = direct_kernel_matrix(params, n)
    if diagonal == "exclude":
        g = g - np.diag(np.diag(g))
    return float(2.0 * np.sum(g * g * np.outer(w, w)))


def _quadratic_form(g: np.ndarray, dw: np.ndarray, widths: np.ndarray, diagonal: str) -> float:
    diag = np.diag(g)
    off = float(dw @ g @ dw) - float(np.sum(diag * dw * dw))
    if diagonal == "exclude":
        return off
    return off + float(np.sum(diag * (dw * dw - widths)))


def _brownian_cells(seed: int, widths: np.ndarray) -> np.ndarray:
    return gaussian.make_rng(seed).standard_normal(widths.size) * np.sqrt(widths)


def simulate_direct_kernel(params: ModelParams, n: int, seed: int, diagonal: str = "wick") -> SampleField:
    """Discretized double Wiener-Ito integral of the finite-time kernel.

    ``Z(t) = sum_{k != l} G_kl dW_k dW_l + sum_k G_kk (dW_k^2 - w_k)`` where
    ``G`` is the cell average of ``b * g_t`` on ``direct_kernel_mesh(n)`` and
    ``w_k`` the cell widths; ``diagonal="exclude"`` drops the renormalized
    diagonal terms.  Values are reported on the uniform lattice ``k/n``.
    """
    _check_direct_scope(params, n)
    _check_diagonal(diagonal)
    widths, S = _segment_kernels(params.H_prime[0], n)
    dw = _brownian_cells(seed, widths)
    b = params.b_qH
    extra = widths.size - n
    z = np.zeros(n + 1)
    acc = 0.0
    for j in range(widths.size):
        acc += b * _quadratic_form(S[j], dw[: j + 1], widths[: j + 1], diagonal)
        if j >= extra:
            z[j - extra + 1] = acc
    grid = gaussian.GridSpec((n,))
    return SampleField(params=params, grid=grid, values=z, method="direct_kernel", seed=int(seed),
                       substrate=f"brownian/{diagonal}")


def direct_kernel_terminal(params: ModelParams, n: int, seeds: Sequence[int], diagonal: str = "wick") -> np.ndarray:
    """``Z(1)`` of ``simulate_direct_kernel`` for each seed, without the path."""
    _check_diagonal(diagonal)
    widths, g = direct_kernel_matrix(params, n)
    out = np.empty(len(seeds))
    for i, s in enumerate(seeds):
        out[i] = _quadratic_form(g, _brownian_cells(s, widths), widths, diagonal)
    return out


# --- increments ---

def box_increments(field: SampleField, N) -> IncrementArray:
    """Rectangular increments over the boxes ``[i/N, (i+1)/N]``.

    Computed as ``sum_{r in {0,1}^d} (-1)^(d - |r|) Z((i + r)/N)``, accumulating
    corners in lexicographic order of ``r``.
    """
    d = field.params.d
    N = as_grid(N, d)
    n = field.values.shape
    steps = []
    for Nj, nj in zip(N, n):
        if (nj - 1) % Nj:
            raise ValueError(f"observation resolution {Nj} does not divide simulation resolution {nj - 1}")
        steps.append((nj - 1) // Nj)
    coarse = field.values[tuple(slice(None, None, s) for s in steps)]
    inc = np.zeros(N)
    for r in product((0, 1), repeat=d):
        sign = -1.0 if (d - sum(r)) % 2 else 1.0
        inc += sign * coarse[tuple(slice(rj, rj + Nj) for rj, Nj in zip(r, N))]
    return IncrementArray(shape=N, values=inc, params=field.params,
                          meta={"method": field.method, "seed": field.seed})
