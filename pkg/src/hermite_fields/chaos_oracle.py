"""Deterministic variance formulas for the chaos components of ``V_N``.

Every variance reduces, axis by axis, to a sum over lattice displacements of
the four-dimensional unit-cube integral

    I(m) = int |u-v|**a |u'-v'|**a |u-u'+m|**b |v-v'+m|**b  du dv du' dv'

with ``a = (2H'-2) r`` and ``b = (2H'-2)(q-r)``.  Three schemes are used:

* ``m`` in {0, 1}: the singular sets touch the cube, so the integrand is
  projected onto piecewise constants of a uniform mesh, with each 2-d cell
  integral of ``|x - y + s|**a`` evaluated exactly.  Error is reported from a
  half-resolution rerun.
* ``2 <= m < SERIES_FROM``: Duffy split of each ``(u, v)`` pair along the
  diagonal with a Gauss-Jacobi rule for ``|u-v|**a``; the shift factors are
  smooth, so convergence is spectral.
* ``m >= SERIES_FROM``: binomial series of ``(m + x)**b`` in ``x/m`` with
  moments taken on the same Duffy rule.  No displacement is dropped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import binom

from ._rules import jacobi01_left, legendre01
from .params import ModelParams, as_grid, derive_exponents, f3_product, kernel_power_product

GALERKIN_CELLS = 1024
DUFFY_NODES = 16
SERIES_FROM = 24
SERIES_TERMS = 30
GALERKIN_RTOL = 1e-4


class QuadratureError(RuntimeError):
    pass


# --- per-axis displacement integrals ---

def _phi(t, a: float):
    return np.abs(t) ** (a + 2.0) / ((a + 1.0) * (a + 2.0))


def _cell_matrix(M: int, a: float, shift: float) -> np.ndarray:
    # exact int_{cell k} int_{cell l} |x - y + shift|**a dx dy
    e = np.linspace(0.0, 1.0, M + 1)
    x0, x1 = e[:-1, None], e[1:, None]
    y0, y1 = e[None, :-1], e[None, 1:]
    return _phi(x1 - y0 + shift, a) - _phi(x1 - y1 + shift, a) - _phi(x0 - y0 + shift, a) + _phi(x0 - y1 + shift, a)


def galerkin_integral(alpha: float, beta: float, m: float, cells: int = GALERKIN_CELLS) -> float:
    A = _cell_matrix(cells, alpha, 0.0)
    B = _cell_matrix(cells, beta, float(m))
    # sum A[u,v] B[v,v'] * B[u,u'] A[u',v'] over v, u'
    return float(np.sum((A @ B) * (B @ A)) * cells**4)


@lru_cache(maxsize=64)
def galerkin_with_error(alpha: float, beta: float, m: int, cells: int = GALERKIN_CELLS) -> tuple[float, float]:
    fine = galerkin_integral(alpha, beta, m, cells)
    coarse = galerkin_integral(alpha, beta, m, cells // 2)
    return fine, abs(fine - coarse)


@lru_cache(maxsize=32)
def duffy_pair_rule(alpha: float, n: int = DUFFY_NODES) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nodes ``(u, v)`` and weights for ``int_[0,1]^2 |u-v|**alpha f(u, v)``.

    Both orderings ``u > v`` and ``u < v`` are included, so the rule is
    symmetric under ``u <-> v``.
    """
    x, wx = jacobi01_left(n, alpha)
    t, wt = legendre01(n)
    U, V, W = [], [], []
    for xi, wi in zip(x, wx):
        u = xi + (1.0 - xi) * t
        ww = wi * wt * (1.0 - xi)
        U += [u, u - xi]
        V += [u - xi, u]
        W += [ww, ww]
    return np.concatenate(U), np.concatenate(V), np.concatenate(W)


def _pair_differences(alpha: float):
    u, v, w = duffy_pair_rule(alpha)
    return u[:, None] - u[None, :], v[:, None] - v[None, :], w[:, None] * w[None, :]


def duffy_integral(alpha: float, beta: float, m: float) -> float:
    du, dv, W = _pair_differences(alpha)
    return float(np.sum(W * np.abs(du + m) ** beta * np.abs(dv + m) ** beta))


@lru_cache(maxsize=16)
def _series_moments(alpha: float) -> np.ndarray:
    # M[k, l] = int |u-v|^a |u'-v'|^a (u-u')^k (v-v')^l
    du, dv, W = _pair_differences(alpha)
    x, y, w = du.ravel(), dv.ravel(), W.ravel()
    px = np.vander(x, SERIES_TERMS, increasing=True)
    py = np.vander(y, SERIES_TERMS, increasing=True)
    return (px * w[:, None]).T @ py


def series_integral(alpha: float, beta: float, m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if np.any(m < SERIES_FROM):
        raise ValueError(f"series evaluation needs displacement >= {SERIES_FROM}")
    k = np.arange(SERIES_TERMS)
    c = binom(beta, k)
    Mk = _series_moments(alpha) * np.outer(c, c)
    # sum_{k,l} Mk[k,l] m^{-k-l}, grouped by total degree
    deg = k[:, None] + k[None, :]
    by_degree = np.bincount(deg.ravel(), weights=Mk.ravel())
    powers = m[:, None] ** (-np.arange(by_degree.size)[None, :])
    return m ** (2.0 * beta) * (powers @ by_degree)


@dataclass(frozen=True)
class DisplacementTable:
    """``I(0), ..., I(n-1)`` for one ``(alpha, beta)`` with a quadrature error estimate."""

    alpha: float
    beta: float
    values: np.ndarray
    error_estimate: float


@lru_cache(maxsize=64)
def displacement_table(alpha: float, beta: float, n: int, cells: int = GALERKIN_CELLS) -> DisplacementTable:
    """Displacement integrals ``I(m)`` for ``m = 0..n-1`` (``n >= 1``).

    ``error_estimate`` is the largest relative change of the Galerkin values
    under halving of the mesh.
    """
    out = np.empty(n)
    err = 0.0
    for m in range(min(n, 2)):
        out[m], e = galerkin_with_error(alpha, beta, m, cells)
        if e > GALERKIN_RTOL * abs(out[m]):
            raise QuadratureError(
                f"displacement {m} integral not converged: value {out[m]:.6g}, error estimate {e:.3g}"
            )
        err = max(err, e / abs(out[m]))
    mid = range(2, min(n, SERIES_FROM))
    for m in mid:
        out[m] = duffy_integral(alpha, beta, m)
    if n > SERIES_FROM:
        out[SERIES_FROM:] = series_integral(alpha, beta, np.arange(SERIES_FROM, n))
    out.setflags(write=False)
    return DisplacementTable(alpha=alpha, beta=beta, values=out, error_estimate=err)


def displacement_integral(alpha: float, beta: float, m: int) -> float:
    """Single ``I(m)``; negative displacements are evaluated directly, not by symmetry."""
    m = int(m)
    if abs(m) <= 1:
        return galerkin_with_error(alpha, beta, m)[0]
    if abs(m) < SERIES_FROM or m < 0:
        return duffy_integral(alpha, beta, m)
    return float(series_integral(alpha, beta, np.array([m]))[0])


def displacement_sum(I: np.ndarray, N: int, include_zero: bool = True) -> float:
    """``N**-2 sum_{i,k<N} I(|i-k|)`` by multiplicities ``N - |m|``."""
    m = np.arange(1, N)
    off = 2.0 * math.fsum((N - m) * I[1:N])
    return float((off + (N * I[0] if include_zero else 0.0)) / N**2)


def brute_force_displacement_sum(alpha: float, beta: float, N: int) -> float:
    """Same quantity as ``displacement_sum`` over all ordered pairs ``(i, k)``."""
    cache: dict[int, float] = {}
    total = []
    for i in range(N):
        for k in range(N):
            m = i - k
            if m not in cache:
                cache[m] = displacement_integral(alpha, beta, m)
            total.append(cache[m])
    return math.fsum(total) / N**2


# --- assembled variances ---

def _exponents(params: ModelParams, r: int) -> list[tuple[float, float]]:
    return [((2.0 * hp - 2.0) * r, (2.0 * hp - 2.0) * (params.q - r)) for hp in params.H_prime]


def _check_q(params: ModelParams) -> None:
    if params.q < 2:
        raise ValueError("chaos variances of the quadratic variation need q >= 2")


def _axis_sums(N: Sequence[int], params: ModelParams, r: int, include_zero: bool = True) -> list[float]:
    out = []
    for (a, b), Nj in zip(_exponents(params, r), N):
        if Nj < 2:
            raise ValueError(f"each N_j must be >= 2, got {Nj}")
        table = displacement_table(a, b, Nj)
        out.append(displacement_sum(table.values, Nj, include_zero))
    return out


def _prefactor(params: ModelParams, order: int) -> float:
    return math.factorial(order) * params.b_qH**4 * kernel_power_product(params, 2 * params.q)


def second_chaos_variance(N, params: ModelParams) -> float:
    """``E[F_{2,N}^2]`` from the displacement-reduced cube integrals."""
    _check_q(params)
    N = as_grid(N, params.d)
    return _prefactor(params, 2) * math.prod(_axis_sums(N, params, params.q - 1))


def diagonal_variance(N, params: ModelParams) -> float:
    """Part of ``E[F_{2,N}^2]`` from pairs of boxes sharing an index on some axis."""
    _check_q(params)
    N = as_grid(N, params.d)
    full = math.prod(_axis_sums(N, params, params.q - 1))
    off = math.prod(_axis_sums(N, params, params.q - 1, include_zero=False))
    return _prefactor(params, 2) * (full - off)


def rate_scale(N, params: ModelParams) -> float:
    """``prod_j N_j**(2 (2 - 2 H'_j))``."""
    N = as_grid(N, params.d)
    return math.prod(n ** (2.0 * (2.0 - 2.0 * hp)) for n, hp in zip(N, params.H_prime))


def normalized_ratio(N, params: ModelParams) -> float:
    """``c1**-1 * N**(2(2-2H')) * E[F_{2,N}^2]``; tends to 1."""
    return rate_scale(N, params) * second_chaos_variance(N, params) / params.c1_H


def higher_chaos_bound(N, params: ModelParams, r: int) -> float:
    """Upper bound on ``E[F_{2q-2r,N}^2]`` for ``r = 0..q-2``.

    Uses the unsymmetrized contraction kernel, whose norm dominates the
    symmetrized one.
    """
    _check_q(params)
    if not (0 <= r <= params.q - 2):
        raise ValueError(f"r must lie in 0..{params.q - 2}, got {r}")
    N = as_grid(N, params.d)
    return _prefactor(params, 2 * params.q - 2 * r) * math.prod(_axis_sums(N, params, r))


def limit_constant_f3(params: ModelParams) -> float:
    _check_q(params)
    return f3_product(params)


def line_integral_oracle(hp: float, nodes: int = 32) -> tuple[float, float]:
    """``2 int_0^1 (1-x) x**(4h-4) dx`` by Gauss-Jacobi and in closed form."""
    x, w = jacobi01_left(nodes, 4.0 * hp - 4.0)
    return float(2.0 * np.sum(w * (1.0 - x))), 2.0 / ((4.0 * hp - 3.0) * (4.0 * hp - 2.0))


def vn_variance_prediction(N, params: ModelParams) -> float:
    """``E[V_N^2]``: exact second chaos plus bounds for the higher chaoses."""
    _check_q(params)
    c = params.chaos_coeffs
    total = [c[-1] ** 2 * second_chaos_variance(N, params)]
    total += [c[r] ** 2 * higher_chaos_bound(N, params, r) for r in range(params.q - 1)]
    return math.fsum(total)


@dataclass(frozen=True)
class VarianceReport:
    N: tuple[int, ...]
    params: ModelParams
    F2_variance: float
    higher_bounds: tuple[float, ...]
    normalized_ratio: float
    diagonal_ratio: float
    vn_variance: float
    error_estimate: float  # relative, from the m in {0, 1} Galerkin values
    notes: dict = field(default_factory=lambda: {"higher_bounds": "upper bounds"})

    def row(self) -> dict:
        out = {f"N{j + 1}": n for j, n in enumerate(self.N)}
        out.update(F2_variance=self.F2_variance, normalized_ratio=self.normalized_ratio,
                   diagonal_ratio=self.diagonal_ratio)
        for r, b in enumerate(self.higher_bounds):
            out[f"bound_r{r}"] = b
        out.update(vn_variance=self.vn_variance, error_estimate=self.error_estimate)
        return out


def variance_report(N, params: ModelParams) -> VarianceReport:
    _check_q(params)
    N = as_grid(N, params.d)
    f2 = second_chaos_variance(N, params)
    bounds = tuple(higher_chaos_bound(N, params, r) for r in range(params.q - 1))
    c = params.chaos_coeffs
    vn = math.fsum([c[-1] ** 2 * f2] + [c[r] ** 2 * b for r, b in enumerate(bounds)])
    scale = rate_scale(N, params) / params.c1_H
    err = max(displacement_table(a, b, n).error_estimate
              for r in range(params.q) for (a, b), n in zip(_exponents(params, r), N))
    return VarianceReport(N=N, params=params, F2_variance=f2, higher_bounds=bounds,
                          normalized_ratio=scale * f2, diagonal_ratio=scale * diagonal_variance(N, params),
                          vn_variance=vn, error_estimate=err)


def oracle_rows(q: int, H, N_list) -> list[dict]:
    params = derive_exponents(q, H)
    return [variance_report(N, params).row() for N in N_list]
