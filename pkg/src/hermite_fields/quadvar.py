"""Renormalized quadratic variation, the normalized limit statistic and a
quadratic-variation Hurst estimator."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hermite import IncrementArray, SampleField, box_increments
from .params import ModelParams, as_grid, as_hurst


@dataclass(frozen=True)
class QVResult:
    V_N: float
    T_N: float | None
    N: tuple[int, ...]
    params: ModelParams


def quadratic_variation(incs: IncrementArray | np.ndarray, H) -> float:
    """``(prod N_j)**-1 * sum_i [prod_j N_j**(2 H_j) * dZ_i**2 - 1]``.

    The box sum runs in lexicographic order through ``math.fsum`` (exactly
    rounded), so the value does not depend on array layout.
    """
    values = incs.values if isinstance(incs, IncrementArray) else np.asarray(incs, dtype=float)
    H = as_hurst(H)
    if values.size == 0:
        raise ValueError("empty increment grid")
    if values.ndim != len(H):
        raise ValueError(f"increments have {values.ndim} axes, H has {len(H)}")
    N = values.shape
    scale = math.prod(n ** (2.0 * h) for n, h in zip(N, H))
    brackets = scale * np.square(values, dtype=float).ravel(order="C") - 1.0
    return math.fsum(brackets) / values.size


def statistic_multiplier(N, params: ModelParams) -> float:
    """``c1**(-1/2) * prod_j N_j**((2 - 2 H_j)/q) / (q! q)``."""
    if params.q == 1:
        raise ValueError("normalized statistic needs q >= 2; for q = 1 use the harness q1 regression")
    N = as_grid(N, params.d)
    rate = math.prod(n**e for n, e in zip(N, params.rate_exponent))
    return rate / (math.sqrt(params.c1_H) * math.factorial(params.q) * params.q)


def normalized_statistic(V: float, N, params: ModelParams) -> float:
    return statistic_multiplier(N, params) * V


def field_statistics(field: SampleField, N) -> QVResult:
    params = field.params
    N = as_grid(N, params.d)
    V = quadratic_variation(box_increments(field, N), params.H)
    T = normalized_statistic(V, N, params) if params.q >= 2 else None
    return QVResult(V_N=V, T_N=T, N=N, params=params)


def hurst_from_mean_squares(levels: Sequence[int], mean_squares: Sequence[float]) -> float:
    """``-slope/2`` of ``log mean_square`` against ``log N``."""
    x = np.log(np.asarray(levels, dtype=float))
    y = np.asarray(mean_squares, dtype=float)
    if np.any(y <= 0.0):
        raise ValueError("zero variation: mean squared increment is not positive")
    slope = np.polyfit(x, np.log(y), 1)[0]
    return float(-slope / 2.0)


def _check_levels(levels: Sequence[int], n: int) -> list[int]:
    levels = sorted(int(L) for L in levels)
    if len(set(levels)) < 3:
        raise ValueError("need at least 3 distinct levels per axis")
    for L in levels:
        if L < 1 or L & (L - 1):
            raise ValueError(f"levels must be powers of two, got {L}")
        if n % L:
            raise ValueError(f"level {L} does not divide simulation resolution {n}")
    return levels


def estimate_hurst(field: SampleField, levels) -> tuple[float, ...]:
    """Per-axis Hurst estimates from dyadic sweeps of mean squared increments.

    ``levels`` is one list of dyadic ``N`` shared by all axes, or one list per
    axis.  While axis ``j`` is swept the other axes sit at their coarsest level.
    """
    d = field.params.d
    n = field.grid.shape
    if np.ndim(levels[0]) == 0:
        levels = [levels] * d
    if len(levels) != d:
        raise ValueError(f"need {d} level lists, got {len(levels)}")
    per_axis = [_check_levels(L, nj) for L, nj in zip(levels, n)]
    coarse = [L[0] for L in per_axis]
    out = []
    for j in range(d):
        msq = []
        for L in per_axis[j]:
            N = list(coarse)
            N[j] = L
            inc = box_increments(field, N).values
            msq.append(float(np.mean(inc * inc)))
        out.append(hurst_from_mean_squares(per_axis[j], msq))
    return tuple(out)
