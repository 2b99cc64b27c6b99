"""Model parameters and closed-form constants of Hermite random fields.

Bold (multi-index) expressions such as ``N**(2H)`` or ``H'(2H'-1)`` are read
as products over axes: ``prod_j N_j**(2 H_j)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

MAX_Q = 20

HurstVector = tuple  # tuple[float, ...] with entries in (1/2, 1)


def as_hurst(H) -> tuple[float, ...]:
    """Validate a Hurst vector and return it as a tuple of floats.

    A scalar is accepted as the one-dimensional case.
    """
    values = np.atleast_1d(np.asarray(H, dtype=float))
    if values.ndim != 1 or values.size < 1:
        raise ValueError("Hurst vector must be a non-empty 1-d sequence")
    for h in values:
        if not (0.5 < h < 1.0):
            raise ValueError(f"Hurst entries must lie in (1/2, 1), got {h!r}")
    return tuple(float(h) for h in values)


def _check_q(q: int, max_q: int = MAX_Q) -> int:
    if int(q) != q:
        raise ValueError(f"order q must be an integer, got {q!r}")
    q = int(q)
    if q < 1:
        raise ValueError(f"order q must be >= 1, got {q}")
    if q > max_q:
        raise ValueError(f"order q={q} exceeds supported maximum {max_q}")
    return q


@dataclass(frozen=True)
class ModelParams:
    """Order ``q``, dimension ``d`` and Hurst vector ``H`` with derived exponents.

    ``H_prime`` is the per-axis Hurst index of the Gaussian substrate,
    ``H_rosenblatt`` the index of the limiting Rosenblatt sheet and
    ``rate_exponent`` the per-axis power of ``N`` in the normalized statistic.
    Constants that need more than the exponents are computed on first access.
    """

    q: int
    H: tuple[float, ...]
    H_prime: tuple[float, ...]
    H_rosenblatt: tuple[float, ...]
    rate_exponent: tuple[float, ...]

    @property
    def d(self) -> int:
        return len(self.H)

    @cached_property
    def chaos_coeffs(self) -> tuple[int, ...]:
        return chaos_coefficients(self.q)

    @cached_property
    def b_qH(self) -> float:
        return normalizing_constant_b(self.q, self.H)

    @cached_property
    def c1_H(self) -> float:
        return limit_constant_c1(self.q, self.H)

    def as_dict(self) -> dict:
        return {
            "q": self.q,
            "d": self.d,
            "H": list(self.H),
            "H_prime": list(self.H_prime),
            "H_rosenblatt": list(self.H_rosenblatt),
            "rate_exponent": list(self.rate_exponent),
        }


def derive_exponents(q: int, H) -> ModelParams:
    q = _check_q(q)
    H = as_hurst(H)
    Hp = tuple(1.0 + (h - 1.0) / q for h in H)
    Hr = tuple(1.0 + (2.0 * h - 2.0) / q for h in H)
    rate = tuple((2.0 - 2.0 * h) / q for h in H)
    return ModelParams(q=q, H=H, H_prime=Hp, H_rosenblatt=Hr, rate_exponent=rate)


def chaos_coefficients(q: int) -> tuple[int, ...]:
    """Product-formula multiplicities ``r! * C(q, r)**2`` for ``r = 0..q-1``.

    Entry ``r`` multiplies the chaos of order ``2q - 2r`` in the expansion of
    the quadratic variation; the last entry equals ``q! * q``.
    """
    q = _check_q(q)
    return tuple(math.factorial(r) * math.comb(q, r) ** 2 for r in range(q))


def _axis_variance_factor(hp: float, q: int) -> float:
    return (hp * (2.0 * hp - 1.0)) ** q


def normalizing_constant_b(q: int, H) -> float:
    """Constant making the finite-time representation have unit variance at 1."""
    p = derive_exponents(q, H)
    qf = math.factorial(p.q)
    b = math.sqrt(qf) ** (p.d - 1)
    for h, hp in zip(p.H, p.H_prime):
        b *= math.sqrt(h * (2.0 * h - 1.0)) / math.sqrt(qf * _axis_variance_factor(hp, p.q))
    return b


def _check_c1_domain(p: ModelParams) -> None:
    for h, hp in zip(p.H, p.H_prime):
        if 4.0 * hp - 3.0 <= 0.0:
            raise ValueError(
                f"limit constant undefined for q={p.q}, H={h}: requires 4H'-3 > 0 "
                "(for q=1 this means H > 3/4; q >= 2 always satisfies it)"
            )


def _f3_axis(hp: float, q: int) -> float:
    return 2.0 / (
        (4.0 * hp - 3.0)
        * (4.0 * hp - 2.0)
        * ((2.0 * hp - 2.0) * (q - 1) + 1.0) ** 2
        * ((hp - 1.0) * (q - 1) + 1.0) ** 2
    )


def f3_product(p: ModelParams) -> float:
    """Per-axis product of the off-diagonal limit factor (domain checked)."""
    _check_c1_domain(p)
    out = 1.0
    for hp in p.H_prime:
        out *= _f3_axis(hp, p.q)
    return out


def limit_constant_c1(q: int, H) -> float:
    """Variance constant of the second-chaos component, per-axis product form."""
    p = derive_exponents(q, H)
    _check_c1_domain(p)
    b4 = normalizing_constant_b(p.q, p.H) ** 4
    num = 2.0 * 2.0 ** p.d * b4
    den = 1.0
    for hp in p.H_prime:
        num *= _axis_variance_factor(hp, 2 * p.q)
        den *= (
            (4.0 * hp - 3.0)
            * (4.0 * hp - 2.0)
            * ((2.0 * hp - 2.0) * (p.q - 1) + 1.0) ** 2
            * ((hp - 1.0) * (p.q - 1) + 1.0) ** 2
        )
    return num / den


def kernel_power_product(p: ModelParams, power: int) -> float:
    """``prod_j (H'_j (2 H'_j - 1))**power``."""
    out = 1.0
    for hp in p.H_prime:
        out *= _axis_variance_factor(hp, power)
    return out


def as_grid(N: int | Sequence[int], d: int) -> tuple[int, ...]:
    """Broadcast an integer or sequence to a per-axis resolution tuple."""
    if np.ndim(N) == 0:
        out = (int(N),) * d
    else:
        out = tuple(int(n) for n in N)
    if len(out) != d:
        raise ValueError(f"grid has {len(out)} axes, expected {d}")
    if any(n < 1 for n in out):
        raise ValueError(f"grid resolutions must be positive, got {out}")
    return out
