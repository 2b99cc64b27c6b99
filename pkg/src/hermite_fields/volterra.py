"""Derivative of the fractional Brownian Volterra kernel for h in (1/2, 1).

    dK(u, s) = c_h (u/s)**(h - 1/2) (u - s)**(h - 3/2),   0 < s < u,

with ``c_h = sqrt(h (2h - 1) / B(2 - 2h, h - 1/2))``, the normalization for
which ``int_0^{u^v} dK(u, a) dK(v, a) da = h (2h - 1) |u - v|**(2h - 2)``.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import beta as beta_fn

from ._rules import jacobi01_left, jacobi01_right, legendre01

DEFAULT_NODES = 24
MAX_NODES = 2048


def _check_h(h: float) -> float:
    h = float(h)
    if not (0.5 < h < 1.0):
        raise ValueError(f"kernel index h must lie in (1/2, 1), got {h}")
    return h


def kernel_constant(h: float) -> float:
    h = _check_h(h)
    return math.sqrt(h * (2.0 * h - 1.0) / beta_fn(2.0 - 2.0 * h, h - 0.5))


def dK(u, s, h: float):
    """Kernel derivative, vectorized over ``u`` and ``s``.

    Raises ``ValueError`` unless ``0 < s < u`` everywhere.
    """
    h = _check_h(h)
    u = np.asarray(u, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0.0) or np.any(s >= u):
        raise ValueError("dK requires 0 < s < u")
    out = kernel_constant(h) * (u / s) ** (h - 0.5) * (u - s) ** (h - 1.5)
    return out if out.ndim else float(out)


def covariance_density(u, v, h: float):
    """Closed form ``h (2h - 1) |u - v|**(2h - 2)``."""
    h = _check_h(h)
    return h * (2.0 * h - 1.0) * np.abs(np.asarray(u, float) - np.asarray(v, float)) ** (2.0 * h - 2.0)


def _panels(v: float, gap: float) -> list[tuple[float, float]]:
    # geometric panels on [v/2, v) shrinking toward v until width <= gap
    panels = []
    lo, width = v / 2.0, v / 2.0
    while width > gap:
        width /= 2.0
        panels.append((lo, v - width))
        lo = v - width
    panels.append((lo, v))
    return panels


def inner_product_rule(u: float, v: float, h: float, nodes: int = DEFAULT_NODES):
    """Quadrature nodes/weights for ``int_0^{min(u,v)} f(a) da``.

    The weights absorb the endpoint singularities ``a**(1-2h)`` at 0 and
    ``(v-a)**(h-3/2)`` at the upper end ``v = min(u, v)``; ``kernel_inner_product``
    multiplies by the remaining smooth factor.  Returned as
    ``(nodes, weights, singular_flags)`` where the flag marks which factor was
    absorbed (0 none, 1 left, 2 right).
    """
    lo_end = min(u, v)
    gap = abs(u - v)
    a_left = 1.0 - 2.0 * h
    a_right = h - 1.5
    xs, ws, flags = [], [], []
    t, w = jacobi01_left(nodes, a_left)
    half = lo_end / 2.0
    xs.append(half * t)
    ws.append(w * half ** (1.0 + a_left))
    flags.append(np.full(nodes, 1))
    panels = _panels(lo_end, gap)
    tl, wl = legendre01(nodes)
    for a, b in panels[:-1]:
        xs.append(a + (b - a) * tl)
        ws.append((b - a) * wl)
        flags.append(np.zeros(nodes, int))
    a, b = panels[-1]
    t, w = jacobi01_right(nodes, a_right)
    xs.append(a + (b - a) * t)
    ws.append(w * (b - a) ** (1.0 + a_right))
    flags.append(np.full(nodes, 2))
    return np.concatenate(xs), np.concatenate(ws), np.concatenate(flags)


def kernel_inner_product(u: float, v: float, h: float, nodes: int = DEFAULT_NODES) -> float:
    """Quadrature of ``int_0^{u^v} dK(u, a) dK(v, a) da``.

    Uses Gauss-Jacobi panels at both singular endpoints and geometrically
    graded Gauss-Legendre panels in between, refined toward the upper end down
    to the scale ``|u - v|``.  ``nodes`` is the per-panel rule size.
    """
    h = _check_h(h)
    u, v = float(u), float(v)
    if not (0.0 < u <= 1.0 and 0.0 < v <= 1.0):
        raise ValueError("u and v must lie in (0, 1]")
    if u == v:
        raise ValueError("integral diverges for u == v")
    if v > u:
        u, v = v, u
    x, w, flag = inner_product_rule(u, v, h, nodes)
    if x.size > MAX_NODES:
        raise ValueError(f"quadrature needs {x.size} nodes, budget is {MAX_NODES}")
    c2 = kernel_constant(h) ** 2
    left = np.where(flag == 1, 1.0, x ** (1.0 - 2.0 * h))
    right = np.where(flag == 2, 1.0, (v - x) ** (h - 1.5))
    smooth = (u * v) ** (h - 0.5) * (u - x) ** (h - 1.5)
    return float(c2 * np.sum(w * left * right * smooth))
