"""Cached Gauss rules mapped to [0, 1]."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@lru_cache(maxsize=None)
def legendre01(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(n)
    return (x + 1.0) / 2.0, w / 2.0


@lru_cache(maxsize=None)
def jacobi01_left(n: int, a: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for ``int_0^1 t**a f(t) dt``."""
    x, w = roots_jacobi(n, 0.0, a)
    return (x + 1.0) / 2.0, w / 2.0 ** (1.0 + a)


@lru_cache(maxsize=None)
def jacobi01_right(n: int, a: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for ``int_0^1 (1-t)**a f(t) dt``."""
    x, w = roots_jacobi(n, a, 0.0)
    return (x + 1.0) / 2.0, w / 2.0 ** (1.0 + a)
