"""Gauss-Legendre rules on intervals and cubes."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

DEFAULT_ORDER = 64


@lru_cache(maxsize=64)
def _reference_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(order: int, a: float = -1.0, b: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``order``-point rule on ``[a, b]``.

    All nodes are strictly interior, so endpoint singularities are never sampled.
    """
    if order < 1:
        raise ValueError(f"quadrature order must be positive, got {order}")
    x, w = _reference_rule(int(order))
    half = 0.5 * (b - a)
    return half * x + 0.5 * (a + b), half * w


def basis_order(cutoff: int) -> int:
    """Per-axis order that resolves products of two modes up to ``cutoff``."""
    return max(DEFAULT_ORDER, 2 * cutoff + 16)


def cube_integral(values: np.ndarray, weights: np.ndarray) -> float:
    """Contract a tensor of samples ``values[i1, ..., id]`` with a 1-D weight vector."""
    out = values
    for _ in range(values.ndim):
        out = out @ weights
    return float(out)
