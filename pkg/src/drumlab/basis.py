"""Exact Dirichlet/Neumann eigenbasis of the homogeneous d-cube and its matrix elements."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import CubeDomain, EffectiveDensity, area_integral
from .quadrature import basis_order, gauss_legendre

MultiIndex = tuple[int, ...]

DEGENERACY_RTOL = 1e-9


class BC(str, enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"

    @classmethod
    def parse(cls, text: "str | BC") -> "BC":
        if isinstance(text, BC):
            return text
        key = text.strip().lower()
        for bc in cls:
            if key in (bc.value, bc.value[0]):
                return bc
        raise ValueError(f"unknown boundary condition {text!r}")


class InvalidIndexError(ValueError):
    pass


@dataclass(frozen=True)
class BasisSpec:
    domain: CubeDomain
    bc: BC
    cutoff: int

    def __post_init__(self):
        object.__setattr__(self, "bc", BC.parse(self.bc))
        if self.cutoff < 1:
            raise ValueError("cutoff must be at least 1")

    @property
    def first_index(self) -> int:
        return 1 if self.bc is BC.DIRICHLET else 0

    @property
    def axis_indices(self) -> np.ndarray:
        return np.arange(self.first_index, self.cutoff + 1)

    @property
    def size(self) -> int:
        return len(self.axis_indices) ** self.domain.d

    def validate(self, n: Sequence[int]) -> MultiIndex:
        n = tuple(int(i) for i in n)
        if len(n) != self.domain.d:
            raise InvalidIndexError(f"index {n} has length {len(n)}, domain has d={self.domain.d}")
        if any(i < self.first_index for i in n):
            raise InvalidIndexError(f"index {n} invalid for {self.bc.value} modes")
        return n


def mode_1d(bc: BC, n: int, x, L: float):
    """One-dimensional normalised cube mode."""
    x = np.asarray(x, dtype=float)
    if bc is BC.DIRICHLET:
        if n < 1:
            raise InvalidIndexError("Dirichlet indices start at 1")
        return np.sin(n * math.pi * (x + L) / (2 * L)) / math.sqrt(L)
    if n < 0:
        raise InvalidIndexError("Neumann indices start at 0")
    if n == 0:
        return np.full_like(x, 1.0 / math.sqrt(2 * L))
    return np.cos(n * math.pi * x / (2 * L) - (math.pi / 4) * (1 - (-1) ** n)) / math.sqrt(L)


def mode_value(spec: BasisSpec, n: Sequence[int], point: Sequence[float]):
    n = spec.validate(n)
    if len(point) != spec.domain.d:
        raise ValueError("point dimension does not match the domain")
    out = 1.0
    for ni, xi in zip(n, point):
        out = out * mode_1d(spec.bc, ni, xi, spec.domain.L)
    return float(out) if np.ndim(out) == 0 else out


def mode_energy(spec: BasisSpec | CubeDomain, n: Sequence[int]) -> float:
    """``pi^2 / (4 L^2) * sum(n_i^2)``."""
    L = spec.domain.L if isinstance(spec, BasisSpec) else spec.L
    if isinstance(spec, BasisSpec):
        n = spec.validate(n)
    return math.pi ** 2 / (4 * L * L) * sum(i * i for i in n)


def energy_gap(spec: BasisSpec, n: Sequence[int], k: Sequence[int]) -> float:
    """``omega_nk = eps_n - eps_k``."""
    return mode_energy(spec, n) - mode_energy(spec, k)


def is_degenerate(eps_n: float, eps_k: float) -> bool:
    return abs(eps_n - eps_k) <= DEGENERACY_RTOL * max(1.0, abs(eps_n))


def enumerate_states(spec: BasisSpec) -> list[MultiIndex]:
    """All indices up to the cutoff, sorted by energy then lexicographically."""
    idx = range(spec.first_index, spec.cutoff + 1)
    states = itertools.product(idx, repeat=spec.domain.d)
    return sorted(states, key=lambda n: (sum(i * i for i in n), n))


def state_energies(spec: BasisSpec, states: Sequence[MultiIndex]) -> np.ndarray:
    scale = math.pi ** 2 / (4 * spec.domain.L ** 2)
    return np.array([scale * sum(i * i for i in n) for n in states], dtype=float)


def _mode_table(spec: BasisSpec, order: int):
    """``P[a, i] = phi_a(x_i) * sqrt(w_i)`` for each per-axis index ``a``."""
    x, w = gauss_legendre(order, -spec.domain.L, spec.domain.L)
    P = np.stack([mode_1d(spec.bc, int(a), x, spec.domain.L) for a in spec.axis_indices])
    return P * np.sqrt(w), x, w


def matrix_element(spec: BasisSpec, n: Sequence[int], k: Sequence[int],
                   g: Callable[..., np.ndarray], order: int | None = None) -> float:
    """``<n|g|k>`` by tensor Gauss-Legendre quadrature.

    ``g`` takes one broadcastable coordinate array per axis.
    """
    n, k = spec.validate(n), spec.validate(k)
    order = order or basis_order(max(max(n), max(k), spec.cutoff))
    x, w = gauss_legendre(order, -spec.domain.L, spec.domain.L)
    d = spec.domain.d
    factors = []
    for axis in range(d):
        f = mode_1d(spec.bc, n[axis], x, spec.domain.L) * mode_1d(spec.bc, k[axis], x, spec.domain.L) * w
        shape = [1] * d
        shape[axis] = -1
        factors.append(f.reshape(shape))
    mesh = np.meshgrid(*([x] * d), indexing="ij")
    vals = np.broadcast_to(np.asarray(g(*mesh), dtype=float), mesh[0].shape)
    out = vals
    for f in factors:
        out = out * f
    return float(np.sum(out))


def overlap_matrix(spec: BasisSpec, field_values: np.ndarray, order: int,
                   states: Sequence[MultiIndex] | None = None) -> np.ndarray:
    """All ``<n|g|k>`` for ``g`` sampled on the tensor Gauss grid of ``order`` nodes.

    Rows/columns follow ``states`` (default :func:`enumerate_states`). The
    result is symmetrised; the contraction order is fixed, so repeated calls
    are bitwise reproducible.
    """
    d = spec.domain.d
    if field_values.shape != (order,) * d:
        raise ValueError("field samples do not match the quadrature grid")
    P, _, _ = _mode_table(spec, order)
    c = P.shape[0]
    # pair[i, a*c + b] = P[a, i] * P[b, i]
    pair = (P[:, None, :] * P[None, :, :]).reshape(c * c, order).T
    T = np.ascontiguousarray(field_values)
    for _ in range(d):
        # contract the last grid axis, push the new (a, b) axis to the front
        T = T @ pair
        T = np.moveaxis(T, -1, 0)
    # axes are now (ab)_1, ..., (ab)_d after d rotations, in axis order
    T = T.reshape((c, c) * d)
    perm = [2 * i for i in range(d)] + [2 * i + 1 for i in range(d)]
    full = T.transpose(perm).reshape(c ** d, c ** d)
    states = enumerate_states(spec) if states is None else states
    first = spec.first_index
    flat = np.array([np.ravel_multi_index(tuple(i - first for i in n), (c,) * d) for n in states])
    M = full[np.ix_(flat, flat)]
    return 0.5 * (M + M.T)


def mean_density_approximation(s: EffectiveDensity, order: int = 64) -> float:
    """Large-index limit of ``<n|Sigma_bar|n>``: the cube average of Sigma_bar."""
    return area_integral(s, order) / s.domain.volume
