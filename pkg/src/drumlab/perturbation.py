"""Perturbative energies in the density perturbation ``sigma = Sigma_bar - 1``.

Corrections through third order for a non-degenerate level, the resummed
estimate ``eps_n / <n|Sigma_bar|n>``, and a first-order treatment of
degenerate levels.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .basis import (
    BasisSpec,
    MultiIndex,
    enumerate_states,
    is_degenerate,
    matrix_element,
    mode_energy,
    overlap_matrix,
    state_energies,
)
from .geometry import EffectiveDensity
from .quadrature import basis_order

CONVERGENCE_RTOL = 1e-6


class PerturbationError(ValueError):
    pass


class TruncationWarning(UserWarning):
    """The outermost shell of the internal sums still contributes noticeably."""


@dataclass(frozen=True)
class PerturbationResult:
    state: MultiIndex
    orders: tuple[float, ...]
    partial_sums: tuple[float, ...]
    resummed: float
    degenerate: bool = False
    # first-order corrections of the degenerate multiplet, ascending
    split: tuple[float, ...] = field(default_factory=tuple)
    degenerate_states: tuple[MultiIndex, ...] = field(default_factory=tuple)


def _sigma_matrix(spec: BasisSpec, s: EffectiveDensity, order: int | None):
    order = order or basis_order(spec.cutoff)
    values, _ = s.grid(order)
    states = enumerate_states(spec)
    # subtract before projecting, so small sigma keeps its relative precision
    S = overlap_matrix(spec, values - 1.0, order, states)
    return states, state_energies(spec, states), S


def perturbation_series(eps: np.ndarray, S: np.ndarray, i: int) -> tuple[float, float, float, float]:
    """``E^(0..3)`` of level ``i`` for ``diag(eps) c = E (1 + S) c``.

    ``S`` is the symmetric matrix of ``<n|sigma|k>``; level ``i`` must be
    non-degenerate within the truncation.
    """
    e = float(eps[i])
    others = np.arange(len(eps)) != i
    omega = e - eps[others]
    s_nn = float(S[i, i])
    s_nk = S[i, others]
    S_km = S[np.ix_(others, others)]

    sum1 = float(np.sum(s_nk ** 2 / omega))
    sum2 = float(np.sum(s_nk ** 2 / omega ** 2))
    t = s_nk / omega
    double = float(t @ S_km @ t)

    E0 = e
    E1 = -e * s_nn
    E2 = e * s_nn ** 2 + e ** 2 * sum1
    E3 = (-e * s_nn ** 3 + e ** 3 * s_nn * sum2
          - 3 * e ** 2 * s_nn * sum1 - e ** 3 * double)
    return E0, E1, E2, E3


def _partial(orders: Sequence[float]) -> tuple[float, ...]:
    return tuple(float(x) for x in np.cumsum(orders))


def perturb_energy(spec: BasisSpec, s: EffectiveDensity, n: Sequence[int],
                   k_cutoff: int | None = None, order: int | None = None) -> PerturbationResult:
    """Perturbative energy of state ``n``.

    Internal sums run over every basis state with per-axis index up to
    ``k_cutoff`` (default three times the largest index of ``n``). When some
    state in that set shares the energy of ``n`` only the first order is
    returned, together with the split of the degenerate multiplet.
    """
    n = spec.validate(n)
    k_cutoff = k_cutoff or max(3 * max(n), 1)
    if max(n) > k_cutoff:
        raise PerturbationError(f"state {n} lies outside the truncation k_cutoff={k_cutoff}")
    inner = BasisSpec(spec.domain, spec.bc, k_cutoff)
    states, eps, S = _sigma_matrix(inner, s, order)
    i = states.index(n)
    e = float(eps[i])
    resummed = e / (1.0 + S[i, i])

    group = [j for j in range(len(states)) if j != i and is_degenerate(e, eps[j])]
    if group:
        members = [i] + group
        sub = S[np.ix_(members, members)]
        split = tuple(float(x) for x in np.sort(-e * np.linalg.eigvalsh(sub)))
        orders = (e, -e * float(S[i, i]))
        return PerturbationResult(n, orders, _partial(orders), float(resummed), True, split,
                                  tuple(states[j] for j in members))

    orders = perturbation_series(eps, S, i)
    _check_truncation(states, eps, S, i, k_cutoff, orders[2])
    return PerturbationResult(n, orders, _partial(orders), float(resummed))


def _check_truncation(states, eps, S, i, k_cutoff, E2):
    """Warn when the last decade of the cutoff carries more than 1e-6 of ``E^(2)``."""
    e = eps[i]
    others = np.array([j != i for j in range(len(states))])
    terms = np.where(others, S[i] ** 2 / np.where(others, e - eps, 1.0), 0.0) * e ** 2
    edge = max(1, int(np.ceil(0.9 * k_cutoff)))
    outer = np.array([max(st) >= edge for st in states]) & others
    tail = abs(terms[outer].sum())
    if E2 != 0 and tail > CONVERGENCE_RTOL * abs(E2):
        warnings.warn(
            f"second-order sum for state {states[i]} not converged at k_cutoff={k_cutoff}: "
            f"outer shell contributes {tail / abs(E2):.2e} of E^(2)",
            TruncationWarning, stacklevel=3)


def resummed_energy(spec: BasisSpec, s: EffectiveDensity, n: Sequence[int],
                    order: int | None = None) -> float:
    """``eps_n / <n|Sigma_bar|n>``."""
    n = spec.validate(n)
    diag = matrix_element(spec, n, n, s.values, order or basis_order(max(max(n), spec.cutoff)))
    if not diag > 0:
        raise PerturbationError("diagonal density element must be positive")
    return mode_energy(spec, n) / diag
