"""Rayleigh-Ritz spectrum of ``-lap(psi) = E * Sigma_bar * psi`` and spectral diagnostics.

The unknown is expanded in the exact eigenbasis of the homogeneous cube, so
the stiffness matrix is ``diag(eps_n)`` and the mass matrix holds the
overlaps ``<n|Sigma_bar|k>``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .basis import BC, BasisSpec, MultiIndex, enumerate_states, overlap_matrix, state_energies
from .geometry import EffectiveDensity
from .quadrature import basis_order

MAX_BASIS = 4096
RELIABLE_FRACTION = 0.25
XI_FLOOR = -16.0
STAIRCASE_RTOL = 1e-12

# first zeros of J0 and J1
J01 = 2.404825557695773
J11 = 3.831705970207512
PPW_BOUND = (J11 / J01) ** 2


class SolverError(Exception):
    pass


class FactorizationError(SolverError):
    """The mass matrix is not positive definite."""


class ReliabilityError(SolverError):
    """An index or energy beyond the trusted part of a computed spectrum."""


@dataclass(frozen=True, eq=False)
class GalerkinProblem:
    spec: BasisSpec
    density: EffectiveDensity
    states: tuple[MultiIndex, ...]
    stiffness: np.ndarray
    mass: np.ndarray
    order: int


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    bc: BC
    eigenvalues: np.ndarray
    basis_cutoff: int
    basis_size: int
    quadrature_order: int
    density_hash: str
    reliable_fraction: float = RELIABLE_FRACTION

    @property
    def reliable_count(self) -> int:
        return min(len(self.eigenvalues), int(self.reliable_fraction * self.basis_size))

    def eigenvalue(self, N: int) -> float:
        """``E_N`` with 1-based ``N``; refuses indices past the reliable mark."""
        if not 1 <= N <= self.reliable_count:
            raise ReliabilityError(
                f"N={N} outside the reliable range 1..{self.reliable_count} "
                f"({self.bc.value}, cutoff {self.basis_cutoff})")
        return float(self.eigenvalues[N - 1])


def assemble(spec: BasisSpec, s: EffectiveDensity, order: int | None = None,
             max_size: int = MAX_BASIS) -> GalerkinProblem:
    if spec.domain != s.domain:
        raise ValueError("basis and density live on different domains")
    if spec.size > max_size:
        raise SolverError(f"basis of {spec.size} states exceeds the cap of {max_size}")
    order = order or basis_order(spec.cutoff)
    states = tuple(enumerate_states(spec))
    values, _ = s.grid(order)
    mass = overlap_matrix(spec, values, order, states)
    return GalerkinProblem(spec, s, states, state_energies(spec, states), mass, order)


def solve_spectrum(p: GalerkinProblem, count: int | None = None,
                   reliable_fraction: float = RELIABLE_FRACTION) -> SpectrumResult:
    """Lowest ``count`` eigenvalues of ``diag(eps) c = E B c``.

    With ``B = R R^T`` the problem is equivalent to the symmetric matrix
    ``G^T G`` where ``G = R^{-1} diag(sqrt(eps))``; a zero energy (Neumann
    constant mode) gives an exactly zero column and hence an exact zero
    eigenvalue.
    """
    size = len(p.states)
    count = size if count is None else count
    if not 1 <= count <= size:
        raise ValueError(f"count must be in 1..{size}")
    try:
        R = scipy.linalg.cholesky(p.mass, lower=True)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(
            "mass matrix is not positive definite (invalid density or under-resolved quadrature)") from exc
    G = scipy.linalg.solve_triangular(R, np.diag(np.sqrt(p.stiffness)), lower=True)
    C = G.T @ G
    C = 0.5 * (C + C.T)
    evals = scipy.linalg.eigh(C, eigvals_only=True, subset_by_index=(0, count - 1))
    evals = np.sort(evals)
    return SpectrumResult(p.spec.bc, evals, p.spec.cutoff, size, p.order,
                          p.density.digest(), reliable_fraction)


def compute_spectrum(s: EffectiveDensity, bc, cutoff: int, count: int | None = None,
                     order: int | None = None) -> SpectrumResult:
    spec = BasisSpec(s.domain, BC.parse(bc), cutoff)
    return solve_spectrum(assemble(spec, s, order), count)


def staircase(r: SpectrumResult, E: float) -> int:
    """Number of eigenvalues ``<= E``; ``E`` must lie within the reliable range.

    Eigenvalues within ``STAIRCASE_RTOL`` of ``E`` count as ties, so exact
    lattice energies are not lost to rounding in the eigensolver.
    """
    top = r.eigenvalues[r.reliable_count - 1]
    slack = STAIRCASE_RTOL * max(1.0, abs(E))
    if E > top + slack:
        raise ReliabilityError(f"E={E} beyond the last reliable eigenvalue {top}")
    return bisect.bisect_right(list(r.eigenvalues[: r.reliable_count]), E + slack)


def xi_diagnostic(rD: SpectrumResult, rN: SpectrumResult, Abar: float, N: int) -> float:
    """``log10|1 - Abar (E_N^D + E_N^N) / (8 pi N)|``, floored at -16."""
    dev = abs(1.0 - Abar * (rD.eigenvalue(N) + rN.eigenvalue(N)) / (8 * math.pi * N))
    if dev == 0:
        return XI_FLOOR
    return max(XI_FLOOR, math.log10(dev))


def delta_diagnostic(rD: SpectrumResult, rN: SpectrumResult, N: int) -> float:
    """Half the Dirichlet-Neumann splitting of the ``N``-th level."""
    return 0.5 * (rD.eigenvalue(N) - rN.eigenvalue(N))


@dataclass(frozen=True)
class PPWReport:
    ratio: float
    bound: float = PPW_BOUND
    violates: bool = field(default=False)

    def verdict(self) -> str:
        if self.violates:
            return (f"VIOLATES ({self.ratio:.3f} > {self.bound:.3f}): "
                    "not a conformal density")
        return f"within bound ({self.ratio:.3f} <= {self.bound:.3f})"


def ppw_audit(r: SpectrumResult) -> PPWReport:
    """Compare ``E2/E1`` of a Dirichlet spectrum with the disk value ``(j11/j01)^2``."""
    if r.bc is not BC.DIRICHLET:
        raise ValueError("the PPW ratio is defined for Dirichlet spectra")
    if len(r.eigenvalues) < 2:
        raise SolverError("need at least two eigenvalues")
    ratio = float(r.eigenvalues[1] / r.eigenvalues[0])
    return PPWReport(ratio, PPW_BOUND, ratio > PPW_BOUND + 1e-6)
