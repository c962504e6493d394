"""Weyl-type asymptotics for the d-cube with a variable density."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .basis import BC
from .geometry import CubeDomain, EffectiveDensity, area_integral


class WeylError(ValueError):
    pass


@dataclass(frozen=True)
class WeylEstimate:
    bc: BC
    N: float
    leading: float
    corrected: float
    terms_used: tuple[str, ...]


def _surface_coefficient(domain: CubeDomain) -> float:
    d, side = domain.d, domain.side
    return side ** (d - 1) * d * math.sqrt(math.pi) / math.gamma(d / 2 + 0.5)


def counting_dirichlet(domain: CubeDomain, E: float) -> float:
    """Two-term smooth approximant of the Dirichlet counting function."""
    if E < 0:
        raise WeylError("energy must be non-negative")
    d = domain.d
    pref = (4 * math.pi) ** (-d / 2)
    volume = domain.volume / math.gamma(d / 2 + 1) * E ** (d / 2)
    return pref * (volume - _surface_coefficient(domain) * E ** ((d - 1) / 2))


def counting_neumann(domain: CubeDomain, E: float) -> float:
    """Dirichlet count plus twice the surface term (modes with a zero quantum number)."""
    d = domain.d
    extra = 2 * (4 * math.pi) ** (-d / 2) * _surface_coefficient(domain) * E ** ((d - 1) / 2)
    return counting_dirichlet(domain, E) + extra


def counting(domain: CubeDomain, bc, E: float) -> float:
    bc = BC.parse(bc)
    return counting_dirichlet(domain, E) if bc is BC.DIRICHLET else counting_neumann(domain, E)


def _sign(bc: BC) -> int:
    return 1 if bc is BC.DIRICHLET else -1


def weyl_energy_general(domain: CubeDomain, density: EffectiveDensity | float, bc, N: float,
                        order: int = 64) -> WeylEstimate:
    """Energy of the ``N``-th level of the d-cube filled with ``density``.

    ``density`` may be an :class:`EffectiveDensity` or its precomputed
    integral over the cube.
    """
    bc = BC.parse(bc)
    if N < 1:
        raise WeylError("N must be at least 1")
    integral = area_integral(density, order) if isinstance(density, EffectiveDensity) else float(density)
    if not integral > 0:
        raise WeylError("density integral must be positive")
    d, L = domain.d, domain.L
    g = math.gamma(d / 2 + 1)
    leading = math.pi / L ** 2 * domain.volume * (g * N) ** (2 / d) / integral
    coeff = g ** ((d - 1) / d) / math.gamma((d + 1) / 2)
    corrected = leading * (1 + _sign(bc) * coeff * N ** (-1 / d))
    return WeylEstimate(bc, N, leading, corrected, ("volume", "surface"))


def weyl_energy_2d(Abar: float, bc, N: float) -> WeylEstimate:
    """``4 pi N / Abar +- 8 sqrt(pi N) / Abar``."""
    bc = BC.parse(bc)
    if not Abar > 0 or N < 1:
        raise WeylError("need Abar > 0 and N >= 1")
    leading = 4 * math.pi * N / Abar
    return WeylEstimate(bc, N, leading, leading + _sign(bc) * 8 * math.sqrt(math.pi * N) / Abar,
                        ("area", "square-perimeter"))


def weyl_conjecture_2d(Lbar: float, Abar: float, bc, N: float) -> WeylEstimate:
    """``4 pi N / Abar +- (Lbar / Abar) sqrt(4 pi N / Abar)``."""
    bc = BC.parse(bc)
    if not (Lbar > 0 and Abar > 0) or N < 1:
        raise WeylError("need Lbar, Abar > 0 and N >= 1")
    leading = 4 * math.pi * N / Abar
    return WeylEstimate(bc, N, leading, leading + _sign(bc) * (Lbar / Abar) * math.sqrt(leading),
                        ("area", "boundary"))


def invert_counting(domain: CubeDomain, bc, N: float, E_max: float = 1e12,
                    rtol: float = 1e-14) -> float:
    """Solve ``counting(E) = N`` by bisection.

    The two-term approximant dips below zero at small ``E`` but crosses any
    level ``N >= 1`` exactly once, so bracketing from 0 is safe.
    """
    if N < 1:
        raise WeylError("N must be at least 1")
    bc = BC.parse(bc)
    lo, hi = 0.0, 1.0
    while counting(domain, bc, hi) < N:
        lo, hi = hi, 2 * hi
        if hi > E_max:
            raise WeylError(f"no root of N(E) = {N} below E = {E_max:g}")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if counting(domain, bc, mid) < N:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
