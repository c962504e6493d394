"""Reference cubes, conformal maps and effective densities.

A drum with physical density ``rho(u, v)`` on a shape ``D = f(Omega)`` is
pulled back to the reference square ``Omega`` where it becomes the
inhomogeneous problem ``-lap(psi) = E * Sigma_bar * psi`` with
``Sigma_bar(x, y) = |f'(z)|^2 * rho(f(z))``.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import ellipj, ellipk

from .exprdsl import DensityExpr, ExprError, eval_density_array, parse_density
from .quadrature import DEFAULT_ORDER, cube_integral, gauss_legendre


class GeometryError(Exception):
    pass


class MapEvaluationError(GeometryError):
    pass


class CornerSingularityError(MapEvaluationError):
    """The square-to-disk derivative was requested at a corner of the square."""


class InvalidMapError(GeometryError):
    pass


class DensityError(GeometryError):
    """Non-positive or non-evaluable effective density."""


@dataclass(frozen=True)
class CubeDomain:
    d: int = 2
    L: float = 1.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.d}")
        if not self.L > 0:
            raise ValueError(f"half side must be positive, got {self.L}")

    @property
    def side(self) -> float:
        return 2.0 * self.L

    @property
    def volume(self) -> float:
        return self.side ** self.d

    @property
    def surface(self) -> float:
        return 2 * self.d * self.side ** (self.d - 1)


# --- primitive maps ----------------------------------------------------------
# Each primitive is vectorised over numpy complex arrays.


@dataclass(frozen=True)
class Identity:
    def value(self, z):
        return np.asarray(z, dtype=complex)

    def derivative(self, z):
        return np.ones_like(np.asarray(z, dtype=complex))

    def describe(self) -> str:
        return "identity"


@dataclass(frozen=True)
class Affine:
    a: complex = 1.0
    b: complex = 0.0

    def __post_init__(self):
        if self.a == 0:
            raise InvalidMapError("affine map needs a nonzero scale")

    def value(self, z):
        return self.a * np.asarray(z, dtype=complex) + self.b

    def derivative(self, z):
        return np.full_like(np.asarray(z, dtype=complex), self.a)

    def describe(self) -> str:
        a, b = complex(self.a), complex(self.b)
        return f"affine({a.real!r},{a.imag!r},{b.real!r},{b.imag!r})"


@dataclass(frozen=True)
class PolySeries:
    """``z -> sum_k c_k z^k`` for ``k = 1..m`` (no constant term)."""

    coeffs: tuple[complex, ...]

    def __post_init__(self):
        if not self.coeffs:
            raise InvalidMapError("polynomial map needs at least one coefficient")
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in self.coeffs))

    def value(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for c in reversed(self.coeffs):
            out = (out + c) * z
        return out

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for k in range(len(self.coeffs), 0, -1):
            out = out * z + k * self.coeffs[k - 1]
        return out

    def describe(self) -> str:
        parts = [f"{c.real!r},{c.imag!r}" for c in self.coeffs]
        return f"poly({'; '.join(parts)})"


_M = 0.5  # parameter m = k^2 of the lemniscatic case
_K = float(ellipk(_M))
_ROT = complex(math.cos(math.pi / 4), math.sin(math.pi / 4))


def _jacobi_complex(u: np.ndarray):
    """sn, cn, dn at complex ``u`` for m = 1/2 via the real/imaginary split."""
    s, c, d, _ = ellipj(u.real, _M)
    s1, c1, d1, _ = ellipj(u.imag, 1.0 - _M)
    den = c1 * c1 + _M * s * s * s1 * s1
    sn = (s * d1 + 1j * c * d * s1 * c1) / den
    cn = (c * c1 - 1j * s * d * s1 * d1) / den
    dn = (d * c1 * d1 - 1j * _M * s * c * s1) / den
    return sn, cn, dn


@dataclass(frozen=True)
class SquareToDisk:
    """Schwarz-Christoffel map of ``[-L, L]^2`` onto the unit disk.

    ``w = e^{i pi/4} sd(u | 1/2) / sqrt(2)`` with ``u = e^{-i pi/4} K z / (sqrt(2) L)``.
    Corners go to ``e^{i pi/4 (2j+1)}``, edge midpoints to ``+-1, +-i``.
    The derivative vanishes at the four corners.
    """

    half_side: float = 1.0

    def _arg(self, z):
        z = np.asarray(z, dtype=complex)
        L = self.half_side
        if np.any(np.abs(z.real) > L * (1 + 1e-12)) or np.any(np.abs(z.imag) > L * (1 + 1e-12)):
            raise MapEvaluationError("square_to_disk evaluated outside the reference square")
        return z, _ROT.conjugate() * z * (_K / (math.sqrt(2.0) * L))

    def value(self, z):
        _, u = self._arg(z)
        sn, _, dn = _jacobi_complex(np.atleast_1d(u))
        out = _ROT * sn / dn / math.sqrt(2.0)
        return out.reshape(np.shape(u))

    def derivative(self, z):
        z, u = self._arg(z)
        L = self.half_side
        corner = (np.abs(np.abs(z.real) - L) < 1e-12 * L) & (np.abs(np.abs(z.imag) - L) < 1e-12 * L)
        if np.any(corner):
            raise CornerSingularityError("square_to_disk derivative is singular at the square corners")
        _, cn, dn = _jacobi_complex(np.atleast_1d(u))
        out = (_K / (2.0 * L)) * cn / (dn * dn)
        return out.reshape(np.shape(u))

    def describe(self) -> str:
        return "square_to_disk"


Primitive = Identity | Affine | PolySeries | SquareToDisk


@dataclass(frozen=True)
class ConformalMap:
    """Composition of primitive maps, applied first-to-last."""

    stages: tuple = (Identity(),)

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages) or (Identity(),))

    def then(self, other: "ConformalMap | Primitive") -> "ConformalMap":
        more = other.stages if isinstance(other, ConformalMap) else (other,)
        return ConformalMap(self.stages + tuple(more))

    @property
    def is_identity(self) -> bool:
        return all(isinstance(s, Identity) for s in self.stages)

    def value(self, z):
        w = np.asarray(z, dtype=complex)
        for s in self.stages:
            w = s.value(w)
        return w

    def derivative(self, z):
        w = np.asarray(z, dtype=complex)
        out = np.ones_like(w)
        for s in self.stages:
            out = out * s.derivative(w)
            w = s.value(w)
        return out

    def describe(self) -> str:
        return " | ".join(s.describe() for s in self.stages)


def eval_map(m: ConformalMap, z: complex) -> complex:
    return complex(m.value(z))


def eval_map_derivative(m: ConformalMap, z: complex) -> complex:
    return complex(m.derivative(z))


def conformal_density(m: ConformalMap, z):
    """``|f'(z)|^2``; scalar in, float out, array in, array out."""
    out = np.abs(m.derivative(z)) ** 2
    return float(out) if np.ndim(out) == 0 else out


# sqrt(2/3) normalises the cusp cardioid w + w^2/2 on the unit disk to area pi.
CARDIOID_SCALE = math.sqrt(2.0 / 3.0)
CARDIOID_DENSITY = "1/(1+4*(u^2+v^2))"


def cardioid_map(half_side: float = 1.0) -> ConformalMap:
    s = CARDIOID_SCALE
    return ConformalMap((SquareToDisk(half_side), PolySeries((s, s / 2))))


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def _numbers(text: str, what: str) -> list[float]:
    items = [t.strip() for t in text.split(",")]
    try:
        return [float(t) for t in items]
    except ValueError:
        raise InvalidMapError(f"bad numeric arguments in {what}: {text!r}") from None


def parse_map(text: str, half_side: float = 1.0) -> ConformalMap:
    """Parse a map description such as ``"square_to_disk | poly(1,0; 0.5,0)"``.

    Stages separated by ``|`` are applied left to right. ``cardioid`` is a
    shorthand for the area-normalised cusp cardioid.
    """
    stages: list = []
    for raw in text.split("|"):
        item = raw.strip().lower()
        if item in ("", "identity"):
            stages.append(Identity())
        elif item == "square_to_disk":
            stages.append(SquareToDisk(half_side))
        elif item == "cardioid":
            stages.extend(cardioid_map(half_side).stages)
        elif m := re.fullmatch(r"affine\((.*)\)", item):
            vals = _numbers(m.group(1), "affine")
            if len(vals) != 4:
                raise InvalidMapError("affine takes a_re,a_im,b_re,b_im")
            stages.append(Affine(complex(vals[0], vals[1]), complex(vals[2], vals[3])))
        elif m := re.fullmatch(r"poly\((.*)\)", item):
            coeffs = []
            for pair in m.group(1).split(";"):
                vals = _numbers(pair, "poly")
                if len(vals) != 2:
                    raise InvalidMapError("poly coefficients are re,im pairs separated by ';'")
                coeffs.append(complex(*vals))
            stages.append(PolySeries(tuple(coeffs)))
        else:
            raise InvalidMapError(f"unknown map stage {raw.strip()!r}")
    return ConformalMap(tuple(stages))


# --- effective density -----------------------------------------------------

ScalarField = Callable[..., np.ndarray]


@dataclass(frozen=True)
class EffectiveDensity:
    """``Sigma_bar = |f'|^2 * rho(u, v)`` on the reference cube.

    ``rho`` sees the reference coordinates as ``x, y`` and the mapped
    coordinates as ``u, v``. Non-identity maps need ``d == 2``.
    """

    map: ConformalMap = field(default_factory=ConformalMap)
    rho: DensityExpr = field(default_factory=lambda: parse_density("1"))
    domain: CubeDomain = field(default_factory=CubeDomain)

    def __post_init__(self):
        if not self.map.is_identity and self.domain.d != 2:
            raise InvalidMapError("conformal maps are only defined for d = 2")
        if isinstance(self.rho, str):
            object.__setattr__(self, "rho", parse_density(self.rho))

    def describe(self) -> str:
        return f"d={self.domain.d};L={self.domain.L!r};map={self.map.describe()};rho={self.rho}"

    def digest(self) -> str:
        return hashlib.sha256(self.describe().encode()).hexdigest()[:16]

    def _env(self, coords: Sequence[np.ndarray]) -> dict[str, np.ndarray]:
        names = ("x", "y")
        env = {n: c for n, c in zip(names, coords)}
        if self.domain.d == 2:
            w = self.map.value(coords[0] + 1j * coords[1])
            env["u"], env["v"] = w.real, w.imag
        else:
            env["u"] = coords[0]
            if len(coords) > 1:
                env["v"] = coords[1]
        return env

    def values(self, *coords: np.ndarray, check: bool = True) -> np.ndarray:
        """Evaluate on broadcastable coordinate arrays (one per axis)."""
        coords = tuple(np.asarray(c, dtype=float) for c in coords)
        if len(coords) != self.domain.d:
            raise ValueError(f"expected {self.domain.d} coordinates, got {len(coords)}")
        coords = np.broadcast_arrays(*coords)
        try:
            rho = eval_density_array(self.rho, self._env(coords))
        except ExprError as exc:
            raise DensityError(f"density {self.rho} failed: {exc}") from exc
        rho = np.broadcast_to(rho, coords[0].shape)
        if self.map.is_identity:
            sigma = rho
        else:
            dz = self.map.derivative(coords[0] + 1j * coords[1])
            if check and np.any(dz == 0):
                raise InvalidMapError("map derivative vanishes at an interior point")
            sigma = np.abs(dz) ** 2 * rho
        if check and not np.all(sigma > 0):
            raise DensityError("effective density must be positive at every evaluation point")
        return np.array(sigma, dtype=float)

    def __call__(self, *coords):
        return self.values(*coords)

    def grid(self, order: int) -> tuple[np.ndarray, np.ndarray]:
        """Values on the tensor Gauss grid (``values[i1, ..., id]``) and the 1-D weights."""
        x, w = gauss_legendre(order, -self.domain.L, self.domain.L)
        mesh = np.meshgrid(*([x] * self.domain.d), indexing="ij")
        return self.values(*mesh), w


def effective_density_at(s: EffectiveDensity, x: float, y: float | None = None) -> float:
    coords = (x,) if y is None else (x, y)
    return float(s.values(*coords))


def area_integral(s: EffectiveDensity, order: int = DEFAULT_ORDER) -> float:
    """Tensor Gauss-Legendre estimate of the integral of Sigma_bar over the cube."""
    if order < 2:
        raise ValueError("quadrature order must be at least 2 per axis")
    vals, w = s.grid(order)
    return cube_integral(vals, w)


def boundary_integral(s: EffectiveDensity, order: int = DEFAULT_ORDER) -> float:
    """Integral of sqrt(Sigma_bar) along the four edges of the square.

    Each edge is split at its midpoint into two Gauss panels of ``order``
    nodes. Interior nodes only, so corners are never sampled.
    """
    if s.domain.d != 2:
        raise ValueError("boundary integral is defined for d = 2 only")
    if order < 2:
        raise ValueError("quadrature order must be at least 2 per axis")
    L = s.domain.L
    # two panels per edge: cusps of the mapped shape sit at edge midpoints
    ta, wa = gauss_legendre(order, -L, 0.0)
    tb, wb = gauss_legendre(order, 0.0, L)
    t, w = np.concatenate([ta, tb]), np.concatenate([wa, wb])
    edge = np.full_like(t, L)
    total = 0.0
    for xs, ys in ((edge, t), (-edge, t), (t, edge), (t, -edge)):
        # zero density on the boundary (cusps) is legitimate here
        vals = s.values(xs, ys, check=False)
        if np.any(vals < 0):
            raise DensityError("negative effective density on the boundary")
        total += float(np.sqrt(vals) @ w)
    return total


@dataclass(frozen=True)
class IsoperimetricReport:
    ratio: float
    circle_ratio: float
    conformal_admissible: bool


def isoperimetric_check(Lbar: float, Abar: float) -> IsoperimetricReport:
    """Compare ``Lbar/Abar`` with the perimeter/area ratio of a disk of area ``Abar``.

    A smaller ratio than the disk's breaks the isoperimetric inequality, so
    no conformal map can produce that density. Equality counts as admissible.
    """
    if not (Lbar > 0 and Abar > 0):
        raise ValueError("Lbar and Abar must be positive")
    ratio = Lbar / Abar
    circle = 2.0 * math.sqrt(math.pi / Abar)
    # compare L^2 >= 4 pi A to keep the exact-circle case from rounding the wrong way
    admissible = Lbar * Lbar >= 4.0 * math.pi * Abar * (1 - 1e-12)
    return IsoperimetricReport(ratio, circle, admissible)
