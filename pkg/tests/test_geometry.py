import cmath
import math

import numpy as np
import pytest
from scipy import integrate

from drumlab.geometry import (
    CARDIOID_DENSITY,
    Affine,
    ConformalMap,
    CornerSingularityError,
    CubeDomain,
    DensityError,
    EffectiveDensity,
    Identity,
    InvalidMapError,
    PolySeries,
    SquareToDisk,
    area_integral,
    boundary_integral,
    cardioid_map,
    conformal_density,
    effective_density_at,
    eval_map,
    eval_map_derivative,
    isoperimetric_check,
    parse_map,
)

UNIT = CubeDomain(2, 1.0)


def test_cube_constants():
    c = CubeDomain(3, 0.5)
    assert c.volume == 1.0
    assert c.surface == 6.0
    with pytest.raises(ValueError):
        CubeDomain(0, 1.0)
    with pytest.raises(ValueError):
        CubeDomain(2, -1.0)


def test_primitive_examples():
    assert eval_map(ConformalMap((Identity(),)), 0.3 + 0.1j) == 0.3 + 0.1j
    assert eval_map(ConformalMap((Affine(2, 0),)), 1) == 2
    assert eval_map(ConformalMap((PolySeries((1, 0.5)),)), 1) == 1.5
    assert eval_map_derivative(ConformalMap((Identity(),)), 0.7j) == 1
    assert eval_map_derivative(ConformalMap((PolySeries((1, 0.5)),)), 0) == 1
    assert eval_map_derivative(ConformalMap((Affine(2, 1),)), 0.2 - 0.4j) == 2


def test_conformal_density_examples():
    assert conformal_density(ConformalMap(), 0.4 + 0.2j) == 1.0
    assert conformal_density(ConformalMap((Affine(2, 0),)), 0.4) == 4.0
    assert conformal_density(ConformalMap((PolySeries((1, 0.5)),)), 1j) == pytest.approx(2.0, abs=1e-15)


def test_affine_rejects_zero_scale():
    with pytest.raises(InvalidMapError):
        Affine(0, 1)


class TestSquareToDisk:
    m = SquareToDisk(1.0)

    def test_boundary_goes_to_unit_circle(self):
        t = np.linspace(-0.999, 0.999, 41)
        for edge in (1 + 1j * t, -1 + 1j * t, t + 1j, t - 1j):
            assert np.allclose(np.abs(self.m.value(edge)), 1.0, atol=1e-13)

    def test_symmetry_points(self):
        assert abs(self.m.value(0)) < 1e-15
        assert self.m.value(1.0) == pytest.approx(1.0, abs=1e-14)
        assert self.m.value(1j) == pytest.approx(1j, abs=1e-14)
        assert self.m.value(1 + 1j) == pytest.approx(cmath.exp(1j * math.pi / 4), abs=1e-14)

    def test_interior_maps_inside(self):
        rng = np.random.default_rng(0)
        z = rng.uniform(-0.99, 0.99, 200) + 1j * rng.uniform(-0.99, 0.99, 200)
        assert np.all(np.abs(self.m.value(z)) < 1)

    def test_derivative_matches_finite_differences(self):
        z = np.array([0.3 + 0.2j, -0.7 + 0.5j, 0.9 - 0.9j, 0.0])
        h = 1e-5
        fd = (self.m.value(z + h) - self.m.value(z - h)) / (2 * h)
        fd_i = (self.m.value(z + 1j * h) - self.m.value(z - 1j * h)) / (2j * h)
        assert np.allclose(self.m.derivative(z), fd, atol=1e-9)
        assert np.allclose(self.m.derivative(z), fd_i, atol=1e-9)

    def test_area_of_disk(self):
        s = EffectiveDensity(ConformalMap((self.m,)), "1", UNIT)
        assert area_integral(s, 96) == pytest.approx(math.pi, rel=1e-12)

    def test_corner_is_a_distinct_error(self):
        with pytest.raises(CornerSingularityError):
            self.m.derivative(np.array([1 + 1j]))
        with pytest.raises(CornerSingularityError):
            eval_map_derivative(ConformalMap((self.m,)), -1 - 1j)

    def test_scaled_square(self):
        m2 = SquareToDisk(2.5)
        assert m2.value(2.5) == pytest.approx(1.0, abs=1e-14)
        assert m2.derivative(0.0) == pytest.approx(self.m.derivative(0.0) / 2.5, rel=1e-14)


def test_composition_associative():
    s1, s2, s3 = Affine(0.5 + 0.2j, 0.1), PolySeries((1, 0.3, -0.1j)), Affine(2, -1j)
    z = np.array([0.2 + 0.1j, -0.5 + 0.4j, 0.9j])
    left = ConformalMap((s1, s2)).then(s3)
    right = ConformalMap((s1,)).then(ConformalMap((s2, s3)))
    assert np.allclose(left.value(z), right.value(z), atol=1e-12, rtol=0)
    assert np.allclose(left.derivative(z), right.derivative(z), atol=1e-12, rtol=0)


def test_affine_post_composition_scales_density():
    base = cardioid_map(1.0)
    a = 1.7 - 0.4j
    z = np.array([0.1 + 0.2j, -0.6 + 0.3j, 0.8 - 0.7j])
    scaled = base.then(Affine(a, 0.3))
    assert np.allclose(conformal_density(scaled, z), abs(a) ** 2 * conformal_density(base, z),
                       rtol=1e-12, atol=0)


def test_effective_density_examples():
    assert effective_density_at(EffectiveDensity(ConformalMap(), "1", UNIT), 0.3, 0.4) == 1.0
    s = EffectiveDensity(ConformalMap(), "1/(1+4*(x^2+y^2))", UNIT)
    assert effective_density_at(s, 0.0, 0.0) == 1.0
    s = EffectiveDensity(ConformalMap((Affine(2, 0),)), "1", UNIT)
    assert effective_density_at(s, 0.2, -0.9) == 4.0


def test_effective_density_uses_mapped_coordinates():
    s = EffectiveDensity(ConformalMap((Affine(2, 1),)), "u + 10*v", UNIT)
    # u = 2x + 1, v = 2y
    assert effective_density_at(s, 0.5, 0.25) == pytest.approx(4 * (2.0 + 5.0))


def test_effective_density_rejects_nonpositive():
    s = EffectiveDensity(ConformalMap(), "x", UNIT)
    with pytest.raises(DensityError):
        area_integral(s)
    with pytest.raises(DensityError):
        area_integral(EffectiveDensity(ConformalMap(), "1/x", UNIT), 3)


def test_maps_need_two_dimensions():
    with pytest.raises(InvalidMapError):
        EffectiveDensity(cardioid_map(), "1", CubeDomain(3, 1.0))


def test_area_integral_examples():
    assert area_integral(EffectiveDensity(ConformalMap(), "1", UNIT)) == pytest.approx(4.0, abs=1e-12)
    oracle = integrate.dblquad(lambda y, x: x * x, -1, 1, -1, 1, epsabs=1e-13)[0]
    assert oracle == pytest.approx(4 / 3, abs=1e-12)
    assert area_integral(EffectiveDensity(ConformalMap(), "x^2", UNIT), 8) == pytest.approx(4 / 3, abs=1e-10)


def test_identity_area_matches_volume():
    for L in (0.5, 1.0, math.pi / 2):
        s = EffectiveDensity(ConformalMap(), "1", CubeDomain(2, L))
        assert area_integral(s) == pytest.approx((2 * L) ** 2, rel=1e-12)


def test_boundary_integral_examples():
    assert boundary_integral(EffectiveDensity(ConformalMap(), "1", UNIT)) == pytest.approx(8.0, abs=1e-12)
    assert boundary_integral(EffectiveDensity(ConformalMap(), "4", UNIT)) == pytest.approx(16.0, abs=1e-12)


def test_quadrature_converges_on_smooth_density():
    s = EffectiveDensity(ConformalMap(), "exp(x)*(2+cos(2*y))/(3+x*y)", UNIT)
    ref = area_integral(s, 128)
    errs = [abs(area_integral(s, q) - ref) for q in (2, 4, 8)]
    assert errs[0] > errs[1] > errs[2]


def test_cardioid_integrals(cardioid_density):
    # both values are quoted to six digits for this drum
    assert area_integral(cardioid_density) == pytest.approx(1.21205, abs=5e-6)
    assert boundary_integral(cardioid_density) == pytest.approx(3.00112, abs=5e-6)


def test_cardioid_shape_has_area_pi():
    s = EffectiveDensity(cardioid_map(1.0), "1", UNIT)
    assert area_integral(s, 96) == pytest.approx(math.pi, rel=1e-12)
    # perimeter of the cusp cardioid w + w^2/2 is 8 before scaling
    assert boundary_integral(s, 64) == pytest.approx(8 * math.sqrt(2 / 3), rel=1e-12)


class TestIsoperimetric:
    def test_reference_values(self):
        r = isoperimetric_check(3.00112, 1.21205)
        assert r.ratio == pytest.approx(2.48, abs=5e-3)
        assert r.circle_ratio == pytest.approx(3.22, abs=5e-3)
        assert not r.conformal_admissible

    def test_square(self):
        r = isoperimetric_check(8.0, 4.0)
        assert r.ratio == 2.0
        assert r.conformal_admissible

    def test_circle_equality_is_admissible(self):
        for A in (0.3, 1.0, math.pi, 17.0):
            assert isoperimetric_check(2 * math.sqrt(math.pi * A), A).conformal_admissible

    @pytest.mark.parametrize("m", [
        "square_to_disk", "cardioid", "square_to_disk | poly(1,0; 0.3,0.1)", "affine(1.5,0.2,0,0)",
        "poly(1,0; 0.2,0; 0.05,0)",
    ])
    def test_pure_maps_are_admissible(self, m):
        s = EffectiveDensity(parse_map(m, 1.0), "1", UNIT)
        r = isoperimetric_check(boundary_integral(s), area_integral(s, 96))
        assert r.conformal_admissible


def test_parse_map():
    m = parse_map("square_to_disk | poly(1,0; 0.5,0)", 2.0)
    assert isinstance(m.stages[0], SquareToDisk) and m.stages[0].half_side == 2.0
    assert m.stages[1] == PolySeries((1, 0.5))
    assert parse_map("affine(2,0,1,-1)").stages == (Affine(2, 1 - 1j),)
    assert parse_map("identity").is_identity
    for bad in ("spiral", "affine(1,2)", "poly(1)", "poly(a,b)"):
        with pytest.raises(InvalidMapError):
            parse_map(bad)


def test_describe_round_trips():
    m = parse_map("square_to_disk | poly(0.5,0.25; 1,-2) | affine(2,0,1,0)")
    assert parse_map(m.describe()) == m
