"""Geometry maps: closed forms, inverse pairs, Fenchel equality, domain rules."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import bregfix as bf
from bregfix.errors import DomainViolation, WeightError

SQ2 = bf.squared_norm(2)
ENT2 = bf.negative_entropy(2)
P4_1 = bf.p_power(1, 4.0)

coord = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False, allow_infinity=False)
pos_coord = st.floats(min_value=0.05, max_value=5.0, allow_nan=False, allow_infinity=False)


def central_difference(geom, x, i, h=1e-5):
    e = np.zeros(geom.dim)
    e[i] = h
    return (geom.value(x + e) - geom.value(x - e)) / (2.0 * h)


class TestClosedForms:
    def test_value_squared_norm(self):
        assert SQ2.value([1.0, 2.0]) == 5.0

    def test_value_entropy(self):
        assert ENT2.value([1.0, 1.0]) == pytest.approx(-2.0, abs=1e-15)

    def test_value_entropy_zero_coordinate(self):
        # 0 ln 0 = 0 by convention, so f((0,1)) = 0 - 0 + (0 - 1)
        assert ENT2.value([0.0, 1.0]) == pytest.approx(-1.0, abs=1e-15)

    def test_value_p_power(self):
        assert P4_1.value([2.0]) == pytest.approx(4.0, abs=1e-15)

    def test_gradient_squared_norm(self):
        np.testing.assert_allclose(SQ2.grad([1.0, 2.0]), [2.0, 4.0])

    def test_gradient_entropy(self):
        np.testing.assert_allclose(ENT2.grad([1.0, math.e]), [0.0, 1.0], atol=1e-15)

    def test_gradient_p_power_matches_finite_differences(self):
        g = P4_1.grad([2.0])
        fd = central_difference(P4_1, np.array([2.0]), 0)
        assert abs(g[0] - fd) <= 1e-6
        assert g[0] == pytest.approx(8.0, rel=1e-12)

    def test_conjugate_value_squared_norm(self):
        assert SQ2.conjugate_value([2.0, 4.0]) == 5.0

    def test_conjugate_value_entropy(self):
        assert ENT2.conjugate_value([0.0, 0.0]) == pytest.approx(2.0, abs=1e-15)

    def test_conjugate_value_p_power_matches_grid_search(self):
        # independent oracle: maximize x*y - |x|^p/p on a grid, then shrink
        y, p = 8.0, 4.0
        xs = np.linspace(-10.0, 10.0, 20001)
        vals = xs * y - np.abs(xs) ** p / p
        i = int(np.argmax(vals))
        lo, hi = xs[i - 1], xs[i + 1]
        for _ in range(200):
            m1, m2 = lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0
            f1 = m1 * y - abs(m1) ** p / p
            f2 = m2 * y - abs(m2) ** p / p
            if f1 < f2:
                lo = m1
            else:
                hi = m2
        x_best = 0.5 * (lo + hi)
        oracle = x_best * y - abs(x_best) ** p / p
        assert oracle == pytest.approx(12.0, rel=1e-9)
        assert P4_1.conjugate_value([y]) == pytest.approx(oracle, rel=1e-9)
        # Fenchel equality at the maximizing pair: f(2) + f*(8) = <2, 8>
        assert P4_1.value([2.0]) + P4_1.conjugate_value([8.0]) == pytest.approx(16.0, rel=1e-12)

    def test_conjugate_gradient_squared_norm(self):
        np.testing.assert_allclose(SQ2.conjugate_grad([2.0, 4.0]), [1.0, 2.0])

    def test_conjugate_gradient_entropy(self):
        np.testing.assert_allclose(ENT2.conjugate_grad([0.0, 1.0]), [1.0, math.e])

    def test_conjugate_gradient_p_power(self):
        np.testing.assert_allclose(P4_1.conjugate_grad([8.0]), [2.0], rtol=1e-12)


class TestInversePair:
    @given(x1=coord, x2=coord)
    @settings(max_examples=100, deadline=None)
    def test_squared_norm_roundtrip(self, x1, x2):
        x = np.array([x1, x2])
        back = SQ2.conjugate_grad(SQ2.grad(x))
        assert np.linalg.norm(back - x) <= 1e-9 * (1.0 + np.linalg.norm(x))

    @given(x1=pos_coord, x2=pos_coord)
    @settings(max_examples=100, deadline=None)
    def test_entropy_roundtrip(self, x1, x2):
        x = np.array([x1, x2])
        back = ENT2.conjugate_grad(ENT2.grad(x))
        assert np.linalg.norm(back - x) <= 1e-9 * (1.0 + np.linalg.norm(x))

    @given(x1=coord, p=st.floats(min_value=1.2, max_value=6.0))
    @settings(max_examples=100, deadline=None)
    def test_p_power_roundtrip(self, x1, p):
        geom = bf.p_power(1, p)
        x = np.array([x1])
        back = geom.conjugate_grad(geom.grad(x))
        assert np.linalg.norm(back - x) <= 1e-9 * (1.0 + np.linalg.norm(x))

    def test_gradient_of_conjugate_gradient_is_identity(self, rng):
        for geom in (bf.squared_norm(5), bf.p_power(5, 3.0), bf.negative_entropy(5)):
            for _ in range(50):
                y = rng.uniform(-2.0, 2.0, size=5)
                z = geom.conjugate_grad(y)
                np.testing.assert_allclose(geom.grad(z), y, rtol=1e-9, atol=1e-9)


class TestFenchelEquality:
    @given(x1=pos_coord, x2=pos_coord)
    @settings(max_examples=100, deadline=None)
    def test_entropy(self, x1, x2):
        x = np.array([x1, x2])
        g = ENT2.grad(x)
        gap = ENT2.value(x) + ENT2.conjugate_value(g) - float(np.dot(x, g))
        assert abs(gap) <= 1e-9 * (1.0 + abs(ENT2.value(x)))

    def test_all_geometries_random(self, rng):
        for geom in (bf.squared_norm(8), bf.p_power(8, 2.5), bf.negative_entropy(8)):
            for x in geom.random_interior(rng, size=100, margin=0.05):
                g = geom.grad(x)
                gap = geom.value(x) + geom.conjugate_value(g) - float(np.dot(x, g))
                assert abs(gap) <= 1e-9 * (1.0 + abs(geom.value(x)))


class TestStrictConvexity:
    def test_midpoint_strictly_below_chord(self, rng):
        for geom in (bf.squared_norm(3), bf.p_power(3, 4.0), bf.negative_entropy(3)):
            for _ in range(100):
                x1 = geom.random_interior(rng, margin=0.05)
                x2 = geom.random_interior(rng, margin=0.05)
                if np.linalg.norm(x1 - x2) < 1e-3:
                    continue
                t = rng.uniform(0.1, 0.9)
                chord = t * geom.value(x1) + (1.0 - t) * geom.value(x2)
                assert geom.value(t * x1 + (1.0 - t) * x2) < chord - 1e-12


class TestDualAverage:
    def test_single_point_is_identity(self, rng):
        for geom in (bf.squared_norm(3), bf.p_power(3, 4.0), bf.negative_entropy(3)):
            x = geom.random_interior(rng, margin=0.05)
            np.testing.assert_allclose(geom.dual_average([1.0], [x]), x, rtol=1e-12)

    def test_squared_norm_is_arithmetic_mean(self):
        out = SQ2.dual_average([0.5, 0.5], [np.array([0.0, 0.0]), np.array([2.0, 2.0])])
        np.testing.assert_allclose(out, [1.0, 1.0])

    def test_entropy_is_geometric_mean(self):
        out = ENT2.dual_average([0.5, 0.5], [np.array([1.0, 1.0]), np.array([4.0, 1.0])])
        np.testing.assert_allclose(out, [2.0, 1.0], rtol=1e-14)
        # direct composition of the two gradient maps as the cross-check
        manual = ENT2.conjugate_grad(
            0.5 * ENT2.grad([1.0, 1.0]) + 0.5 * ENT2.grad([4.0, 1.0]))
        np.testing.assert_allclose(out, manual, rtol=1e-14)

    def test_distance_bound_under_dual_average(self, rng):
        # averaged point is never farther from any z than the weighted branches
        for geom in (bf.squared_norm(4), bf.p_power(4, 3.0), bf.negative_entropy(4)):
            for _ in range(100):
                k = int(rng.integers(1, 5))
                w = rng.dirichlet(np.ones(k))
                pts = geom.random_interior(rng, size=k, margin=0.05)
                z = geom.random_interior(rng, margin=0.05)
                lhs = bf.bregman_distance(geom, z, geom.dual_average(w, pts))
                rhs = sum(w[i] * bf.bregman_distance(geom, z, pts[i]) for i in range(k))
                assert lhs <= rhs + 1e-10

    def test_weight_validation(self):
        x = np.array([1.0, 1.0])
        with pytest.raises(WeightError):
            SQ2.dual_average([0.5, 0.4], [x, x])
        with pytest.raises(WeightError):
            SQ2.dual_average([1.5, -0.5], [x, x])
        with pytest.raises(WeightError):
            SQ2.dual_average([0.5, 0.5, 0.0], [x, x])

    def test_domain_validation(self):
        with pytest.raises(DomainViolation):
            ENT2.dual_average([0.5, 0.5], [np.array([1.0, 1.0]), np.array([-1.0, 1.0])])


class TestDomains:
    def test_entropy_value_rejects_negative(self):
        with pytest.raises(DomainViolation):
            ENT2.value([-0.1, 1.0])

    def test_entropy_gradient_rejects_boundary(self):
        with pytest.raises(DomainViolation):
            ENT2.grad([0.0, 1.0])
        with pytest.raises(DomainViolation):
            ENT2.grad([1e-301, 1.0])

    def test_entropy_value_allows_boundary(self):
        assert np.isfinite(ENT2.value([0.0, 0.5]))

    def test_gradient_defined_exactly_on_interior_predicate(self, rng):
        for _ in range(50):
            x = rng.uniform(-0.5, 2.0, size=2)
            if ENT2.in_interior(x):
                assert np.all(np.isfinite(ENT2.grad(x)))
            else:
                with pytest.raises(DomainViolation):
                    ENT2.grad(x)

    def test_nonfinite_coordinates_rejected(self):
        with pytest.raises(ValueError):
            SQ2.value([np.nan, 0.0])
        with pytest.raises(ValueError):
            SQ2.grad([np.inf, 0.0])

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            SQ2.value([1.0, 2.0, 3.0])


class TestFactories:
    def test_make_geometry(self):
        assert bf.make_geometry("sq_norm", 3).name == "sq_norm"
        assert bf.make_geometry("p_power", 2, p=2.5).param == 2.5
        assert bf.make_geometry("neg_entropy", 4).dim == 4
        with pytest.raises(ValueError):
            bf.make_geometry("p_power", 2)
        with pytest.raises(ValueError):
            bf.make_geometry("hyperbolic", 2)

    def test_p_power_requires_p_above_one(self):
        with pytest.raises(ValueError):
            bf.p_power(2, 1.0)
        with pytest.raises(ValueError):
            bf.p_power(2, 0.5)
