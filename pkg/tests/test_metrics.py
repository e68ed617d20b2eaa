"""Bregman distance, Fenchel gap identities, and the total-convexity sampler."""

import math

import numpy as np
import pytest

import bregfix as bf
from bregfix import metrics
from bregfix.errors import DomainViolation, NumericalConsistencyError

SQ2 = bf.squared_norm(2)
ENT2 = bf.negative_entropy(2)


def kl_divergence(y, x):
    """Independent closed form for the entropy distance."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    terms = np.where(y > 0, y * np.log(np.where(y > 0, y, 1.0) / x), 0.0)
    return float(np.sum(terms - y + x))


class TestDistance:
    def test_squared_norm_unit(self):
        # Hilbert specialization: the distance is the squared Euclidean norm
        assert bf.bregman_distance(SQ2, [1.0, 0.0], [0.0, 0.0]) == pytest.approx(1.0, abs=1e-14)

    def test_zero_at_equal_points(self):
        assert bf.bregman_distance(ENT2, [3.0, 7.0], [3.0, 7.0]) == 0.0

    def test_entropy_matches_kl_closed_form(self):
        got = bf.bregman_distance(ENT2, [1.0, 1.0], [math.e, 1.0])
        assert got == pytest.approx(math.e - 2.0, abs=1e-12)
        assert got == pytest.approx(kl_divergence([1.0, 1.0], [math.e, 1.0]), abs=1e-12)

    def test_entropy_matches_kl_on_random_pairs(self, rng):
        for _ in range(200):
            y = rng.uniform(0.05, 4.0, size=2)
            x = rng.uniform(0.05, 4.0, size=2)
            assert bf.bregman_distance(ENT2, y, x) == pytest.approx(
                kl_divergence(y, x), rel=1e-11, abs=1e-12)

    def test_squared_norm_specialization_random(self, rng):
        sq = bf.squared_norm(6)
        for _ in range(300):
            x = rng.normal(0, 2, size=6)
            y = rng.normal(0, 2, size=6)
            scale = 1.0 + float(np.dot(x, x)) + float(np.dot(y, y))
            diff = abs(bf.bregman_distance(sq, y, x) - float(np.dot(x - y, x - y)))
            assert diff <= 1e-10 * scale

    def test_nonnegative_and_separating(self, rng):
        for geom in (bf.squared_norm(3), bf.p_power(3, 4.0), bf.negative_entropy(3)):
            for _ in range(200):
                x = geom.random_interior(rng, margin=0.05)
                y = geom.random_interior(rng, margin=0.05)
                d = bf.bregman_distance(geom, y, x)
                assert d >= 0.0
                if np.linalg.norm(y - x) >= 1e-3:
                    assert d > 1e-12

    def test_small_negative_noise_clamps_to_zero(self, monkeypatch):
        monkeypatch.setattr(metrics.K, "div", lambda *args: -5e-13)
        assert bf.bregman_distance(SQ2, [1.0, 1.0], [1.0, 1.0]) == 0.0

    def test_large_negative_value_raises(self, monkeypatch):
        monkeypatch.setattr(metrics.K, "div", lambda *args: -1e-6)
        with pytest.raises(NumericalConsistencyError):
            bf.bregman_distance(SQ2, [1.0, 1.0], [1.0, 1.0])

    def test_domain_checks(self):
        with pytest.raises(DomainViolation):
            bf.bregman_distance(ENT2, [-1.0, 1.0], [1.0, 1.0])
        with pytest.raises(DomainViolation):
            bf.bregman_distance(ENT2, [1.0, 1.0], [0.0, 1.0])


class TestFenchelGap:
    def test_squared_norm_example(self):
        # f(0) - <0, s> + f*(s) with s = (2, 0)
        got = bf.fenchel_gap(SQ2, [0.0, 0.0], [2.0, 0.0])
        assert got == pytest.approx(1.0, abs=1e-14)
        # equal to the distance from x to the primal image of the dual point
        dual_image = SQ2.conjugate_grad([2.0, 0.0])
        np.testing.assert_allclose(dual_image, [1.0, 0.0])
        assert got == pytest.approx(
            bf.bregman_distance(SQ2, [0.0, 0.0], dual_image), abs=1e-14)

    def test_zero_at_gradient_pairs(self, rng):
        for geom in (bf.squared_norm(4), bf.p_power(4, 3.0), bf.negative_entropy(4)):
            for _ in range(50):
                x = geom.random_interior(rng, margin=0.05)
                assert abs(bf.fenchel_gap(geom, x, geom.grad(x))) <= 1e-10

    def test_entropy_example_cross_checks_distance(self):
        got = bf.fenchel_gap(ENT2, [1.0, 1.0], [1.0, 0.0])
        assert got == pytest.approx(math.e - 2.0, abs=1e-12)
        assert got == pytest.approx(
            bf.bregman_distance(ENT2, [1.0, 1.0], [math.e, 1.0]), abs=1e-12)

    def test_equals_distance_to_dual_image(self, rng):
        for geom in (bf.squared_norm(3), bf.p_power(3, 4.0), bf.negative_entropy(3)):
            for _ in range(200):
                x = geom.random_interior(rng, margin=0.05)
                s = rng.uniform(-2.0, 2.0, size=3)
                gap = bf.fenchel_gap(geom, x, s)
                dist = bf.bregman_distance(geom, x, geom.conjugate_grad(s))
                assert abs(gap - dist) <= 1e-10

    def test_convex_in_dual_argument(self, rng):
        for geom in (bf.squared_norm(3), bf.negative_entropy(3)):
            for _ in range(200):
                x = geom.random_interior(rng, margin=0.05)
                s1 = rng.uniform(-2.0, 2.0, size=3)
                s2 = rng.uniform(-2.0, 2.0, size=3)
                t = rng.uniform(0.0, 1.0)
                lhs = bf.fenchel_gap(geom, x, t * s1 + (1 - t) * s2)
                rhs = t * bf.fenchel_gap(geom, x, s1) + (1 - t) * bf.fenchel_gap(geom, x, s2)
                assert lhs <= rhs + 1e-10


class TestGapPerturbation:
    def test_zero_perturbation(self, rng):
        for geom in (SQ2, ENT2):
            x = geom.random_interior(rng, margin=0.05)
            s = rng.uniform(-1.0, 1.0, size=2)
            assert bf.fenchel_gap_perturbation(geom, x, s, np.zeros(2)) == pytest.approx(
                0.0, abs=1e-12)

    def test_squared_norm_example(self):
        got = bf.fenchel_gap_perturbation(
            SQ2, [0.0, 0.0], [0.0, 0.0], [2.0, 0.0])
        assert got == pytest.approx(1.0, abs=1e-14)

    def test_nonnegative_over_entropy_sweep(self, rng):
        worst = np.inf
        for _ in range(1000):
            x = ENT2.random_interior(rng, margin=0.05)
            s = rng.uniform(-2.0, 2.0, size=2)
            t = rng.uniform(-2.0, 2.0, size=2)
            worst = min(worst, bf.fenchel_gap_perturbation(ENT2, x, s, t))
        assert worst >= -1e-10


class TestTotalConvexityModulus:
    def test_zero_radius(self):
        assert bf.total_convexity_modulus(SQ2, [1.0, 1.0], 0.0) == 0.0

    def test_squared_norm_is_radius_squared(self, rng):
        # the distance is constant on the sphere, so any sample is exact
        got = bf.total_convexity_modulus(SQ2, [0.3, -0.8], 1.0, samples=64, rng=rng)
        assert got == pytest.approx(1.0, abs=1e-9)
        got2 = bf.total_convexity_modulus(bf.squared_norm(5), np.zeros(5), 0.5,
                                          samples=64, rng=rng)
        assert got2 == pytest.approx(0.25, abs=1e-9)

    def test_entropy_matches_circle_grid_oracle(self, rng):
        x = np.array([1.0, 1.0])
        t = 0.5
        angles = np.linspace(0.0, 2.0 * np.pi, 100001)
        circle = x[None, :] + t * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        oracle = min(kl_divergence(y, x) for y in circle)
        est = bf.total_convexity_modulus(ENT2, x, t, samples=256, rng=rng)
        assert est > 0.0
        assert est == pytest.approx(oracle, abs=1e-6)

    def test_positive_for_positive_radius(self, rng):
        for geom in (bf.squared_norm(3), bf.p_power(3, 4.0), bf.negative_entropy(3)):
            for t in (0.1, 0.5):
                x = geom.random_interior(rng, margin=0.8)
                assert bf.total_convexity_modulus(geom, x, t, samples=64, rng=rng) > 0.0

    def test_infeasible_sphere_raises(self):
        # huge radius in high dimension: a random direction keeping all
        # coordinates nonnegative is never sampled
        geom = bf.negative_entropy(30)
        with pytest.raises(DomainViolation):
            bf.total_convexity_modulus(geom, np.full(30, 0.1), 100.0,
                                       samples=64, rng=np.random.default_rng(3))
