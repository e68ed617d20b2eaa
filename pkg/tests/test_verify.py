"""The self-check suites pass on a healthy build and catch a damaged one."""

import pytest

from bregfix import verify
from bregfix.geometry import LegendreGeometry, squared_norm


class SabotagedGeometry(LegendreGeometry):
    """Conjugate gradient off by a factor of two: the inverse-pair and
    Fenchel properties must flag it."""

    def conjugate_grad(self, y):
        return 2.0 * super().conjugate_grad(y)


def test_geometry_suite_passes():
    results = verify.geometry_suite(seed=7)
    assert all(r.passed for r in results), [r.line() for r in results if not r.passed]


def test_metrics_suite_passes():
    results = verify.metrics_suite(seed=7)
    assert all(r.passed for r in results), [r.line() for r in results if not r.passed]


def test_projection_suite_passes():
    results = verify.projection_suite(seed=7)
    assert all(r.passed for r in results), [r.line() for r in results if not r.passed]


def test_mappings_suite_passes():
    results = verify.mappings_suite(seed=7)
    assert all(r.passed for r in results), [r.line() for r in results if not r.passed]


def test_run_suites_all_collects_everything():
    results = verify.run_suites("all", seed=3)
    suites = {r.suite for r in results}
    assert suites == {"geometry", "metrics", "projection", "mappings", "solver"}


def test_run_suites_rejects_unknown():
    with pytest.raises(ValueError):
        verify.run_suites("nonsense")


def test_sabotaged_conjugate_gradient_fails_inverse_pair():
    def broken(dim):
        sq = squared_norm(dim)
        return [SabotagedGeometry(sq.name, dim, sq.code)]

    results = verify.geometry_suite(seed=7, geometries=broken,
                                    dims=(2, 5), points=40)
    by_name = {r.name: r for r in results}
    assert not by_name["inverse_pair"].passed
    # the finite-difference check only exercises grad and value, so it stays green
    assert by_name["gradient_finite_difference"].passed


def test_property_result_lines_are_informative():
    results = verify.geometry_suite(seed=1, dims=(1, 2), points=20)
    for r in results:
        line = r.line()
        assert line.startswith(("PASS", "FAIL"))
        assert r.name in line
