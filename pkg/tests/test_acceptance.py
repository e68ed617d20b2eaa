"""Acceptance gate: every criterion at its stated tolerance, one printed
pass/fail line per criterion.

Run with  pytest tests/test_acceptance.py -v -s  to see the lines live.
Timings exclude one-time JIT warmup (handled by the session fixture).
"""

import copy
import time

import numpy as np
import pytest

import bregfix as bf
from bregfix import verify
from bregfix.geometry import LegendreGeometry, squared_norm
from bregfix.halpern import AuditContext


def report(k, ok, detail):
    line = f"CRITERION {k} {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    assert ok, line


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def test_criterion_1_geometry_suite():
    with Timer() as t:
        results = verify.geometry_suite(seed=2024, dims=(1, 2, 10, 50), points=200)
    failures = [r.line() for r in results if not r.passed]
    checks = {r.name for r in results}
    assert {"inverse_pair", "fenchel_equality", "gradient_finite_difference"} <= checks
    report(1, not failures and t.seconds < 5.0,
           f"geometry suite on 3 geometries x dims (1,2,10,50) x 200 points, "
           f"{len(results)} properties, {t.seconds:.2f}s "
           f"(limit 5s){'; ' + '; '.join(failures) if failures else ''}")


def test_criterion_2_metrics_suite():
    with Timer() as t:
        results = verify.metrics_suite(seed=2024)
    failures = [r.line() for r in results if not r.passed]
    checks = {r.name for r in results}
    assert {"distance_nonnegative", "squared_norm_specialization",
            "gap_equals_distance_to_dual_image", "gap_perturbation_nonnegative",
            "dual_average_bound"} <= checks
    report(2, not failures and t.seconds < 5.0,
           f"metrics suite (nonnegativity, Euclidean specialization 1e-10, "
           f"gap identity 1e-10, perturbation >= -1e-10 over 1000 draws, "
           f"dual-average bound over 500 draws), {t.seconds:.2f}s (limit 5s)"
           f"{'; ' + '; '.join(failures) if failures else ''}")


def test_criterion_3_projection_suite():
    with Timer() as t:
        results = verify.projection_suite(seed=2024)
    failures = [r.line() for r in results if not r.passed]
    checks = {r.name for r in results}
    assert {"halfspace_matches_euclidean", "box_matches_clamp",
            "entropy_simplex_normalization", "vi_certificate",
            "pythagoras_nonnegative"} <= checks
    report(3, not failures and t.seconds < 10.0,
           f"projection suite (Euclidean oracles 1e-9, simplex normalization "
           f"1e-12, VI certificates 1e-7 with 50 probes, three-point gap "
           f">= -1e-9), {t.seconds:.2f}s (limit 10s)"
           f"{'; ' + '; '.join(failures) if failures else ''}")


def test_criterion_4_pair_two_halfspace_fixture():
    sq, cfg, t1, t2 = verify.two_halfspace_fixture()
    with Timer() as t:
        res = bf.run_pair(sq, cfg, t1, t2)
    err = float(np.linalg.norm(res.final - np.array([0.0, 0.0])))
    ceiling = max(bf.bregman_distance(sq, cfg.reference, cfg.anchor),
                  bf.bregman_distance(sq, cfg.reference, cfg.start))
    bounded = all(rec.dist_to_ref <= ceiling + 1e-9 for rec in res.trace)
    ok = (err <= 1e-3 and res.iterations <= 200_000
          and res.audit_violations == 0 and bounded and t.seconds < 10.0)
    report(4, ok,
           f"two-halfspace fixture: |final - (0,0)| = {err:.2e} (tol 1e-3) in "
           f"{res.iterations} iterations, {res.audit_violations} audit "
           f"violations, boundedness {'holds' if bounded else 'FAILS'} at all "
           f"{len(res.trace)} steps, {t.seconds:.2f}s (limit 10s)")


def test_criterion_5_pair_entropy_fixture():
    ent, cfg, t1, t2 = verify.entropy_fixture(seed=2024)
    with Timer() as t:
        res = bf.run_pair(ent, cfg, t1, t2)
    err = float(np.linalg.norm(res.final - cfg.reference))
    # the certified reference must agree with the analytic limit of this
    # fixture: the simplex normalization of the anchor
    analytic = np.array([7.0, 6.0]) / 13.0
    ref_err = float(np.linalg.norm(cfg.reference - analytic))
    ok = (err <= 1e-3 and res.audit_violations == 0 and ref_err <= 1e-9
          and t.seconds < 10.0)
    report(5, ok,
           f"entropy simplex/box fixture: |final - reference| = {err:.2e} "
           f"(tol 1e-3), reference vs analytic limit {ref_err:.1e}, "
           f"{res.audit_violations} audit violations, {t.seconds:.2f}s (limit 10s)")


def test_criterion_6_family_fixture_and_subsumption():
    with Timer() as t:
        sq, cfg, mappings, p_star = verify.family_fixture(seed=2024)
        res = bf.run_family(sq, cfg, mappings)
        err = float(np.linalg.norm(res.final - cfg.reference))
        oracle_err = float(np.linalg.norm(cfg.reference - p_star))

        # matched-weight N = 2 family reproduces the two-mapping trace
        sq2, cfg2, t1, t2 = verify.two_halfspace_fixture()
        cfg2 = copy.copy(cfg2)
        cfg2.max_iter = 400
        cfg2.residual_tol = 0.0
        cfg2.audit = False
        res_pair = bf.run_pair(sq2, cfg2, t1, t2)
        cfg_fam = copy.copy(cfg2)
        cfg_fam.schedules = copy.copy(cfg2.schedules)
        cfg_fam.schedules.family_weights = lambda n, N: np.full(3, 1.0 / 3.0)
        res_fam = bf.run_family(sq2, cfg_fam, [t1, t2])
        worst_trace = 0.0
        for ra, rb in zip(res_pair.trace, res_fam.trace):
            worst_trace = max(worst_trace, abs(ra.step_size - rb.step_size),
                              abs(ra.dist_to_ref - rb.dist_to_ref),
                              max(abs(x - y) for x, y in zip(ra.residuals, rb.residuals)))
    ok = (err <= 1e-3 and oracle_err <= 1e-9 and res.audit_violations == 0
          and worst_trace <= 1e-12 and t.seconds < 30.0)
    report(6, ok,
           f"five-halfspace family in R^5: |final - reference| = {err:.2e} "
           f"(tol 1e-3), certified reference vs closed form {oracle_err:.1e}, "
           f"{res.audit_violations} audit violations; matched-weight N=2 trace "
           f"matches the pair trace to {worst_trace:.1e} (tol 1e-12); "
           f"{t.seconds:.2f}s (limit 30s)")


def test_criterion_7_anchor_dependence():
    sq, cfg1, t1, t2 = verify.two_halfspace_fixture()
    p1 = np.array([0.0, 0.0])
    cfg2 = copy.copy(cfg1)
    cfg2.anchor = np.array([-0.5, 1.0])
    cfg2.start = np.array([-0.5, 1.0])
    cfg2.reference = np.array([-0.5, 0.0])
    p2 = np.array([-0.5, 0.0])
    assert np.linalg.norm(p1 - p2) >= 0.1
    res1 = bf.run_pair(sq, cfg1, t1, t2)
    res2 = bf.run_pair(sq, cfg2, t1, t2)
    err1 = float(np.linalg.norm(res1.final - p1))
    err2 = float(np.linalg.norm(res2.final - p2))
    cross = float(np.linalg.norm(res1.final - res2.final))
    ok = err1 <= 1e-3 and err2 <= 1e-3 and cross >= 0.09
    report(7, ok,
           f"anchor dependence: errors {err1:.2e} / {err2:.2e} against their "
           f"own projections (tol 1e-3), cross distance {cross:.3f} (>= 0.09)")


class _SabotagedGeometry(LegendreGeometry):
    def conjugate_grad(self, y):
        return 2.0 * super().conjugate_grad(y)


def test_criterion_8_negative_controls():
    # (a) a conjugate gradient off by a factor of two fails the geometry suite
    def broken(dim):
        sq = squared_norm(dim)
        return [_SabotagedGeometry(sq.name, dim, sq.code)]

    results = verify.geometry_suite(seed=2024, geometries=broken, dims=(2, 5), points=40)
    by_name = {r.name: r for r in results}
    sabotage_caught = not by_name["inverse_pair"].passed

    # (b) the doubling map violates the distance inequality by exactly 6
    doubler = bf.FixedPointMapping(lambda x: 2.0 * x,
                                   fixed_set=bf.Box([0.0, 0.0], [0.0, 0.0]))
    sq2 = bf.squared_norm(2)
    violation = bf.quasi_nonexpansive_violation(
        sq2, doubler, np.array([0.0, 0.0]), [np.array([1.0, 1.0])])
    doubling_caught = abs(violation - 6.0) <= 1e-12

    # (c) skipping the ambient projection where it matters trips the audit
    ent = bf.negative_entropy(2)
    simplex = bf.ScaledSimplex(1.0)
    t1 = bf.projection_mapping(ent, bf.Box([0.2, 0.2], [0.8, 0.8]))
    t2 = bf.projection_mapping(ent, bf.Box([0.3, 0.3], [0.9, 0.9]))
    u = np.array([0.95, 0.05])
    honest = bf.SolverConfig(geometry=ent, ambient=simplex, anchor=u, start=u.copy())
    corrupted = bf.SolverConfig(geometry=ent, ambient=bf.WholeSpace(),
                                anchor=u, start=u.copy())
    auditor = AuditContext(ent, honest, np.array([0.5, 0.5]))
    x = u.copy()
    names = []
    for n in range(10):
        step = bf.step_pair(ent, corrupted, t1, t2, x, n)
        names.extend(name for name, _ in auditor.check(step).violations)
        x = step.x_next
    skip_caught = "ambient_membership" in names

    ok = sabotage_caught and doubling_caught and skip_caught
    report(8, ok,
           f"negative controls: sabotaged conjugate gradient "
           f"{'caught' if sabotage_caught else 'MISSED'} by inverse-pair; "
           f"doubling-map violation = {violation:.12f} (expected 6); "
           f"skipped ambient projection {'caught' if skip_caught else 'MISSED'} "
           f"by the membership audit")
