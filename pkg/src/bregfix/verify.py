"""Self-check suites behind ``bregfix verify``.

Each suite re-derives the library's contract properties with a fixed seed
and reports measured worst-case slacks, so a damaged build (or a damaged
geometry passed in explicitly) is caught with a named failing property.
"""

import copy
from dataclasses import dataclass

import numpy as np

from .geometry import negative_entropy, p_power, squared_norm
from .halpern import SolverConfig, reference_limit, run_family, run_pair, step_family, step_pair
from .mappings import projection_mapping, quasi_nonexpansive_violation, resolvent_mapping
from .metrics import (
    bregman_distance,
    fenchel_gap,
    fenchel_gap_perturbation,
    total_convexity_modulus,
)
from .sets import (
    Box,
    Halfspace,
    Hyperplane,
    ScaledSimplex,
    bregman_project,
    feasible_probes,
    pythagoras_gap,
    variational_residual,
)

SUITE_NAMES = ("geometry", "metrics", "projection", "mappings", "solver")


@dataclass
class PropertyResult:
    suite: str
    name: str
    passed: bool
    detail: str

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  {self.suite}.{self.name}  {self.detail}"


def _result(suite, name, worst, tol, larger_is_worse=True):
    passed = worst <= tol if larger_is_worse else worst >= tol
    rel = "<=" if larger_is_worse else ">="
    return PropertyResult(suite, name, passed, f"worst {worst:.3e} ({rel} {tol:.1e})")


def default_geometries(dim):
    return [squared_norm(dim), p_power(dim, 4.0), negative_entropy(dim)]


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

def geometry_suite(seed=0, geometries=None, dims=(1, 2, 10, 50), points=200):
    rng = np.random.default_rng(seed)
    results = []
    geoms = {}
    for d in dims:
        geoms[d] = geometries(d) if callable(geometries) else default_geometries(d)

    worst_inverse = 0.0
    worst_fenchel = 0.0
    for d in dims:
        for geom in geoms[d]:
            xs = geom.random_interior(rng, size=points, margin=0.05)
            for x in xs:
                g = geom.grad(x)
                back = geom.conjugate_grad(g)
                worst_inverse = max(
                    worst_inverse,
                    float(np.linalg.norm(back - x)) / (1.0 + float(np.linalg.norm(x))),
                )
                fx = geom.value(x)
                gap = abs(fx + geom.conjugate_value(g) - float(np.dot(x, g)))
                worst_fenchel = max(worst_fenchel, gap / (1.0 + abs(fx)))
    results.append(_result("geometry", "inverse_pair", worst_inverse, 1e-9))
    results.append(_result("geometry", "fenchel_equality", worst_fenchel, 1e-9))

    worst_fd = 0.0
    h = 1e-5
    for d in dims:
        for geom in geoms[d]:
            xs = geom.random_interior(rng, size=points, margin=0.1)
            for x in xs:
                g = geom.grad(x)
                for i in range(d):
                    e = np.zeros(d)
                    e[i] = h
                    fd = (geom.value(x + e) - geom.value(x - e)) / (2.0 * h)
                    worst_fd = max(worst_fd, abs(fd - g[i]))
    results.append(_result("geometry", "gradient_finite_difference", worst_fd, 1e-5))

    worst_avg = -np.inf
    for _ in range(200):
        geom = geoms[2][rng.integers(len(geoms[2]))]
        k = int(rng.integers(1, 5))
        w = rng.dirichlet(np.ones(k))
        pts = geom.random_interior(rng, size=k, margin=0.05)
        z = geom.random_interior(rng, margin=0.05)
        avg = geom.dual_average(w, pts)
        lhs = bregman_distance(geom, z, avg)
        rhs = sum(w[i] * bregman_distance(geom, z, pts[i]) for i in range(k))
        worst_avg = max(worst_avg, lhs - rhs)
    results.append(_result("geometry", "dual_average_bound", worst_avg, 1e-10))

    worst_margin = np.inf
    for _ in range(200):
        geom = geoms[2][rng.integers(len(geoms[2]))]
        x1 = geom.random_interior(rng, margin=0.05)
        x2 = geom.random_interior(rng, margin=0.05)
        if float(np.linalg.norm(x1 - x2)) < 1e-3:
            continue
        t = rng.uniform(0.05, 0.95)
        mid = t * x1 + (1.0 - t) * x2
        if not geom.in_interior(mid):
            continue
        margin = t * geom.value(x1) + (1.0 - t) * geom.value(x2) - geom.value(mid)
        worst_margin = min(worst_margin, margin)
    results.append(_result("geometry", "strict_convexity", worst_margin, 1e-12,
                           larger_is_worse=False))
    return results


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def metrics_suite(seed=0):
    rng = np.random.default_rng(seed)
    results = []
    geoms = default_geometries(3)

    worst_neg = -np.inf
    worst_zero = 0.0
    ok_identity = True
    for _ in range(300):
        geom = geoms[rng.integers(len(geoms))]
        x = geom.random_interior(rng, margin=0.05)
        y = geom.random_interior(rng, margin=0.05)
        d = bregman_distance(geom, y, x)
        worst_neg = max(worst_neg, -d)
        if float(np.linalg.norm(y - x)) >= 1e-3 and d <= 1e-12:
            ok_identity = False
        worst_zero = max(worst_zero, bregman_distance(geom, x, x))
    results.append(_result("metrics", "distance_nonnegative", worst_neg, 0.0))
    results.append(_result("metrics", "distance_zero_at_equal", worst_zero, 1e-12))
    results.append(PropertyResult("metrics", "distance_separates_points", ok_identity,
                                  "0 false zeros over 300 distinct pairs"))

    sq = squared_norm(6)
    worst_sq = 0.0
    for _ in range(300):
        x = sq.random_interior(rng)
        y = sq.random_interior(rng)
        lhs = bregman_distance(sq, y, x)
        rhs = float(np.dot(x - y, x - y))
        scale = 1.0 + float(np.dot(x, x)) + float(np.dot(y, y))
        worst_sq = max(worst_sq, abs(lhs - rhs) / scale)
    results.append(_result("metrics", "squared_norm_specialization", worst_sq, 1e-10))

    worst_ident = 0.0
    for _ in range(300):
        geom = geoms[rng.integers(len(geoms))]
        x = geom.random_interior(rng, margin=0.05)
        xstar = rng.uniform(-2.0, 2.0, size=geom.dim)
        gap = fenchel_gap(geom, x, xstar)
        dist = bregman_distance(geom, x, geom.conjugate_grad(xstar))
        worst_ident = max(worst_ident, abs(gap - dist))
    results.append(_result("metrics", "gap_equals_distance_to_dual_image", worst_ident, 1e-10))

    worst_pert = np.inf
    for _ in range(1000):
        geom = geoms[rng.integers(len(geoms))]
        x = geom.random_interior(rng, margin=0.05)
        xstar = rng.uniform(-2.0, 2.0, size=geom.dim)
        ystar = rng.uniform(-2.0, 2.0, size=geom.dim)
        worst_pert = min(worst_pert, fenchel_gap_perturbation(geom, x, xstar, ystar))
    results.append(_result("metrics", "gap_perturbation_nonnegative", worst_pert, -1e-10,
                           larger_is_worse=False))

    worst_avg = -np.inf
    for _ in range(500):
        geom = geoms[rng.integers(len(geoms))]
        k = int(rng.integers(1, 5))
        w = rng.dirichlet(np.ones(k))
        pts = geom.random_interior(rng, size=k, margin=0.05)
        z = geom.random_interior(rng, margin=0.05)
        lhs = bregman_distance(geom, z, geom.dual_average(w, pts))
        rhs = sum(w[i] * bregman_distance(geom, z, pts[i]) for i in range(k))
        worst_avg = max(worst_avg, lhs - rhs)
    results.append(_result("metrics", "dual_average_bound", worst_avg, 1e-10))

    worst_cvx = -np.inf
    for _ in range(200):
        geom = geoms[rng.integers(len(geoms))]
        x = geom.random_interior(rng, margin=0.05)
        s1 = rng.uniform(-2.0, 2.0, size=geom.dim)
        s2 = rng.uniform(-2.0, 2.0, size=geom.dim)
        t = rng.uniform(0.0, 1.0)
        lhs = fenchel_gap(geom, x, t * s1 + (1.0 - t) * s2)
        rhs = t * fenchel_gap(geom, x, s1) + (1.0 - t) * fenchel_gap(geom, x, s2)
        worst_cvx = max(worst_cvx, lhs - rhs)
    results.append(_result("metrics", "gap_convex_in_dual_argument", worst_cvx, 1e-10))

    worst_mod = np.inf
    for geom in geoms:
        for t in (0.1, 0.5):
            x = geom.random_interior(rng, margin=0.8)
            worst_mod = min(worst_mod, total_convexity_modulus(geom, x, t, samples=64, rng=rng))
    results.append(_result("metrics", "total_convexity_positive", worst_mod, 0.0,
                           larger_is_worse=False))
    return results


# ---------------------------------------------------------------------------
# projection
# ---------------------------------------------------------------------------

def _euclidean_halfspace(a, b, x):
    excess = float(np.dot(a, x)) - b
    if excess <= 0.0:
        return x.copy()
    return x - (excess / float(np.dot(a, a))) * a


def projection_suite(seed=0):
    rng = np.random.default_rng(seed)
    results = []
    sq = squared_norm(4)

    worst_half = 0.0
    worst_vi = -np.inf
    worst_pyth = np.inf
    worst_idem = 0.0
    for _ in range(100):
        a = rng.normal(size=4)
        while float(np.linalg.norm(a)) < 1e-3:
            a = rng.normal(size=4)
        b = rng.normal()
        x = rng.normal(0.0, 2.0, size=4)
        cset = Halfspace(a, b)
        z = bregman_project(sq, cset, x).point
        worst_half = max(worst_half, float(np.linalg.norm(z - _euclidean_halfspace(a, b, x))))
        probes = feasible_probes(cset, 4, rng, 50, center=z)
        worst_vi = max(worst_vi, variational_residual(sq, cset, x, z, probes))
        worst_pyth = min(worst_pyth, pythagoras_gap(sq, cset, x, probes[0]))
        z2 = bregman_project(sq, cset, z).point
        worst_idem = max(worst_idem, float(np.linalg.norm(z2 - z)))
    results.append(_result("projection", "halfspace_matches_euclidean", worst_half, 1e-9))

    worst_hyp = 0.0
    for _ in range(100):
        a = rng.normal(size=4)
        while float(np.linalg.norm(a)) < 1e-3:
            a = rng.normal(size=4)
        b = rng.normal()
        x = rng.normal(0.0, 2.0, size=4)
        cset = Hyperplane(a, b)
        z = bregman_project(sq, cset, x).point
        expect = x - ((float(np.dot(a, x)) - b) / float(np.dot(a, a))) * a
        worst_hyp = max(worst_hyp, float(np.linalg.norm(z - expect)))
        probes = feasible_probes(cset, 4, rng, 50, center=z)
        worst_vi = max(worst_vi, variational_residual(sq, cset, x, z, probes))
    results.append(_result("projection", "hyperplane_matches_euclidean", worst_hyp, 1e-9))

    worst_box = 0.0
    for _ in range(100):
        lo = rng.uniform(-2.0, 0.0, size=4)
        hi = lo + rng.uniform(0.5, 2.0, size=4)
        x = rng.normal(0.0, 3.0, size=4)
        cset = Box(lo, hi)
        z = bregman_project(sq, cset, x).point
        worst_box = max(worst_box, float(np.linalg.norm(z - np.clip(x, lo, hi))))
        probes = feasible_probes(cset, 4, rng, 50, center=z)
        worst_vi = max(worst_vi, variational_residual(sq, cset, x, z, probes))
        worst_pyth = min(worst_pyth, pythagoras_gap(sq, cset, x, probes[-1]))
        z2 = bregman_project(sq, cset, z).point
        worst_idem = max(worst_idem, float(np.linalg.norm(z2 - z)))
    results.append(_result("projection", "box_matches_clamp", worst_box, 1e-9))

    ent = negative_entropy(4)
    worst_simplex = 0.0
    for _ in range(100):
        x = ent.random_interior(rng, margin=0.05)
        s = float(rng.uniform(0.5, 2.0))
        cset = ScaledSimplex(s)
        z = bregman_project(ent, cset, x).point
        worst_simplex = max(worst_simplex,
                            float(np.linalg.norm(z - s * x / float(np.sum(x)))))
        probes = feasible_probes(cset, 4, rng, 50, center=z)
        worst_vi = max(worst_vi, variational_residual(ent, cset, x, z, probes))
        worst_pyth = min(worst_pyth, pythagoras_gap(ent, cset, x, probes[-1]))
    results.append(_result("projection", "entropy_simplex_normalization", worst_simplex, 1e-12))

    worst_ent_half = -np.inf
    for _ in range(50):
        a = rng.normal(size=4)
        x = ent.random_interior(rng, margin=0.1)
        b = float(np.dot(a, x)) - abs(rng.normal())
        if np.all(a > 0.0):
            # keep the halfspace's intersection with the positive orthant nonempty
            b = max(b, 0.05)
            if b >= float(np.dot(a, x)):
                continue
        cset = Halfspace(a, b)
        z = bregman_project(ent, cset, x).point
        probes = [p for p in feasible_probes(cset, 4, rng, 120, center=z)
                  if np.all(p > 0.0)][:50]
        if probes:
            worst_ent_half = max(worst_ent_half,
                                 variational_residual(ent, cset, x, z, probes))
    worst_vi = max(worst_vi, worst_ent_half)

    pp = p_power(4, 3.0)
    for _ in range(50):
        a = rng.normal(size=4)
        if float(np.linalg.norm(a)) < 1e-3:
            continue
        x = pp.random_interior(rng, margin=0.1)
        b = float(np.dot(a, x)) - abs(rng.normal())
        cset = Halfspace(a, b)
        z = bregman_project(pp, cset, x).point
        probes = feasible_probes(cset, 4, rng, 50, center=z)
        worst_vi = max(worst_vi, variational_residual(pp, cset, x, z, probes))
        worst_pyth = min(worst_pyth, pythagoras_gap(pp, cset, x, probes[0]))
    results.append(_result("projection", "vi_certificate", worst_vi, 1e-7))
    results.append(_result("projection", "pythagoras_nonnegative", worst_pyth, -1e-9,
                           larger_is_worse=False))
    results.append(_result("projection", "idempotent", worst_idem, 1e-9))
    return results


# ---------------------------------------------------------------------------
# mappings
# ---------------------------------------------------------------------------

def mappings_suite(seed=0):
    rng = np.random.default_rng(seed)
    results = []
    sq = squared_norm(3)
    ent = negative_entropy(3)

    fixtures = [
        (sq, projection_mapping(sq, Halfspace([1.0, 1.0, 0.0], 1.0)),
         np.array([0.2, 0.2, 0.5])),
        (sq, projection_mapping(sq, Box([-1.0] * 3, [1.0] * 3)),
         np.array([0.3, -0.4, 0.9])),
        (ent, projection_mapping(ent, ScaledSimplex(1.0)),
         np.array([0.3, 0.3, 0.4])),
        (ent, projection_mapping(ent, Box([0.1] * 3, [2.0] * 3)),
         np.array([0.5, 1.0, 1.5])),
    ]

    worst_fixed = 0.0
    for geom, mapping, _ in fixtures:
        probes = feasible_probes(mapping.fixed_set, 3, rng, 100, center=np.ones(3), scale=0.3)
        for p in probes:
            if not geom.in_interior(p):
                continue
            worst_fixed = max(worst_fixed, float(np.linalg.norm(mapping.apply(p) - p)))
    results.append(_result("mappings", "declared_fixed_points_fixed", worst_fixed, 1e-8))

    worst_q = -np.inf
    for geom, mapping, p in fixtures:
        xs = geom.random_interior(rng, size=125, margin=0.05)
        worst_q = max(worst_q, quasi_nonexpansive_violation(geom, mapping, p, xs))
    results.append(_result("mappings", "projection_quasi_nonexpansive", worst_q, 1e-9))

    worst_res_q = -np.inf
    worst_res_residual = 0.0
    for geom in (sq, ent):
        M = np.array([[2.0, 0.5, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, 3.0]])
        zero = np.array([1.0, 1.0, 0.5])
        q = -M @ zero
        mapping = resolvent_mapping(geom, M, q, step=0.7)
        xs = geom.random_interior(rng, size=50, margin=0.05)
        worst_res_q = max(worst_res_q, quasi_nonexpansive_violation(geom, mapping, zero, xs))
        for x in xs:
            tx = mapping.apply(x)
            resid = geom.grad(tx) + 0.7 * (M @ tx + q) - geom.grad(x)
            scale = 1.0 + float(np.linalg.norm(geom.grad(x)))
            worst_res_residual = max(worst_res_residual,
                                     float(np.linalg.norm(resid)) / scale)
    results.append(_result("mappings", "resolvent_quasi_nonexpansive", worst_res_q, 1e-9))
    results.append(_result("mappings", "resolvent_residual", worst_res_residual, 1e-10))
    return results


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------

def two_halfspace_fixture():
    sq = squared_norm(2)
    t1 = projection_mapping(sq, Halfspace([1.0, 0.0], 0.0))
    t2 = projection_mapping(sq, Halfspace([0.0, 1.0], 0.0))
    cfg = SolverConfig(
        geometry=sq,
        ambient=Box([-1e6, -1e6], [1e6, 1e6]),
        anchor=np.array([1.0, 1.0]),
        start=np.array([1.0, 1.0]),
        residual_tol=1e-4,
        audit=True,
        reference=np.array([0.0, 0.0]),
    )
    return sq, cfg, t1, t2


def entropy_fixture(seed=0):
    ent = negative_entropy(2)
    t1 = projection_mapping(ent, ScaledSimplex(1.0))
    t2 = projection_mapping(ent, Box([0.1, 0.1], [0.9, 0.9]))
    u = np.array([0.7, 0.6])
    ref = reference_limit(ent, [t1.fixed_set, t2.fixed_set], u,
                          rng=np.random.default_rng(seed))
    cfg = SolverConfig(
        geometry=ent,
        ambient=Box([1e-6, 1e-6], [1e6, 1e6]),
        anchor=u,
        start=u.copy(),
        residual_tol=1e-4,
        audit=True,
        reference=ref,
    )
    return ent, cfg, t1, t2


def family_fixture(seed=0, dim=5, count=5):
    """Random halfspaces all containing the unit ball; the anchor violates
    exactly one of them, so the cyclic reference projection is exact."""
    rng = np.random.default_rng(seed)
    sq = squared_norm(dim)
    while True:
        normals = rng.normal(size=(count, dim))
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        offsets = np.ones(count)
        u = rng.uniform(-2.0, 2.0, size=dim)
        excess = normals @ u - offsets
        violated = np.flatnonzero(excess > 1e-3)
        if len(violated) != 1:
            continue
        j = violated[0]
        p_star = u - excess[j] * normals[j]
        slack = normals @ p_star - offsets
        if abs(slack[j]) < 1e-9 and np.all(np.delete(slack, j) < -1e-6):
            break
    sets = [Halfspace(normals[i], offsets[i]) for i in range(count)]
    mappings = [projection_mapping(sq, s) for s in sets]
    ref = reference_limit(sq, sets, u, rng=np.random.default_rng(seed))
    cfg = SolverConfig(
        geometry=sq,
        ambient=Box([-1e6] * dim, [1e6] * dim),
        anchor=u,
        start=u.copy(),
        residual_tol=1e-4,
        audit=True,
        reference=ref,
    )
    return sq, cfg, mappings, p_star


def solver_suite(seed=0):
    results = []

    sq, cfg, t1, t2 = two_halfspace_fixture()
    res = run_pair(sq, cfg, t1, t2)
    err = float(np.linalg.norm(res.final - np.array([0.0, 0.0])))
    results.append(_result("solver", "pair_two_halfspace_limit", err, 1e-3))
    results.append(PropertyResult("solver", "pair_two_halfspace_audits",
                                  res.audit_violations == 0,
                                  f"{res.audit_violations} violations over "
                                  f"{res.iterations} audited iterations"))

    ent, cfg_e, s1, s2 = entropy_fixture(seed)
    res_e = run_pair(ent, cfg_e, s1, s2)
    err_e = float(np.linalg.norm(res_e.final - cfg_e.reference))
    results.append(_result("solver", "pair_entropy_limit", err_e, 1e-3))
    results.append(PropertyResult("solver", "pair_entropy_audits",
                                  res_e.audit_violations == 0,
                                  f"{res_e.audit_violations} violations"))

    sqf, cfg_f, mappings, p_star = family_fixture(seed)
    res_f = run_family(sqf, cfg_f, mappings)
    err_f = float(np.linalg.norm(res_f.final - cfg_f.reference))
    results.append(_result("solver", "family_halfspaces_limit", err_f, 1e-3))
    results.append(PropertyResult("solver", "family_halfspaces_audits",
                                  res_f.audit_violations == 0,
                                  f"{res_f.audit_violations} violations"))

    # the two-mapping scheme is the N = 2 family with matched weights
    cfg_p = copy.copy(cfg)
    cfg_p.max_iter = 300
    cfg_p.residual_tol = 0.0
    x_pair = cfg_p.start.copy()
    x_fam = cfg_p.start.copy()
    worst_match = 0.0
    weights = np.array([1.0, 1.0, 1.0]) / 3.0
    fam_sched = copy.copy(cfg_p.schedules)
    fam_sched.family_weights = lambda n, N: weights
    cfg_fam = copy.copy(cfg_p)
    cfg_fam.schedules = fam_sched
    for n in range(300):
        x_pair = step_pair(sq, cfg_p, t1, t2, x_pair, n).x_next
        x_fam = step_family(sq, cfg_fam, [t1, t2], x_fam, n).x_next
        worst_match = max(worst_match, float(np.linalg.norm(x_pair - x_fam)))
    results.append(_result("solver", "family_subsumes_pair", worst_match, 1e-12))

    # a different anchor lands on its own projection
    cfg2 = copy.copy(cfg)
    cfg2.anchor = np.array([-0.5, 1.0])
    cfg2.start = np.array([-0.5, 1.0])
    cfg2.reference = np.array([-0.5, 0.0])
    res2 = run_pair(sq, cfg2, t1, t2)
    err2 = float(np.linalg.norm(res2.final - np.array([-0.5, 0.0])))
    results.append(_result("solver", "anchor_moves_limit", err2, 1e-3))
    return results


SUITES = {
    "geometry": geometry_suite,
    "metrics": metrics_suite,
    "projection": projection_suite,
    "mappings": mappings_suite,
    "solver": solver_suite,
}


def run_suites(which, seed=0):
    """Run one named suite or 'all'; returns the list of PropertyResults."""
    names = SUITE_NAMES if which == "all" else (which,)
    results = []
    for name in names:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}; expected one of "
                             f"{', '.join(SUITE_NAMES)} or all")
        results.extend(SUITES[name](seed=seed))
    return results
