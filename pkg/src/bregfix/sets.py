"""Declarative closed convex sets with membership tests and Bregman
projections.

Projection methods are variant-specific: halfspaces and hyperplanes reduce
to a monotone scalar root-find in the dual, boxes clamp coordinatewise
(exact for every separable geometry here), the scaled simplex normalizes
under negative entropy, and intersections run cyclic projections. Every
projection can be certified post hoc against the variational-inequality
characterization via random feasible probes.
"""

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels as K
from .errors import (
    Infeasible,
    NonConvergence,
    NumericalConsistencyError,
    ProbeOutsideSet,
    UnsupportedCombination,
)
from .geometry import as_point
from .metrics import bregman_distance

MEMBERSHIP_TOL = 1e-8
INTERSECTION_STOP = 1e-14
INTERSECTION_MAX_SWEEPS = 100_000


@dataclass
class ProjectionResult:
    point: np.ndarray
    lagrange: Optional[float] = None
    iterations: int = 0
    vi_residual: Optional[float] = None


class ConvexSet:
    """Base class; subclasses implement violation() and to_config()."""

    def violation(self, x):
        """Largest constraint residual at x (0 inside the set)."""
        raise NotImplementedError

    def contains(self, x, tol=MEMBERSHIP_TOL):
        return self.violation(x) <= tol

    def to_config(self):
        raise NotImplementedError


class WholeSpace(ConvexSet):
    def violation(self, x):
        return 0.0

    def to_config(self):
        return {"type": "whole_space"}

    def __repr__(self):
        return "WholeSpace()"


class Halfspace(ConvexSet):
    """{x : <a, x> <= b} with a != 0."""

    def __init__(self, a, b):
        self.a = as_point(a, name="halfspace normal")
        if float(np.linalg.norm(self.a)) == 0.0:
            raise ValueError("halfspace normal must be nonzero")
        self.b = float(b)

    def violation(self, x):
        return max(0.0, float(np.dot(self.a, x)) - self.b)

    def to_config(self):
        return {"type": "halfspace", "a": self.a.tolist(), "b": self.b}

    def __repr__(self):
        return f"Halfspace(a={self.a.tolist()}, b={self.b})"


class Hyperplane(ConvexSet):
    """{x : <a, x> = b} with a != 0."""

    def __init__(self, a, b):
        self.a = as_point(a, name="hyperplane normal")
        if float(np.linalg.norm(self.a)) == 0.0:
            raise ValueError("hyperplane normal must be nonzero")
        self.b = float(b)

    def violation(self, x):
        return abs(float(np.dot(self.a, x)) - self.b)

    def to_config(self):
        return {"type": "hyperplane", "a": self.a.tolist(), "b": self.b}

    def __repr__(self):
        return f"Hyperplane(a={self.a.tolist()}, b={self.b})"


class Box(ConvexSet):
    """{x : lo <= x <= hi} coordinatewise."""

    def __init__(self, lo, hi):
        self.lo = as_point(lo, name="box lower corner")
        self.hi = as_point(hi, dim=self.lo.shape[0], name="box upper corner")
        if np.any(self.lo > self.hi):
            raise ValueError("box requires lo <= hi coordinatewise")

    def violation(self, x):
        x = np.asarray(x, dtype=np.float64)
        return float(np.max(np.maximum(np.maximum(self.lo - x, x - self.hi), 0.0)))

    def to_config(self):
        return {"type": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}

    def __repr__(self):
        return f"Box(lo={self.lo.tolist()}, hi={self.hi.tolist()})"


class ScaledSimplex(ConvexSet):
    """{x : x >= 0, sum x = s} for s > 0."""

    def __init__(self, s):
        self.s = float(s)
        if not self.s > 0.0:
            raise ValueError("simplex scale must be positive")

    def violation(self, x):
        x = np.asarray(x, dtype=np.float64)
        return max(abs(float(np.sum(x)) - self.s), max(0.0, float(np.max(-x))))

    def to_config(self):
        return {"type": "simplex", "s": self.s}

    def __repr__(self):
        return f"ScaledSimplex(s={self.s})"


class Intersection(ConvexSet):
    def __init__(self, members):
        members = list(members)
        if not members:
            raise ValueError("intersection needs at least one member")
        self.members = members

    def violation(self, x):
        return max(m.violation(x) for m in self.members)

    def to_config(self):
        return {"type": "intersection", "members": [m.to_config() for m in self.members]}

    def __repr__(self):
        return f"Intersection({self.members!r})"


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------

def _linear_project(geom, a, b, x, positive_only):
    """Shared halfspace/hyperplane scalar solve in the dual variable."""
    gx = geom.grad(x)
    lam, z, iters, status, mono = K.linear_solve(
        geom.code, geom.param, gx, a, b, positive_only
    )
    if status != 0:
        raise Infeasible(
            f"could not bracket the projection multiplier for constraint <a,x>"
            f"{'<=' if positive_only else '='}{b:g} under {geom.name}"
        )
    if not mono:
        raise NumericalConsistencyError(
            "constraint value failed to decrease along the bracket; geometry inconsistent"
        )
    if not np.all(np.isfinite(z)):
        raise NumericalConsistencyError("projection produced non-finite coordinates")
    return float(lam), z, int(iters)


def bregman_project(geom, cset, x):
    """Minimizer of D(. , x) over the set; x must be in int dom f."""
    x = geom.require_interior(x, "x")

    if isinstance(cset, WholeSpace):
        return ProjectionResult(point=x.copy(), lagrange=None, iterations=0)

    if isinstance(cset, Halfspace):
        if cset.violation(x) <= 0.0:
            return ProjectionResult(point=x.copy(), lagrange=0.0, iterations=0)
        lam, z, iters = _linear_project(geom, cset.a, cset.b, x, positive_only=True)
        result = ProjectionResult(point=z, lagrange=lam, iterations=iters)

    elif isinstance(cset, Hyperplane):
        if cset.violation(x) == 0.0:
            return ProjectionResult(point=x.copy(), lagrange=0.0, iterations=0)
        lam, z, iters = _linear_project(geom, cset.a, cset.b, x, positive_only=False)
        result = ProjectionResult(point=z, lagrange=lam, iterations=iters)

    elif isinstance(cset, Box):
        # clamp is the exact minimizer for every separable geometry here:
        # the 1-d distance is convex in its first slot with minimum at x_i
        return ProjectionResult(point=np.clip(x, cset.lo, cset.hi), lagrange=None, iterations=0)

    elif isinstance(cset, ScaledSimplex):
        if geom.code == K.NEG_ENTROPY:
            total = float(np.sum(x))
            result = ProjectionResult(point=(cset.s / total) * x, lagrange=None, iterations=0)
        else:
            ones = np.ones(geom.dim)
            lam, z, iters = _linear_project(geom, ones, cset.s, x, positive_only=False)
            if np.any(z < 0.0):
                raise UnsupportedCombination(
                    f"simplex projection under {geom.name} needs an active nonnegativity "
                    "constraint, which only the entropy geometry supports in closed form"
                )
            result = ProjectionResult(point=z, lagrange=lam, iterations=iters)

    elif isinstance(cset, Intersection):
        cur = x.copy()
        sweeps = 0
        while sweeps < INTERSECTION_MAX_SWEEPS:
            prev = cur
            for member in cset.members:
                cur = bregman_project(geom, member, cur).point
            sweeps += 1
            if bregman_distance(geom, cur, prev) <= INTERSECTION_STOP:
                break
        else:
            raise NonConvergence(
                f"cyclic projection did not stabilize in {INTERSECTION_MAX_SWEEPS} sweeps"
            )
        result = ProjectionResult(point=cur, lagrange=None, iterations=sweeps)

    else:
        raise UnsupportedCombination(f"no projection method for {type(cset).__name__}")

    if cset.violation(result.point) > MEMBERSHIP_TOL:
        raise NumericalConsistencyError(
            f"projection landed outside the set (violation {cset.violation(result.point):.3e})"
        )
    return result


# ---------------------------------------------------------------------------
# certification
# ---------------------------------------------------------------------------

def variational_residual(geom, cset, x, z, probes):
    """max over probes y of <grad f(x) - grad f(z), y - z>, plus any
    membership violation of z itself.

    A value <= 1e-7 certifies z as the projection of x against this probe
    set; a positive value at a feasible interior probe refutes it.
    """
    x = geom.require_interior(x, "x")
    z = geom.require_interior(z, "z")
    probes = [as_point(p, geom.dim, f"probes[{i}]") for i, p in enumerate(probes)]
    for i, p in enumerate(probes):
        if not cset.contains(p, tol=1e-9):
            raise ProbeOutsideSet(
                f"probe {i} violates the set by {cset.violation(p):.3e}"
            )
    g = geom.grad(x) - geom.grad(z)
    best = -np.inf
    for p in probes:
        best = max(best, float(np.dot(g, p - z)))
    z_violation = cset.violation(z)
    if z_violation > 1e-9:
        best = max(best, z_violation)
    return best


def certify_projection(geom, cset, x, result, rng, probes=50, center=None):
    """Fill result.vi_residual with the measured certificate for a computed
    projection; <= 1e-7 passes."""
    sample = feasible_probes(cset, geom.dim, rng, probes,
                             center=result.point if center is None else center)
    if geom.code == K.NEG_ENTROPY:
        sample = [p for p in sample if np.all(p >= 0.0)]
    result.vi_residual = variational_residual(geom, cset, x, result.point, sample)
    return result.vi_residual


def pythagoras_gap(geom, cset, x, y):
    """D(y, x) - D(y, Px) - D(Px, x) for the projection Px of x; nonnegative
    for every y in the set (three-point inequality)."""
    y = as_point(y, geom.dim, "y")
    if not cset.contains(y, tol=1e-9):
        raise ProbeOutsideSet(f"y violates the set by {cset.violation(y):.3e}")
    proj = bregman_project(geom, cset, x).point
    return (
        bregman_distance(geom, y, x)
        - bregman_distance(geom, y, proj)
        - bregman_distance(geom, proj, x)
    )


# ---------------------------------------------------------------------------
# probe generation
# ---------------------------------------------------------------------------

def _box_vertices(lo, hi, cap=64):
    d = lo.shape[0]
    if 2 ** d > cap:
        return []
    verts = []
    for mask in itertools.product((0, 1), repeat=d):
        verts.append(np.where(np.asarray(mask, dtype=bool), hi, lo).astype(np.float64))
    return verts


def feasible_probes(cset, dim, rng, count, center=None, scale=1.0):
    """Sample `count` points of the set for certification.

    Uses variant-specific samplers (reflection for halfspaces, affine
    projection for hyperplanes, Dirichlet for simplices, uniform + vertices
    for boxes) and rejection/cyclic-projection for intersections.
    """
    if center is None:
        center = np.zeros(dim)
    center = as_point(center, dim, "center")

    def gaussian():
        return center + scale * rng.normal(size=dim)

    probes = []

    if isinstance(cset, WholeSpace):
        while len(probes) < count:
            probes.append(gaussian())

    elif isinstance(cset, Halfspace):
        a, b = cset.a, cset.b
        na2 = float(np.dot(a, a))
        while len(probes) < count:
            g = gaussian()
            excess = float(np.dot(a, g)) - b
            if excess > 0.0:
                g = g - (2.0 * excess / na2) * a
            probes.append(g)

    elif isinstance(cset, Hyperplane):
        a, b = cset.a, cset.b
        na2 = float(np.dot(a, a))
        while len(probes) < count:
            g = gaussian()
            probes.append(g - ((float(np.dot(a, g)) - b) / na2) * a)

    elif isinstance(cset, Box):
        lo = as_point(cset.lo, dim)
        hi = as_point(cset.hi, dim)
        probes.extend(_box_vertices(lo, hi))
        while len(probes) < count:
            probes.append(rng.uniform(lo, hi))

    elif isinstance(cset, ScaledSimplex):
        for i in range(min(dim, count)):
            v = np.zeros(dim)
            v[i] = cset.s
            probes.append(v)
        while len(probes) < count:
            probes.append(cset.s * rng.dirichlet(np.ones(dim)))

    elif isinstance(cset, Intersection):
        inner = [m for m in cset.members if isinstance(m, (ScaledSimplex, Box))]
        source = inner[0] if inner else None
        attempts = 0
        budget = 400 * count
        while len(probes) < count and attempts < budget:
            attempts += 1
            if source is not None:
                cand = feasible_probes(source, dim, rng, 1, center=center, scale=scale)[0]
            else:
                cand = gaussian()
            if not cset.contains(cand, tol=1e-10):
                # pull the candidate into the set by cycling member projections
                for _ in range(200):
                    for m in cset.members:
                        cand = _euclidean_member_projection(m, cand)
                    if cset.contains(cand, tol=1e-10):
                        break
            if cset.contains(cand, tol=1e-9):
                probes.append(cand)
        if len(probes) < count:
            raise NonConvergence(
                f"could only sample {len(probes)}/{count} feasible probes for {cset!r}"
            )

    else:
        raise UnsupportedCombination(f"no probe sampler for {type(cset).__name__}")

    return probes[:count]


def _euclidean_member_projection(member, x):
    """Cheap Euclidean projections used only while manufacturing probes."""
    if isinstance(member, Halfspace):
        excess = float(np.dot(member.a, x)) - member.b
        if excess > 0.0:
            return x - (excess / float(np.dot(member.a, member.a))) * member.a
        return x
    if isinstance(member, Hyperplane):
        excess = float(np.dot(member.a, x)) - member.b
        return x - (excess / float(np.dot(member.a, member.a))) * member.a
    if isinstance(member, Box):
        return np.clip(x, member.lo, member.hi)
    if isinstance(member, ScaledSimplex):
        y = np.maximum(x, 0.0)
        total = float(np.sum(y))
        if total <= 0.0:
            return np.full_like(x, member.s / x.shape[0])
        return (member.s / total) * y
    if isinstance(member, WholeSpace):
        return x
    if isinstance(member, Intersection):
        for m in member.members:
            x = _euclidean_member_projection(m, x)
        return x
    raise UnsupportedCombination(f"no sampler projection for {type(member).__name__}")


def set_from_config(node, dim=None):
    """Build a ConvexSet from its tagged-record config encoding."""
    from .errors import SchemaError

    if not isinstance(node, dict) or "type" not in node:
        raise SchemaError(f"set descriptor must be an object with a 'type' key, got {node!r}")
    kind = node["type"]
    try:
        if kind == "whole_space":
            return WholeSpace()
        if kind == "halfspace":
            return Halfspace(node["a"], node["b"])
        if kind == "hyperplane":
            return Hyperplane(node["a"], node["b"])
        if kind == "box":
            return Box(node["lo"], node["hi"])
        if kind == "simplex":
            return ScaledSimplex(node["s"])
        if kind == "intersection":
            return Intersection([set_from_config(m, dim) for m in node["members"]])
    except KeyError as exc:
        raise SchemaError(f"set descriptor {kind!r} is missing key {exc}") from exc
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
    raise SchemaError(f"unknown set type {kind!r}")


def set_dimension(cset):
    """Dimension implied by a set's data, or None if unconstrained."""
    if isinstance(cset, (Halfspace, Hyperplane)):
        return cset.a.shape[0]
    if isinstance(cset, Box):
        return cset.lo.shape[0]
    if isinstance(cset, Intersection):
        for m in cset.members:
            d = set_dimension(m)
            if d is not None:
                return d
    return None
