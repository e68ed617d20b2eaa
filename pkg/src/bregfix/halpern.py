"""Anchored dual-averaging iteration toward a common fixed point.

One step mixes, in the dual (gradient) space, the current iterate with its
images under the given mappings, then mixes the result with a fixed anchor
point whose weight vanishes slowly, and finally projects back onto the
ambient set. The anchor forces convergence to the projection of the anchor
onto the intersection of the fixed-point sets, and every inequality the
convergence argument relies on is checkable per iteration (``AuditContext``).

The per-iteration path calls the fused kernels directly; inputs are
validated once at run start and the audits re-verify the loop invariants.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as K
from .errors import (
    AuditFailure,
    DomainViolation,
    NonConvergence,
    NumericalConsistencyError,
    ScheduleViolation,
    ScheduleWarning,
)
from .metrics import bregman_distance
from .sets import (
    Box,
    ConvexSet,
    Intersection,
    bregman_project,
    feasible_probes,
    variational_residual,
)

STATUS_CONVERGED = "Converged"
STATUS_ITER_BUDGET = "IterBudget"


def _norm(v):
    return math.sqrt(float(np.dot(v, v)))

AUDIT_TOL = 1e-9
MEMBERSHIP_AUDIT_TOL = 1e-8
MIX_SUM_TOL = 1e-14
REFERENCE_VI_TOL = 1e-7


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------

class Schedules:
    """Per-iteration coefficient sequences.

    ``alpha`` is the anchor weight (must vanish but not be summable for the
    convergence guarantee); ``beta``/``c`` mix the iterate with the two
    mapping images; ``theta``/``delta``/``gamma`` combine the three branches
    and must sum to one; ``family_weights(n, N)`` returns the N+1 weights of
    the many-mapping scheme.
    """

    def __init__(self, alpha, beta, c, theta, delta, gamma, family_weights,
                 anchor_form=("custom",)):
        self.alpha = alpha
        self.beta = beta
        self.c = c
        self.theta = theta
        self.delta = delta
        self.gamma = gamma
        self.family_weights = family_weights
        self.anchor_form = tuple(anchor_form)

    def condition_warnings(self, horizon=10**6):
        """Texts describing regimes outside the convergence guarantee."""
        notes = []
        form = self.anchor_form
        if form[0] == "const":
            notes.append(
                f"anchor weight is constant ({form[1]:g}); it never vanishes, so the "
                "strong-convergence guarantee does not apply"
            )
        elif form[0] == "power":
            if form[1] > 1.0:
                notes.append(
                    f"anchor weight 1/(n+1)^{form[1]:g} is summable; the anchor may "
                    "stop driving the iteration before reaching the target"
                )
        else:
            if self.alpha(horizon) > 1e-3:
                notes.append("anchor weight does not appear to vanish")
        mix_floor = min(
            self.beta(horizon) * (1.0 - self.beta(horizon)),
            self.c(horizon) * (1.0 - self.c(horizon)),
        )
        if mix_floor < 1e-5:
            notes.append(
                "mapping mix weights degenerate toward 0 or 1; residual decay is "
                "not covered by the guarantee"
            )
        return notes

    def warn_if_degenerate(self):
        for note in self.condition_warnings():
            warnings.warn(note, ScheduleWarning, stacklevel=3)


def _uniform_family_weights(n, n_mappings):
    return np.full(n_mappings + 1, 1.0 / (n_mappings + 1))


def default_schedules():
    """alpha_n = 1/(n+1), beta = c = 1/2, theta = delta = gamma = 1/3,
    uniform family weights."""
    return Schedules(
        alpha=lambda n: 1.0 / (n + 1.0),
        beta=lambda n: 0.5,
        c=lambda n: 0.5,
        theta=lambda n: 1.0 / 3.0,
        delta=lambda n: 1.0 / 3.0,
        gamma=lambda n: 1.0 / 3.0,
        family_weights=_uniform_family_weights,
        anchor_form=("power", 1.0),
    )


def make_schedules(anchor_form=("power", 1.0), beta=0.5, c=None,
                   theta=None, delta=None, gamma=None):
    """Build schedules from constant mixing weights and a named anchor form.

    anchor_form: ("power", a) for 1/(n+1)^a, or ("const", v).
    """
    if c is None:
        c = beta
    if theta is None and delta is None and gamma is None:
        theta = delta = gamma = 1.0 / 3.0
    for name, v in (("beta", beta), ("c", c), ("theta", theta),
                    ("delta", delta), ("gamma", gamma)):
        if v is None or not 0.0 < v < 1.0:
            raise ScheduleViolation(f"{name} must lie strictly between 0 and 1, got {v!r}")
    if abs(theta + delta + gamma - 1.0) > MIX_SUM_TOL:
        raise ScheduleViolation(
            f"theta + delta + gamma must equal 1, got {theta + delta + gamma:.17g}"
        )
    kind = anchor_form[0]
    if kind == "power":
        a = float(anchor_form[1])
        if not a > 0.0:
            raise ScheduleViolation(f"anchor power exponent must be positive, got {a}")
        alpha = lambda n: 1.0 / (n + 1.0) ** a  # noqa: E731
        form = ("power", a)
    elif kind == "const":
        v = float(anchor_form[1])
        if not 0.0 < v < 1.0:
            raise ScheduleViolation(f"constant anchor weight must lie in (0,1), got {v}")
        alpha = lambda n: v  # noqa: E731
        form = ("const", v)
    else:
        raise ScheduleViolation(f"unknown anchor form {kind!r}")
    return Schedules(
        alpha=alpha,
        beta=lambda n: beta,
        c=lambda n: c,
        theta=lambda n: theta,
        delta=lambda n: delta,
        gamma=lambda n: gamma,
        family_weights=_uniform_family_weights,
        anchor_form=form,
    )


def _coef(name, value, n, allow_one=False):
    hi_ok = value <= 1.0 if allow_one else value < 1.0
    if not (0.0 < value and hi_ok):
        rng = "(0, 1]" if allow_one else "(0, 1)"
        raise ScheduleViolation(f"{name}({n}) = {value!r} outside {rng}")
    return float(value)


# ---------------------------------------------------------------------------
# configuration and records
# ---------------------------------------------------------------------------

@dataclass
class SolverConfig:
    geometry: object
    ambient: ConvexSet
    anchor: np.ndarray
    start: np.ndarray
    schedules: Schedules = field(default_factory=default_schedules)
    max_iter: int = 200_000
    residual_tol: float = 1e-8
    audit: bool = False
    audit_every: int = 100
    reference: Optional[np.ndarray] = None

    def __post_init__(self):
        geom = self.geometry
        self.anchor = geom.require_interior(self.anchor, "anchor")
        self.start = geom.require_interior(self.start, "start")
        for name, pt in (("anchor", self.anchor), ("start", self.start)):
            if not self.ambient.contains(pt, tol=MEMBERSHIP_AUDIT_TOL):
                raise DomainViolation(
                    f"{name} lies outside the ambient set by {self.ambient.violation(pt):.3e}"
                )
        if self.reference is not None:
            self.reference = geom.require_interior(self.reference, "reference")


@dataclass(slots=True)
class PairStep:
    n: int
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    w: np.ndarray
    h: np.ndarray
    images: tuple
    x_next: np.ndarray
    alpha: float


@dataclass(slots=True)
class FamilyStep:
    n: int
    x: np.ndarray
    ys: tuple
    w: np.ndarray
    h: np.ndarray
    images: tuple
    x_next: np.ndarray
    alpha: float


@dataclass(slots=True)
class TraceRecord:
    n: int
    residuals: tuple
    dist_to_ref: Optional[float]
    fejer_gap: Optional[float]
    step_size: float


@dataclass
class RunResult:
    final: np.ndarray
    status: str
    iterations: int
    trace: list
    audit_violations: int = 0
    violation_events: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# steps
# ---------------------------------------------------------------------------

def step_pair(geom, cfg, t1, t2, x, n, g_anchor=None):
    """One iteration of the two-mapping scheme from the point x at index n."""
    code, param = geom.code, geom.param
    sch = cfg.schedules
    a = _coef("alpha", sch.alpha(n), n, allow_one=True)
    b = _coef("beta", sch.beta(n), n)
    c = _coef("c", sch.c(n), n)
    th = _coef("theta", sch.theta(n), n)
    de = _coef("delta", sch.delta(n), n)
    ga = _coef("gamma", sch.gamma(n), n)
    if abs(th + de + ga - 1.0) > MIX_SUM_TOL:
        raise ScheduleViolation(
            f"theta + delta + gamma at n={n} is {th + de + ga:.17g}, expected 1"
        )
    if g_anchor is None:
        g_anchor = K.grad(code, param, cfg.anchor)

    t1x = t1.apply(x)
    t2x = t2.apply(x)
    gx = K.grad(code, param, x)
    xi_y = K.mix2(b, gx, 1.0 - b, K.grad(code, param, t1x))
    xi_z = K.mix2(c, gx, 1.0 - c, K.grad(code, param, t2x))
    y = K.conj_grad(code, param, xi_y)
    z = K.conj_grad(code, param, xi_z)
    xi_w = K.mix3(th, gx, de, xi_y, ga, xi_z)
    w = K.conj_grad(code, param, xi_w)
    xi_h = K.mix2(a, g_anchor, 1.0 - a, xi_w)
    h = K.conj_grad(code, param, xi_h)
    x_next = bregman_project(geom, cfg.ambient, h).point
    if not np.all(np.isfinite(x_next)):
        raise NumericalConsistencyError(f"iterate became non-finite at n={n}")
    return PairStep(n=n, x=x, y=y, z=z, w=w, h=h, images=(t1x, t2x),
                    x_next=x_next, alpha=a)


def step_family(geom, cfg, mappings, x, n, g_anchor=None):
    """One iteration of the N-mapping scheme; every branch shares beta."""
    code, param = geom.code, geom.param
    sch = cfg.schedules
    n_maps = len(mappings)
    a = _coef("alpha", sch.alpha(n), n, allow_one=True)
    b = _coef("beta", sch.beta(n), n)
    wts = np.asarray(sch.family_weights(n, n_maps), dtype=np.float64)
    if wts.shape != (n_maps + 1,):
        raise ScheduleViolation(
            f"family_weights must return {n_maps + 1} entries, got shape {wts.shape}"
        )
    for i, v in enumerate(wts):
        _coef(f"family_weights[{i}]", v, n)
    if abs(float(np.sum(wts)) - 1.0) > MIX_SUM_TOL:
        raise ScheduleViolation(
            f"family weights at n={n} sum to {float(np.sum(wts)):.17g}, expected 1"
        )
    if g_anchor is None:
        g_anchor = K.grad(code, param, cfg.anchor)

    gx = K.grad(code, param, x)
    images = []
    ys = []
    xi_w = wts[0] * gx
    for i, t in enumerate(mappings):
        tx = t.apply(x)
        images.append(tx)
        xi_i = K.mix2(b, gx, 1.0 - b, K.grad(code, param, tx))
        ys.append(K.conj_grad(code, param, xi_i))
        xi_w += wts[i + 1] * xi_i
    w = K.conj_grad(code, param, xi_w)
    xi_h = K.mix2(a, g_anchor, 1.0 - a, xi_w)
    h = K.conj_grad(code, param, xi_h)
    x_next = bregman_project(geom, cfg.ambient, h).point
    if not np.all(np.isfinite(x_next)):
        raise NumericalConsistencyError(f"iterate became non-finite at n={n}")
    return FamilyStep(n=n, x=x, ys=tuple(ys), w=w, h=h, images=tuple(images),
                      x_next=x_next, alpha=a)


# ---------------------------------------------------------------------------
# audits
# ---------------------------------------------------------------------------

@dataclass
class AuditReport:
    n: int
    gaps: dict
    violations: list

    def raise_if_violations(self):
        if self.violations:
            worst = min(gap for _, gap in self.violations)
            raise AuditFailure(
                f"{len(self.violations)} audit inequalities failed at n={self.n} "
                f"(worst gap {worst:.3e})",
                violations=[(self.n, name, gap) for name, gap in self.violations],
            )
        return self


class AuditContext:
    """Evaluates, for a certified common fixed point p, the slack of every
    inequality one step of the scheme must satisfy:

    - the mapping mixes and their combination do not move farther from p;
    - the new iterate obeys the anchor-mixed distance bound;
    - by induction, the distance to p never exceeds its starting ceiling;
    - the new iterate belongs to the ambient set.

    Negative slack beyond tolerance is a violation.
    """

    def __init__(self, geom, cfg, p):
        self.geom = geom
        self.cfg = cfg
        self.p = geom.require_interior(p, "p")
        self.d_anchor = bregman_distance(geom, self.p, cfg.anchor)
        self.d_start = bregman_distance(geom, self.p, cfg.start)
        self.ceiling = max(self.d_anchor, self.d_start)

    def _distance(self, x):
        return float(K.div(self.geom.code, self.geom.param, self.p, x))

    def check(self, step):
        d_x = self._distance(step.x)
        d_next = self._distance(step.x_next)
        gaps = {}
        if isinstance(step, PairStep):
            gaps["y_not_farther"] = d_x - self._distance(step.y)
            gaps["z_not_farther"] = d_x - self._distance(step.z)
        else:
            for i, yi in enumerate(step.ys, start=1):
                gaps[f"y{i}_not_farther"] = d_x - self._distance(yi)
        gaps["w_not_farther"] = d_x - self._distance(step.w)
        gaps["anchor_mix_bound"] = (
            step.alpha * self.d_anchor + (1.0 - step.alpha) * d_x - d_next
        )
        gaps["induction_bound"] = self.ceiling - d_next
        gaps["ambient_membership"] = (
            MEMBERSHIP_AUDIT_TOL - self.cfg.ambient.violation(step.x_next)
        )
        violations = [(name, g) for name, g in gaps.items() if g < -AUDIT_TOL]
        return AuditReport(n=step.n, gaps=gaps, violations=violations)


def audit_step(geom, p, cfg, step):
    """One-off audit of a recorded step against the fixed point p."""
    return AuditContext(geom, cfg, p).check(step)


# ---------------------------------------------------------------------------
# runs
# ---------------------------------------------------------------------------

def _run(geom, cfg, stepper, residual_fn):
    cfg.schedules.warn_if_degenerate()
    code, param = geom.code, geom.param
    g_anchor = K.grad(code, param, cfg.anchor)
    ref = cfg.reference
    auditor = AuditContext(geom, cfg, ref) if ref is not None else None

    x = cfg.start.copy()
    trace = []
    events = []
    violations = 0
    status = STATUS_ITER_BUDGET
    iterations = cfg.max_iter

    for n in range(cfg.max_iter):
        st = stepper(x, n, g_anchor)
        residuals = residual_fn(st)
        step_size = _norm(st.x_next - st.x)
        dist_ref = float(K.div(code, param, ref, st.x)) if ref is not None else None
        fejer = None
        if auditor is not None and (cfg.audit or n % cfg.audit_every == 0):
            rep = auditor.check(st)
            fejer = rep.gaps["anchor_mix_bound"]
            if rep.violations:
                violations += len(rep.violations)
                if len(events) < 100:
                    events.extend((n, name, gap) for name, gap in rep.violations)
        trace.append(TraceRecord(n=n, residuals=residuals, dist_to_ref=dist_ref,
                                 fejer_gap=fejer, step_size=step_size))
        x = st.x_next
        if max(residuals) <= cfg.residual_tol and step_size <= cfg.residual_tol:
            status = STATUS_CONVERGED
            iterations = n + 1
            break

    return RunResult(final=x, status=status, iterations=iterations, trace=trace,
                     audit_violations=violations, violation_events=events)


def run_pair(geom, cfg, t1, t2):
    """Iterate the two-mapping scheme until the mapping residuals and the
    step size both fall below cfg.residual_tol, or the budget runs out.
    Assumes the two fixed-point sets intersect."""

    def stepper(x, n, g_anchor):
        return step_pair(geom, cfg, t1, t2, x, n, g_anchor)

    def residual_fn(st):
        return (_norm(st.x - st.images[0]), _norm(st.x - st.images[1]))

    return _run(geom, cfg, stepper, residual_fn)


def run_family(geom, cfg, mappings):
    """Iterate the N-mapping scheme; see run_pair for the stopping rule."""
    mappings = list(mappings)
    if not mappings:
        raise ValueError("run_family needs at least one mapping")

    def stepper(x, n, g_anchor):
        return step_family(geom, cfg, mappings, x, n, g_anchor)

    def residual_fn(st):
        return tuple(_norm(st.x - tx) for tx in st.images)

    return _run(geom, cfg, stepper, residual_fn)


# ---------------------------------------------------------------------------
# reference limit
# ---------------------------------------------------------------------------

def reference_limit(geom, fixed_sets, u, rng=None, probes=200):
    """Projection of the anchor u onto the intersection of the fixed sets,
    certified against the variational inequality with sampled probes."""
    fixed_sets = list(fixed_sets)
    if not fixed_sets:
        raise ValueError("reference_limit needs at least one set")
    u = geom.require_interior(u, "u")
    target = fixed_sets[0] if len(fixed_sets) == 1 else Intersection(fixed_sets)
    point = bregman_project(geom, target, u).point
    if rng is None:
        rng = np.random.default_rng(0)
    sample = feasible_probes(target, geom.dim, rng, probes, center=point)
    resid = variational_residual(geom, target, u, point, sample)
    if resid > REFERENCE_VI_TOL:
        raise NonConvergence(
            f"reference projection failed certification: residual {resid:.3e} "
            f"over {probes} probes"
        )
    return point
