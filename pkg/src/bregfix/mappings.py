"""Fixed-point mappings fed to the anchored solver.

Constructors are restricted to classes guaranteed not to move points away
from their fixed sets in Bregman distance (projections onto closed convex
sets, resolvents of monotone affine operators); the inequality itself is
additionally certified empirically on samples by
``quasi_nonexpansive_violation``.
"""

from typing import Callable, Optional

import numpy as np

from . import _kernels as K
from .errors import NewtonNonConvergence, NotAFixedPoint
from .geometry import as_point
from .metrics import bregman_distance
from .sets import Box, ConvexSet, WholeSpace, bregman_project

RESOLVENT_MAX_NEWTON = 200
RESOLVENT_MAX_HALVINGS = 60


class FixedPointMapping:
    """A self-mapping of the ambient set with an optional declared fixed set."""

    def __init__(self, apply: Callable, fixed_set: Optional[ConvexSet] = None, label: str = ""):
        self.apply = apply
        self.fixed_set = fixed_set
        self.label = label

    def __call__(self, x):
        return self.apply(x)

    def __repr__(self):
        return f"FixedPointMapping({self.label or 'anonymous'})"


def identity_mapping(label="identity"):
    return FixedPointMapping(lambda x: np.array(x, dtype=np.float64, copy=True),
                             fixed_set=WholeSpace(), label=label)


def projection_mapping(geom, cset, label=None):
    """Bregman projection onto the set, the canonical nonexpansive mapping;
    its fixed-point set is the set itself."""
    if label is None:
        label = f"project[{type(cset).__name__}]"

    def apply(x):
        return bregman_project(geom, cset, x).point

    return FixedPointMapping(apply, fixed_set=cset, label=label)


def _hessian_diag(geom, z):
    if geom.code == K.SQ_NORM:
        return np.full_like(z, 2.0)
    if geom.code == K.P_POWER:
        return (geom.param - 1.0) * np.abs(z) ** (geom.param - 2.0)
    return 1.0 / z


def resolvent_mapping(geom, M, q, step=1.0, label=None):
    """x -> z solving  grad f(z) + step*(M z + q) = grad f(x)  for a monotone
    affine operator z -> M z + q; the fixed points are the operator's zeros.

    Monotonicity (symmetric part of M positive semidefinite) plus strict
    convexity of f make the solution unique. Squared-norm geometry reduces to
    one linear solve; the others use damped Newton.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] != geom.dim:
        raise ValueError(f"M must be {geom.dim}x{geom.dim}")
    q = as_point(q, geom.dim, "q")
    step = float(step)
    if not step > 0.0:
        raise ValueError("resolvent step must be positive")
    sym_eigs = np.linalg.eigvalsh(0.5 * (M + M.T))
    if float(sym_eigs.min()) < -1e-10:
        raise ValueError(
            f"operator is not monotone: min symmetric eigenvalue {sym_eigs.min():.3e}"
        )
    if label is None:
        label = f"resolvent[step={step:g}]"

    fixed_set = None
    try:
        zero = np.linalg.solve(M, -q)
        if geom.in_interior(zero):
            # a point set, encoded as a degenerate box
            fixed_set = Box(zero, zero)
    except np.linalg.LinAlgError:
        pass

    if geom.code == K.SQ_NORM:
        A = 2.0 * np.eye(geom.dim) + step * M

        def apply(x):
            x = geom.require_interior(x, "x")
            return np.linalg.solve(A, 2.0 * x - step * q)

    else:

        def apply(x):
            x = geom.require_interior(x, "x")
            gx = geom.grad(x)
            gx_norm = float(np.linalg.norm(gx))
            tol = 1e-12 * (1.0 + gx_norm)
            z = x.copy()

            def residual(zz):
                return K.grad(geom.code, geom.param, zz) + step * (M @ zz + q) - gx

            r = residual(z)
            rnorm = float(np.linalg.norm(r))
            for _ in range(RESOLVENT_MAX_NEWTON):
                if rnorm <= tol:
                    return z
                J = np.diag(_hessian_diag(geom, z)) + step * M
                dz = np.linalg.solve(J, -r)
                t = 1.0
                for _ in range(RESOLVENT_MAX_HALVINGS):
                    cand = z + t * dz
                    if geom.in_interior(cand):
                        r_cand = residual(cand)
                        cand_norm = float(np.linalg.norm(r_cand))
                        if cand_norm < rnorm:
                            z, r, rnorm = cand, r_cand, cand_norm
                            break
                    t *= 0.5
                else:
                    raise NewtonNonConvergence(
                        "resolvent Newton step stalled; operator is ill-conditioned for this geometry"
                    )
            raise NewtonNonConvergence(
                f"resolvent Newton did not reach tolerance in {RESOLVENT_MAX_NEWTON} iterations"
            )

    return FixedPointMapping(apply, fixed_set=fixed_set, label=label)


def quasi_nonexpansive_violation(geom, mapping, p, xs):
    """max over the sample xs of D(p, Tx) - D(p, x) for a fixed point p of T.

    Nonpositive (up to roundoff) certifies the distance-nonexpansiveness
    inequality on the sample; a positive value is a counterexample.
    """
    p = geom.require_interior(p, "p")
    moved = float(np.linalg.norm(mapping.apply(p) - p))
    if moved > 1e-9:
        raise NotAFixedPoint(f"claimed fixed point moves by {moved:.3e} under {mapping!r}")
    worst = -np.inf
    for x in xs:
        x = geom.require_interior(x, "x")
        worst = max(
            worst,
            bregman_distance(geom, p, mapping.apply(x)) - bregman_distance(geom, p, x),
        )
    return worst
