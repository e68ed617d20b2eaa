"""Bregman distance and related scalar diagnostics.

The distance is computed from the defining expression
D(y, x) = f(y) - f(x) - <grad f(x), y - x>; closed-form specializations
(squared Euclidean distance, generalized KL) live in the test oracles, not
here, so the two routes stay independent.
"""

import numpy as np

from . import _kernels as K
from .errors import DomainViolation, NumericalConsistencyError

# values in [DISTANCE_FLOOR, 0) clamp to 0; anything lower means the
# geometry implementation is broken, not roundoff
DISTANCE_FLOOR = -1e-12


def bregman_distance(geom, y, x):
    """D(y, x) >= 0, zero iff y == x. y must be in dom f, x in int dom f."""
    y = geom.require_domain(y, "y")
    x = geom.require_interior(x, "x")
    val = float(K.div(geom.code, geom.param, y, x))
    if val < DISTANCE_FLOOR:
        raise NumericalConsistencyError(
            f"Bregman distance {val:.3e} below the numerical floor; geometry {geom.name} is inconsistent"
        )
    return max(val, 0.0)


def fenchel_gap(geom, x, xstar):
    """f(x) - <x, x*> + f*(x*): the Fenchel-Young gap of the pair (x, x*).

    Nonnegative, zero exactly when x* = grad f(x), and equal to the Bregman
    distance from x to grad f*(x*).
    """
    x = geom.require_domain(x, "x")
    xstar = np.asarray(xstar, dtype=np.float64)
    return geom.value(x) - float(np.dot(x, xstar)) + geom.conjugate_value(xstar)


def fenchel_gap_perturbation(geom, x, xstar, ystar):
    """Slack of the subgradient inequality for a dual perturbation y*:

        gap(x, x* + y*) - gap(x, x*) - <y*, grad f*(x*) - x>  >=  0
    """
    x = geom.require_domain(x, "x")
    xstar = np.asarray(xstar, dtype=np.float64)
    ystar = np.asarray(ystar, dtype=np.float64)
    base = fenchel_gap(geom, x, xstar)
    shifted = fenchel_gap(geom, x, xstar + ystar)
    inner = float(np.dot(ystar, geom.conjugate_grad(xstar) - x))
    return shifted - base - inner


def total_convexity_modulus(geom, x, t, samples=256, rng=None, refine_steps=240):
    """Sampled estimate of inf { D(y, x) : ||y - x|| = t }.

    Random directions on the radius-t sphere plus a shrinking local search
    around the best one. The estimate is upper-biased (a sampler, not an
    exact infimum) and is intended as a positivity diagnostic.
    """
    x = geom.require_interior(x, "x")
    t = float(t)
    if t < 0.0:
        raise ValueError("radius t must be nonnegative")
    if t == 0.0:
        return 0.0
    if rng is None:
        rng = np.random.default_rng(0)

    d = x.shape[0]

    def sphere_point(direction):
        nrm = float(np.linalg.norm(direction))
        if nrm == 0.0:
            return None
        return x + (t / nrm) * direction

    best_val = np.inf
    best_dir = None
    dirs = rng.normal(size=(samples, d))
    for k in range(samples):
        y = sphere_point(dirs[k])
        if y is None or not geom.in_domain(y):
            continue
        val = bregman_distance(geom, y, x)
        if val < best_val:
            best_val = val
            best_dir = dirs[k] / np.linalg.norm(dirs[k])
    if best_dir is None:
        raise DomainViolation(
            f"no point of the radius-{t} sphere around x was found inside dom f"
        )

    scale = 0.5
    for k in range(refine_steps):
        cand = best_dir + scale * rng.normal(size=d)
        y = sphere_point(cand)
        if y is not None and geom.in_domain(y):
            val = bregman_distance(geom, y, x)
            if val < best_val:
                best_val = val
                best_dir = cand / np.linalg.norm(cand)
        if (k + 1) % 30 == 0:
            scale *= 0.6
    return best_val
