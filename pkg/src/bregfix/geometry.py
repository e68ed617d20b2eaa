"""Legendre geometries: a convex function f packaged with its gradient,
conjugate f*, conjugate gradient, and domain predicates.

Three concrete geometries are provided. All have closed-form conjugates and
the gradient maps are exact inverses of each other on the domain interiors:

    squared_norm      f(x) = ||x||^2,                grad f = 2x
    p_power(p)        f(x) = (1/p) sum |x_i|^p,      grad f = sign(x)|x|^(p-1)
    negative_entropy  f(x) = sum (x_i ln x_i - x_i), grad f = ln x
"""

import numpy as np

from . import _kernels as K
from .errors import DomainViolation, WeightError

# entropy coordinates at or below this are treated as boundary (ln underflow)
ENTROPY_BOUNDARY = 1e-300


def as_point(x, dim=None, name="point"):
    """Coerce to a finite float64 1-d array, optionally checking length."""
    if type(x) is not np.ndarray or x.dtype != np.float64 or x.ndim != 1:
        arr = np.asarray(x, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        if arr.ndim != 1:
            raise ValueError(f"{name} must be a 1-d coordinate vector, got shape {arr.shape}")
    else:
        arr = x
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"{name} has dimension {arr.shape[0]}, expected {dim}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} has non-finite coordinates")
    return arr


class LegendreGeometry:
    """Immutable bundle (f, grad f, f*, grad f*) over R^d with domain tests."""

    def __init__(self, name, dim, code, param=0.0):
        if dim < 1:
            raise ValueError("dim must be a positive integer")
        self.name = name
        self.dim = int(dim)
        self.code = code
        self.param = float(param)

    def __repr__(self):
        if self.code == K.P_POWER:
            return f"LegendreGeometry({self.name!r}, dim={self.dim}, p={self.param})"
        return f"LegendreGeometry({self.name!r}, dim={self.dim})"

    # -- domain predicates ---------------------------------------------------

    def in_domain(self, x):
        x = as_point(x, self.dim)
        if self.code == K.NEG_ENTROPY:
            return bool(np.all(x >= 0.0))
        return True

    def in_interior(self, x):
        x = as_point(x, self.dim)
        if self.code == K.NEG_ENTROPY:
            return bool(np.all(x > ENTROPY_BOUNDARY))
        return True

    def require_domain(self, x, name="point"):
        x = as_point(x, self.dim, name)
        if self.code == K.NEG_ENTROPY and float(x.min()) < 0.0:
            raise DomainViolation(f"{name} has negative coordinates outside dom f ({self.name})")
        return x

    def require_interior(self, x, name="point"):
        x = as_point(x, self.dim, name)
        if self.code == K.NEG_ENTROPY and float(x.min()) <= ENTROPY_BOUNDARY:
            raise DomainViolation(f"{name} is not strictly positive, outside int dom f ({self.name})")
        return x

    # -- the four maps ---------------------------------------------------------

    def value(self, x):
        """f(x). Requires x in dom f."""
        x = self.require_domain(x)
        return float(K.fval(self.code, self.param, x))

    def grad(self, x):
        """grad f(x), a dual vector. Requires x in int dom f."""
        x = self.require_interior(x)
        return K.grad(self.code, self.param, x)

    def conjugate_value(self, y):
        """f*(y). All provided geometries are cofinite: dom f* = R^d."""
        y = as_point(y, self.dim, "dual point")
        return float(K.conj_val(self.code, self.param, y))

    def conjugate_grad(self, y):
        """grad f*(y), the inverse of grad f."""
        y = as_point(y, self.dim, "dual point")
        out = K.conj_grad(self.code, self.param, y)
        if not np.all(np.isfinite(out)):
            raise DomainViolation(f"conjugate gradient overflowed for {self.name}")
        return out

    # -- composite -------------------------------------------------------------

    def dual_average(self, weights, points):
        """grad f* of the weighted average of grad f over the points.

        Weights must be nonnegative and sum to one; the combination is taken
        in the dual (gradient) space, so under negative entropy this is the
        weighted geometric mean.
        """
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or w.shape[0] == 0:
            raise WeightError("weights must be a nonempty 1-d sequence")
        if np.any(w < 0.0):
            raise WeightError("weights must be nonnegative")
        if abs(float(np.sum(w)) - 1.0) > 1e-12:
            raise WeightError(f"weights sum to {float(np.sum(w)):.17g}, expected 1")
        pts = [self.require_interior(p, f"points[{i}]") for i, p in enumerate(points)]
        if len(pts) != w.shape[0]:
            raise WeightError("weights and points have different lengths")
        mat = np.stack(pts)
        return K.dual_average(self.code, self.param, w, mat)

    # -- sampling helper (tests, verification suites) ---------------------------

    def random_interior(self, rng, size=None, margin=0.0):
        """Random interior points with coordinates of order one.

        For negative entropy the coordinates stay at least ``margin`` above
        the domain boundary (0.1 is used by the finite-difference checks).
        """
        n = size if size is not None else 1
        if self.code == K.NEG_ENTROPY:
            pts = rng.uniform(max(margin, 0.05), 3.0, size=(n, self.dim))
        else:
            pts = rng.normal(0.0, 1.5, size=(n, self.dim))
            if margin > 0.0:
                sign = np.where(pts >= 0.0, 1.0, -1.0)
                pts = sign * (np.abs(pts) + margin)
        return pts[0] if size is None else pts


def squared_norm(dim):
    """f(x) = ||x||^2 on all of R^d; the Euclidean/Hilbert specialization."""
    return LegendreGeometry("sq_norm", dim, K.SQ_NORM)


def p_power(dim, p):
    """f(x) = (1/p) sum |x_i|^p for p in (1, inf), separable across coordinates."""
    p = float(p)
    if not p > 1.0 or not np.isfinite(p):
        raise ValueError(f"p_power exponent must lie in (1, inf), got {p}")
    return LegendreGeometry("p_power", dim, K.P_POWER, param=p)


def negative_entropy(dim):
    """f(x) = sum (x_i ln x_i - x_i) with 0 ln 0 = 0; int dom f is the
    strictly positive orthant and the induced distance is generalized KL."""
    return LegendreGeometry("neg_entropy", dim, K.NEG_ENTROPY)


def make_geometry(name, dim, **params):
    """Build a geometry from its config-file name."""
    if name == "sq_norm":
        return squared_norm(dim)
    if name == "p_power":
        if "p" not in params:
            raise ValueError("p_power geometry requires parameter 'p'")
        return p_power(dim, params["p"])
    if name == "neg_entropy":
        return negative_entropy(dim)
    raise ValueError(f"unknown geometry {name!r}; expected sq_norm, p_power or neg_entropy")


def dual_average(geom, weights, points):
    """Module-level alias for LegendreGeometry.dual_average."""
    return geom.dual_average(weights, points)
