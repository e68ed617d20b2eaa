"""Hot numeric kernels, provided in two interchangeable backends.

Every kernel exists twice: a numba ``@njit`` version (fused loops, no numpy
dispatch overhead inside the solver's per-iteration path) and a pure-numpy
twin. The active backend is picked at import time from the environment
variable ``BREGFIX_BACKEND``:

    BREGFIX_BACKEND=numba   force numba (ImportError if unavailable)
    BREGFIX_BACKEND=numpy   force the pure-numpy fallback
    unset / auto            numba when importable, else numpy

``use_backend()`` switches at runtime (used by the backend-agreement tests
and by ``benchmarks/bench_backends.py``).

Geometry codes: 0 = squared norm, 1 = coordinatewise p-power,
2 = negative entropy. ``param`` is the p-power exponent (ignored otherwise).
"""

import math
import os

import numpy as np

SQ_NORM = 0
P_POWER = 1
NEG_ENTROPY = 2

# exp() argument cap inside the scalar solve; keeps bracketing finite while
# preserving (weak) monotonicity of the constraint map
_EXP_CLIP = 700.0

_SOLVE_OK = 0
_SOLVE_NO_BRACKET = 1


# ---------------------------------------------------------------------------
# pure-numpy backend
# ---------------------------------------------------------------------------

def _np_fval(code, param, x):
    if code == SQ_NORM:
        return float(np.dot(x, x))
    if code == P_POWER:
        return float(np.sum(np.abs(x) ** param) / param)
    pos = x > 0.0
    xlogx = np.where(pos, x * np.log(np.where(pos, x, 1.0)), 0.0)
    return float(np.sum(xlogx - x))


def _np_grad(code, param, x):
    if code == SQ_NORM:
        return 2.0 * x
    if code == P_POWER:
        return np.sign(x) * np.abs(x) ** (param - 1.0)
    return np.log(x)


def _np_conj_val(code, param, y):
    if code == SQ_NORM:
        return float(np.dot(y, y)) / 4.0
    if code == P_POWER:
        q = param / (param - 1.0)
        return float(np.sum(np.abs(y) ** q) / q)
    return float(np.sum(np.exp(y)))


def _np_conj_grad(code, param, y):
    if code == SQ_NORM:
        return 0.5 * y
    if code == P_POWER:
        q = param / (param - 1.0)
        return np.sign(y) * np.abs(y) ** (q - 1.0)
    return np.exp(y)


def _np_div(code, param, y, x):
    gx = _np_grad(code, param, x)
    return _np_fval(code, param, y) - _np_fval(code, param, x) - float(np.dot(gx, y - x))


def _np_dual_average(code, param, weights, points):
    acc = np.zeros(points.shape[1])
    for i in range(points.shape[0]):
        acc += weights[i] * _np_grad(code, param, points[i])
    return _np_conj_grad(code, param, acc)


def _np_mix2(wa, va, wb, vb):
    return wa * va + wb * vb


def _np_mix3(wa, va, wb, vb, wc, vc):
    return wa * va + wb * vb + wc * vc


def _np_constraint_value(code, param, gx, a, lam):
    # <a, grad_conj(gx - lam*a)>, with the entropy exponent clipped so the
    # bracket search survives transient overflow
    y = gx - lam * a
    if code == NEG_ENTROPY:
        y = np.minimum(y, _EXP_CLIP)
    return float(np.dot(a, _np_conj_grad(code, param, y)))


def _np_constraint_slope(code, param, gx, a, lam):
    y = gx - lam * a
    if code == SQ_NORM:
        curv = np.full_like(y, 0.5)
    elif code == P_POWER:
        q = param / (param - 1.0)
        curv = (q - 1.0) * np.abs(y) ** (q - 2.0)
    else:
        curv = np.exp(np.minimum(y, _EXP_CLIP))
    return -float(np.dot(a * a, curv))


def _np_linear_solve(code, param, gx, a, b, positive_only):
    """Root of <a, grad_conj(gx - lam*a)> = b in lam.

    The map is nonincreasing in lam. Returns
    (lam, z, iterations, status, monotone_ok).
    """
    tol = 1e-12 * (1.0 + abs(b))
    phi0 = _np_constraint_value(code, param, gx, a, 0.0)
    monotone_ok = True
    iters = 0

    if abs(phi0 - b) <= tol:
        lo = hi = 0.0
    elif phi0 > b:
        # root at lam > 0; grow the bracket by doubling from 1
        lo, phi_lo = 0.0, phi0
        hi = 1.0
        phi_hi = _np_constraint_value(code, param, gx, a, hi)
        iters += 1
        while phi_hi > b:
            if phi_hi > phi_lo + 1e-9 * (1.0 + abs(phi_lo)):
                monotone_ok = False
            lo, phi_lo = hi, phi_hi
            hi *= 2.0
            if hi > 1e300:
                return 0.0, gx.copy(), iters, _SOLVE_NO_BRACKET, monotone_ok
            phi_hi = _np_constraint_value(code, param, gx, a, hi)
            iters += 1
        if phi_hi > phi_lo + 1e-9 * (1.0 + abs(phi_lo)):
            monotone_ok = False
    else:
        if positive_only:
            # caller guarantees phi0 > b for halfspace projections
            return 0.0, gx.copy(), iters, _SOLVE_NO_BRACKET, monotone_ok
        hi, phi_hi = 0.0, phi0
        lo = -1.0
        phi_lo = _np_constraint_value(code, param, gx, a, lo)
        iters += 1
        while phi_lo < b:
            if phi_lo < phi_hi - 1e-9 * (1.0 + abs(phi_hi)):
                monotone_ok = False
            hi, phi_hi = lo, phi_lo
            lo *= 2.0
            if lo < -1e300:
                return 0.0, gx.copy(), iters, _SOLVE_NO_BRACKET, monotone_ok
            phi_lo = _np_constraint_value(code, param, gx, a, lo)
            iters += 1

    # safeguarded Newton within [lo, hi]; phi(lo) >= b >= phi(hi). Every other
    # iteration bisects unconditionally so near-vertical tangents (p-power
    # exponents below 2) cannot stall the bracket.
    lam = 0.5 * (lo + hi)
    for it in range(200):
        phi = _np_constraint_value(code, param, gx, a, lam)
        iters += 1
        if abs(phi - b) <= tol:
            break
        if phi > b:
            lo = lam
        else:
            hi = lam
        lam_next = 0.5 * (lo + hi)
        if it % 2 == 0:
            slope = _np_constraint_slope(code, param, gx, a, lam)
            if slope < 0.0 and math.isfinite(slope):
                cand = lam - (phi - b) / slope
                if lo < cand < hi:
                    lam_next = cand
        if hi - lo < 1e-16 * (1.0 + abs(lam)):
            lam = lam_next
            break
        lam = lam_next
    z = _np_conj_grad(code, param, gx - lam * a)
    return lam, z, iters, _SOLVE_OK, monotone_ok


_NUMPY_TABLE = {
    "fval": _np_fval,
    "grad": _np_grad,
    "conj_val": _np_conj_val,
    "conj_grad": _np_conj_grad,
    "div": _np_div,
    "dual_average": _np_dual_average,
    "linear_solve": _np_linear_solve,
    "mix2": _np_mix2,
    "mix3": _np_mix3,
}


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

def _build_numba_table():
    from numba import njit

    @njit(cache=True)
    def nb_fval(code, param, x):
        s = 0.0
        if code == SQ_NORM:
            for i in range(x.shape[0]):
                s += x[i] * x[i]
        elif code == P_POWER:
            for i in range(x.shape[0]):
                s += abs(x[i]) ** param
            s /= param
        else:
            for i in range(x.shape[0]):
                if x[i] > 0.0:
                    s += x[i] * math.log(x[i]) - x[i]
                else:
                    s += -x[i]
        return s

    @njit(cache=True)
    def nb_grad(code, param, x):
        out = np.empty_like(x)
        if code == SQ_NORM:
            for i in range(x.shape[0]):
                out[i] = 2.0 * x[i]
        elif code == P_POWER:
            e = param - 1.0
            for i in range(x.shape[0]):
                v = x[i]
                out[i] = math.copysign(abs(v) ** e, v) if v != 0.0 else 0.0
        else:
            for i in range(x.shape[0]):
                out[i] = math.log(x[i])
        return out

    @njit(cache=True)
    def nb_conj_val(code, param, y):
        s = 0.0
        if code == SQ_NORM:
            for i in range(y.shape[0]):
                s += y[i] * y[i]
            s /= 4.0
        elif code == P_POWER:
            q = param / (param - 1.0)
            for i in range(y.shape[0]):
                s += abs(y[i]) ** q
            s /= q
        else:
            for i in range(y.shape[0]):
                s += math.exp(y[i])
        return s

    @njit(cache=True)
    def nb_conj_grad(code, param, y):
        out = np.empty_like(y)
        if code == SQ_NORM:
            for i in range(y.shape[0]):
                out[i] = 0.5 * y[i]
        elif code == P_POWER:
            e = param / (param - 1.0) - 1.0
            for i in range(y.shape[0]):
                v = y[i]
                out[i] = math.copysign(abs(v) ** e, v) if v != 0.0 else 0.0
        else:
            for i in range(y.shape[0]):
                out[i] = math.exp(y[i])
        return out

    @njit(cache=True)
    def nb_div(code, param, y, x):
        gx = nb_grad(code, param, x)
        inner = 0.0
        for i in range(x.shape[0]):
            inner += gx[i] * (y[i] - x[i])
        return nb_fval(code, param, y) - nb_fval(code, param, x) - inner

    @njit(cache=True)
    def nb_dual_average(code, param, weights, points):
        d = points.shape[1]
        acc = np.zeros(d)
        for i in range(points.shape[0]):
            gi = nb_grad(code, param, points[i])
            for j in range(d):
                acc[j] += weights[i] * gi[j]
        return nb_conj_grad(code, param, acc)

    @njit(cache=True)
    def nb_constraint_value(code, param, gx, a, lam):
        s = 0.0
        if code == SQ_NORM:
            for i in range(gx.shape[0]):
                s += a[i] * 0.5 * (gx[i] - lam * a[i])
        elif code == P_POWER:
            e = param / (param - 1.0) - 1.0
            for i in range(gx.shape[0]):
                v = gx[i] - lam * a[i]
                if v != 0.0:
                    s += a[i] * math.copysign(abs(v) ** e, v)
        else:
            for i in range(gx.shape[0]):
                v = gx[i] - lam * a[i]
                if v > _EXP_CLIP:
                    v = _EXP_CLIP
                s += a[i] * math.exp(v)
        return s

    @njit(cache=True)
    def nb_constraint_slope(code, param, gx, a, lam):
        s = 0.0
        if code == SQ_NORM:
            for i in range(gx.shape[0]):
                s += a[i] * a[i] * 0.5
        elif code == P_POWER:
            q = param / (param - 1.0)
            for i in range(gx.shape[0]):
                v = abs(gx[i] - lam * a[i])
                if v != 0.0:
                    s += a[i] * a[i] * (q - 1.0) * v ** (q - 2.0)
        else:
            for i in range(gx.shape[0]):
                v = gx[i] - lam * a[i]
                if v > _EXP_CLIP:
                    v = _EXP_CLIP
                s += a[i] * a[i] * math.exp(v)
        return -s

    @njit(cache=True)
    def nb_linear_solve(code, param, gx, a, b, positive_only):
        tol = 1e-12 * (1.0 + abs(b))
        phi0 = nb_constraint_value(code, param, gx, a, 0.0)
        monotone_ok = True
        iters = 0
        lo = 0.0
        hi = 0.0

        bracketed = True
        if abs(phi0 - b) <= tol:
            lo = 0.0
            hi = 0.0
        elif phi0 > b:
            phi_lo = phi0
            hi = 1.0
            phi_hi = nb_constraint_value(code, param, gx, a, hi)
            iters += 1
            while phi_hi > b:
                if phi_hi > phi_lo + 1e-9 * (1.0 + abs(phi_lo)):
                    monotone_ok = False
                lo = hi
                phi_lo = phi_hi
                hi *= 2.0
                if hi > 1e300:
                    bracketed = False
                    break
                phi_hi = nb_constraint_value(code, param, gx, a, hi)
                iters += 1
            if bracketed and phi_hi > phi_lo + 1e-9 * (1.0 + abs(phi_lo)):
                monotone_ok = False
        else:
            if positive_only:
                bracketed = False
            else:
                hi = 0.0
                phi_hi = phi0
                lo = -1.0
                phi_lo = nb_constraint_value(code, param, gx, a, lo)
                iters += 1
                while phi_lo < b:
                    if phi_lo < phi_hi - 1e-9 * (1.0 + abs(phi_hi)):
                        monotone_ok = False
                    hi = lo
                    phi_hi = phi_lo
                    lo *= 2.0
                    if lo < -1e300:
                        bracketed = False
                        break
                    phi_lo = nb_constraint_value(code, param, gx, a, lo)
                    iters += 1

        if not bracketed:
            return 0.0, gx.copy(), iters, _SOLVE_NO_BRACKET, monotone_ok

        lam = 0.5 * (lo + hi)
        for it in range(200):
            phi = nb_constraint_value(code, param, gx, a, lam)
            iters += 1
            if abs(phi - b) <= tol:
                break
            if phi > b:
                lo = lam
            else:
                hi = lam
            lam_next = 0.5 * (lo + hi)
            if it % 2 == 0:
                slope = nb_constraint_slope(code, param, gx, a, lam)
                if slope < 0.0 and math.isfinite(slope):
                    cand = lam - (phi - b) / slope
                    if lo < cand < hi:
                        lam_next = cand
            if hi - lo < 1e-16 * (1.0 + abs(lam)):
                lam = lam_next
                break
            lam = lam_next
        z = nb_conj_grad(code, param, gx - lam * a)
        return lam, z, iters, _SOLVE_OK, monotone_ok

    @njit(cache=True)
    def nb_mix2(wa, va, wb, vb):
        out = np.empty_like(va)
        for i in range(va.shape[0]):
            out[i] = wa * va[i] + wb * vb[i]
        return out

    @njit(cache=True)
    def nb_mix3(wa, va, wb, vb, wc, vc):
        out = np.empty_like(va)
        for i in range(va.shape[0]):
            out[i] = wa * va[i] + wb * vb[i] + wc * vc[i]
        return out

    return {
        "fval": nb_fval,
        "grad": nb_grad,
        "conj_val": nb_conj_val,
        "conj_grad": nb_conj_grad,
        "div": nb_div,
        "dual_average": nb_dual_average,
        "linear_solve": nb_linear_solve,
        "mix2": nb_mix2,
        "mix3": nb_mix3,
    }


_NUMBA_TABLE = None
_ACTIVE_NAME = None

fval = None
grad = None
conj_val = None
conj_grad = None
div = None
dual_average = None
linear_solve = None
mix2 = None
mix3 = None


def _numba_table():
    global _NUMBA_TABLE
    if _NUMBA_TABLE is None:
        _NUMBA_TABLE = _build_numba_table()
    return _NUMBA_TABLE


def numba_available():
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def use_backend(name):
    """Bind the module-level kernels to the named backend."""
    global _ACTIVE_NAME, fval, grad, conj_val, conj_grad, div, dual_average
    global linear_solve, mix2, mix3
    if name == "auto":
        name = "numba" if numba_available() else "numpy"
    if name == "numba":
        table = _numba_table()
    elif name == "numpy":
        table = _NUMPY_TABLE
    else:
        raise ValueError(f"unknown backend {name!r}; expected 'numba', 'numpy' or 'auto'")
    _ACTIVE_NAME = name
    fval = table["fval"]
    grad = table["grad"]
    conj_val = table["conj_val"]
    conj_grad = table["conj_grad"]
    div = table["div"]
    dual_average = table["dual_average"]
    linear_solve = table["linear_solve"]
    mix2 = table["mix2"]
    mix3 = table["mix3"]
    return name


def active_backend():
    return _ACTIVE_NAME


def warmup():
    """Trigger JIT compilation of every kernel (no-op on the numpy backend)."""
    x = np.array([0.5, 1.5])
    w = np.array([0.5, 0.5])
    pts = np.stack([x, x + 0.25])
    a = np.array([1.0, 1.0])
    for code, param in ((SQ_NORM, 0.0), (P_POWER, 4.0), (NEG_ENTROPY, 0.0)):
        fval(code, param, x)
        g = grad(code, param, x)
        conj_val(code, param, g)
        conj_grad(code, param, g)
        div(code, param, x, x + 0.25)
        dual_average(code, param, w, pts)
        linear_solve(code, param, g, a, 0.5, True)
        linear_solve(code, param, g, a, 0.5, False)
    mix2(0.5, x, 0.5, x)
    mix3(0.4, x, 0.3, x, 0.3, x)


use_backend(os.environ.get("BREGFIX_BACKEND", "auto"))
