"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The backend is selected once at import time from the ``GPRIMES_NUMBA``
environment variable: ``0``/``off`` forces the numpy path, ``1``/``on``
requires numba, anything else auto-detects.  Both paths perform the exact
same per-element IEEE operation sequence (only +, -, *, / inside the
loops), so results are byte-identical regardless of backend.  Calls of
transcendental functions (exp, log, sin, ...) are kept outside these
kernels for the same reason.
"""

import math
import os
from functools import lru_cache

import numpy as np

try:
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    njit = prange = None
    HAVE_NUMBA = False


def _backend_from_env() -> bool:
    flag = os.environ.get("GPRIMES_NUMBA", "auto").strip().lower()
    if flag in ("0", "off", "no", "false"):
        return False
    if flag in ("1", "on", "yes", "true"):
        if not HAVE_NUMBA:
            raise ImportError("GPRIMES_NUMBA=1 but numba is not importable")
        return True
    return HAVE_NUMBA


USING_NUMBA = _backend_from_env()


# ---------------------------------------------------------------------------
# polynomial evaluation (Horner), ascending-power coefficient array
# ---------------------------------------------------------------------------

def poly_eval_np(w, coeffs):
    """Evaluate sum_n coeffs[n] * w**n by Horner's rule (numpy path)."""
    w = np.asarray(w, dtype=np.float64)
    acc = np.full_like(w, coeffs[-1])
    for n in range(coeffs.size - 2, -1, -1):
        acc = acc * w + coeffs[n]
    return acc


if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _poly_eval_nb(w, coeffs):
        out = np.empty_like(w)
        for i in prange(w.size):
            acc = coeffs[coeffs.size - 1]
            for n in range(coeffs.size - 2, -1, -1):
                acc = acc * w[i] + coeffs[n]
            out[i] = acc
        return out

    def poly_eval_nb(w, coeffs):
        w = np.ascontiguousarray(np.atleast_1d(np.asarray(w, dtype=np.float64)))
        return _poly_eval_nb(w, np.ascontiguousarray(coeffs))

else:  # pragma: no cover
    poly_eval_nb = None


# ---------------------------------------------------------------------------
# inverse of an increasing polynomial via bracketed Newton
# ---------------------------------------------------------------------------

def poly_inverse_newton_np(targets, coeffs, dcoeffs, lo, hi,
                           ftol=1e-13, maxit=200):
    """Solve poly(w) = m for each m in `targets` on the bracket [lo, hi].

    poly must be strictly increasing on the bracket with poly(lo) <= min m
    and poly(hi) >= max m.  Newton steps are projected back into the
    per-element bracket (bisection fallback), so convergence is guaranteed.
    """
    m = np.asarray(targets, dtype=np.float64)
    n = m.size
    w = np.full(n, 0.5 * (lo + hi))
    lo_a = np.full(n, lo)
    hi_a = np.full(n, hi)
    active = np.ones(n, dtype=bool)
    for _ in range(maxit):
        f = poly_eval_np(w, coeffs) - m
        conv = np.abs(f) <= ftol * (1.0 + np.abs(m))
        active &= ~conv
        if not active.any():
            break
        pos = f > 0.0
        hi_a = np.where(active & pos, w, hi_a)
        lo_a = np.where(active & ~pos, w, lo_a)
        fp = poly_eval_np(w, dcoeffs)
        with np.errstate(divide="ignore", invalid="ignore"):
            wn = w - f / fp
        bad = ~((wn > lo_a) & (wn < hi_a))
        wn = np.where(bad, 0.5 * (lo_a + hi_a), wn)
        w = np.where(active, wn, w)
    return w


if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _poly_inverse_newton_nb(targets, coeffs, dcoeffs, lo, hi,
                                ftol, maxit):
        out = np.empty_like(targets)
        nc = coeffs.size
        for i in prange(targets.size):
            m = targets[i]
            lo_i = lo
            hi_i = hi
            w = 0.5 * (lo + hi)
            for _ in range(maxit):
                acc = coeffs[nc - 1]
                for n in range(nc - 2, -1, -1):
                    acc = acc * w + coeffs[n]
                f = acc - m
                if abs(f) <= ftol * (1.0 + abs(m)):
                    break
                if f > 0.0:
                    hi_i = w
                else:
                    lo_i = w
                fp = dcoeffs[nc - 2]
                for n in range(nc - 3, -1, -1):
                    fp = fp * w + dcoeffs[n]
                wn = w - f / fp
                if not (wn > lo_i and wn < hi_i):
                    wn = 0.5 * (lo_i + hi_i)
                w = wn
            out[i] = w
        return out

    def poly_inverse_newton_nb(targets, coeffs, dcoeffs, lo, hi,
                               ftol=1e-13, maxit=200):
        t = np.ascontiguousarray(np.atleast_1d(np.asarray(targets, dtype=np.float64)))
        return _poly_inverse_newton_nb(
            t, np.ascontiguousarray(coeffs), np.ascontiguousarray(dcoeffs),
            float(lo), float(hi), float(ftol), int(maxit),
        )

else:  # pragma: no cover
    poly_inverse_newton_nb = None


def poly_eval(w, coeffs):
    """Backend-dispatching Horner evaluation; scalar in -> scalar out."""
    scalar = np.isscalar(w) or np.ndim(w) == 0
    arr = np.atleast_1d(np.asarray(w, dtype=np.float64))
    fn = poly_eval_nb if USING_NUMBA else poly_eval_np
    out = fn(arr, coeffs)
    return float(out[0]) if scalar else out


def poly_inverse_newton(targets, coeffs, dcoeffs, lo, hi, **kw):
    scalar = np.isscalar(targets) or np.ndim(targets) == 0
    arr = np.atleast_1d(np.asarray(targets, dtype=np.float64))
    fn = poly_inverse_newton_nb if USING_NUMBA else poly_inverse_newton_np
    out = fn(arr, coeffs, dcoeffs, lo, hi, **kw)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Riemann zeta at integer arguments (Euler-Maclaurin tail), cached
# ---------------------------------------------------------------------------

# (Bernoulli number B_{2j}, (2j)!) pairs for the tail correction
_EM_BERNOULLI = (
    (1.0 / 6.0, 2),
    (-1.0 / 30.0, 24),
    (1.0 / 42.0, 720),
    (-1.0 / 30.0, 40320),
    (5.0 / 66.0, 3628800),
)


@lru_cache(maxsize=None)
def zeta_int(s: int) -> float:
    """zeta(s) for integer s >= 2, accurate to better than 1e-13.

    Direct sum to K plus Euler-Maclaurin correction; for large s the
    direct sum alone is already at machine precision.
    """
    if s < 2:
        raise ValueError("zeta_int requires s >= 2")
    if s > 60:
        # 2^-s < 9e-19: only the leading terms matter
        return 1.0 + 2.0 ** (-s) + 3.0 ** (-s)
    K = 16
    total = sum(k ** (-float(s)) for k in range(1, K))
    total += K ** (1.0 - s) / (s - 1.0)
    total += 0.5 * K ** (-float(s))
    rising = 1.0
    for j, (b2j, fact2j) in enumerate(_EM_BERNOULLI, start=1):
        # rising factorial s (s+1) ... (s+2j-2)
        hi = s + 2 * j - 2
        lo = s + 2 * j - 4 + 1
        for f in range(max(lo, s), hi + 1):
            rising *= f
        total += b2j / fact2j * rising * K ** (-float(s + 2 * j - 1))
    return total


# ---------------------------------------------------------------------------
# power-series coefficients for the logarithmic-integral family
# ---------------------------------------------------------------------------

# One fixed table length keeps every evaluation byte-identical no matter
# where the template was built; 168 terms hold machine precision for
# log x up to ~60 and the trailing coefficients underflow harmlessly.
SERIES_TERMS = 168


@lru_cache(maxsize=None)
def gram_coefficients(weighted: bool) -> tuple:
    """Ascending-power coefficients a[0..SERIES_TERMS] of the series

        sum_{n>=1} w^n / (n! n zeta(n+1))   (weighted=True)
        sum_{n>=1} w^n / (n! n)             (weighted=False)

    a[0] = 0.  Returned as a tuple for hashability; call sites wrap in
    np.array once and reuse.
    """
    a = [0.0]
    for n in range(1, SERIES_TERMS + 1):
        c = 1.0 / (math.factorial(n) * n)
        if weighted:
            c /= zeta_int(n + 1)
        a.append(c)
    return tuple(a)


def series_arrays(weighted: bool):
    """(coeffs, dcoeffs) numpy arrays for the gram-type series."""
    a = np.array(gram_coefficients(weighted))
    da = np.arange(1, len(a)) * a[1:]
    return a, da
