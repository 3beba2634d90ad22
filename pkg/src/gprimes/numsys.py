"""Analytics over a PrimeSystem: the generated integers, counting
functions, Moebius/Liouville summatories, and zeta evaluations.

The generalized integers are the free commutative semigroup on the prime
multiset; they are enumerated in non-decreasing value order by a min-heap
of (value, factor-index tuple) pairs, expanding each popped element only
by primes at or above its own largest index so every factor multiset
appears exactly once.  Ties in floating value are broken by the factor
tuple, which keeps runs reproducible when distinct factorizations
collide numerically.
"""

import heapq
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .quadrature import osc_integral


@dataclass(frozen=True)
class GenInteger:
    """One semigroup element.

    omega counts prime factors with multiplicity; log_value accumulates
    log-primes alongside the floating product (within 1e-12 relative of
    each other for desk-scale systems).
    """

    value: float
    omega: int
    squarefree: bool
    log_value: float = 0.0

    @property
    def mu(self):
        return 0 if not self.squarefree else (-1 if self.omega % 2 else 1)

    @property
    def lam(self):
        return -1 if self.omega % 2 else 1


@dataclass(frozen=True)
class ZetaValue:
    """A truncated zeta evaluation with its truncation tail bound."""

    s: complex
    value: complex
    truncation: float
    tail_bound: float


def _check_range(ps, x):
    if x > ps.x_max * (1.0 + 1e-12):
        raise ValueError(f"x = {x} beyond construction cutoff {ps.x_max}")


def pi_count(ps, x):
    """Number of generalized primes <= x (binary search)."""
    _check_range(ps, x)
    return int(np.searchsorted(ps.primes, x, side="right"))


def riemann_pi(ps, x):
    """Weighted prime-power count sum_nu pi(x^(1/nu))/nu."""
    _check_range(ps, x)
    if ps.count == 0 or x < ps.primes[0]:
        return 0.0
    nu_max = int(math.floor(math.log(x) / math.log(ps.primes[0]) + 1e-12))
    total = 0.0
    for nu in range(1, nu_max + 1):
        c = int(np.searchsorted(ps.primes, x ** (1.0 / nu), side="right"))
        if c == 0:
            break
        total += c / nu
    return total


def generate_integers(ps, x):
    """Yield every semigroup element with value <= x, non-decreasing.

    Distinct factorizations are distinct elements even when their float
    values coincide.  Memory is proportional to the number of elements
    still on the heap frontier.
    """
    _check_range(ps, x)
    if x < 1.0:
        return
    primes = ps.primes
    logs = ps.log_primes()
    n = primes.size
    heap = [(1.0, (), 0.0)]
    while heap:
        value, factors, logv = heapq.heappop(heap)
        yield GenInteger(value=value, omega=len(factors),
                         squarefree=_squarefree(factors), log_value=logv)
        start = factors[-1] if factors else 0
        for k in range(start, n):
            v2 = value * primes[k]
            if v2 > x:
                break
            heapq.heappush(heap, (v2, factors + (k,), logv + logs[k]))


def _squarefree(factors):
    return all(a != b for a, b in zip(factors, factors[1:]))


# ---------------------------------------------------------------------------
# counting folds with a per-decade prefix cache
# ---------------------------------------------------------------------------

def _prefix_arrays(ps, x):
    """(values, cum_mu, cum_lam) for all elements up to the decade ceiling
    of x (clamped at x_max); cached on the PrimeSystem."""
    cutoff = 10.0 ** math.ceil(math.log10(x)) if x > 1.0 else 1.0
    cutoff = min(max(cutoff, 1.0), ps.x_max)
    cutoff = max(cutoff, x)  # x may sit between the last decade and x_max
    key = ("prefix", cutoff)
    hit = ps.cache.get(key)
    if hit is None:
        values, mus, lams = [], [], []
        for g in generate_integers(ps, cutoff):
            values.append(g.value)
            mus.append(g.mu)
            lams.append(g.lam)
        values = np.asarray(values)
        cum_mu = np.concatenate([[0], np.cumsum(np.asarray(mus, dtype=np.int64))])
        cum_lam = np.concatenate([[0], np.cumsum(np.asarray(lams, dtype=np.int64))])
        hit = (values, cum_mu, cum_lam)
        ps.cache[key] = hit
    return hit


def N_count(ps, x):
    """Number of generalized integers <= x (the empty product included)."""
    _check_range(ps, x)
    if x < 1.0:
        return 0
    values, _, _ = _prefix_arrays(ps, x)
    return int(np.searchsorted(values, x, side="right"))


def M_sum(ps, x):
    """Moebius summatory: sum of mu over integers <= x (exact integer)."""
    _check_range(ps, x)
    if x < 1.0:
        return 0
    values, cum_mu, _ = _prefix_arrays(ps, x)
    return int(cum_mu[np.searchsorted(values, x, side="right")])


def L_sum(ps, x):
    """Liouville summatory: sum of (-1)^omega over integers <= x."""
    _check_range(ps, x)
    if x < 1.0:
        return 0
    values, _, cum_lam = _prefix_arrays(ps, x)
    return int(cum_lam[np.searchsorted(values, x, side="right")])


def density_estimate(ps, decades=None):
    """N(x)/x over decade points and the drift between successive decades
    (there is no finite-x density; this reports the trend instead)."""
    top = math.floor(math.log10(ps.x_max))
    decades = decades or [10.0 ** d for d in range(1, top + 1)]
    rows = [(x, N_count(ps, x) / x) for x in decades]
    drift = [rows[i + 1][1] - rows[i][1] for i in range(len(rows) - 1)]
    return {"points": rows, "drift": drift}


# ---------------------------------------------------------------------------
# zeta evaluations
# ---------------------------------------------------------------------------

def _self_chebyshev(ps):
    """Certified constant with pi(x) <= C x/log(x+1) on (1, x_max]:
    sup of j log(p_j+1)/p_j over jumps (log(1+x)/x is decreasing)."""
    C = ps.cache.get("self_chebyshev")
    if C is None:
        j = np.arange(1, ps.count + 1)
        C = float((j * np.log(ps.primes + 1.0) / ps.primes).max()) if ps.count else 1.0
        ps.cache["self_chebyshev"] = C
    return C


def zeta_euler(ps, s, chebyshev_C=None):
    """Truncated Euler product prod_{p <= x_max} (1 - p^-s)^-1.

    The tail bound covers the primes > x_max of an ideal continuation
    obeying the Chebyshev certificate (the system's own certified
    constant unless one is supplied); infinite for Re s <= 1.
    """
    s = complex(s)
    sigma = s.real
    logp = ps.log_primes()
    log_factors = -np.log1p(-np.exp(-s * logp))
    value = complex(np.exp(log_factors.sum())) if ps.count else 1.0 + 0.0j
    X = ps.x_max
    if sigma > 1.0:
        C = chebyshev_C if chebyshev_C is not None else _self_chebyshev(ps)
        prime_tail = (sigma * C / ((sigma - 1.0) * math.log(X + 1.0))) \
            * X ** (1.0 - sigma) + 2.0 * X ** (-sigma)
        log_tail = prime_tail / (1.0 - X ** (-sigma))
        tail = abs(value) * (math.exp(log_tail) - 1.0)
    else:
        tail = math.inf
    return ZetaValue(s=s, value=value, truncation=X, tail_bound=tail)


def zeta_dirichlet(ps, s):
    """Truncated Dirichlet series sum_{n_k <= x_max} n_k^-s.

    Tail bound via Rankin's device at sigma' = (1+sigma)/2: the omitted
    smooth integers beyond x_max contribute at most
    x_max^((1-sigma)/2) * zeta_euler(sigma'); infinite for Re s <= 1.
    """
    s = complex(s)
    sigma = s.real
    values, _, _ = _prefix_arrays(ps, ps.x_max)
    value = complex(np.exp(-s * np.log(values)).sum())
    X = ps.x_max
    if sigma > 1.0:
        s_prime = 0.5 * (1.0 + sigma)
        full = abs(zeta_euler(ps, s_prime).value)
        tail = X ** (0.5 * (1.0 - sigma)) * full
    else:
        tail = math.inf
    return ZetaValue(s=s, value=value, truncation=X, tail_bound=tail)


def _prime_power_logs(ps):
    """(log positions, 1/nu weights) of all prime powers <= x_max."""
    hit = ps.cache.get("power_logs")
    if hit is None:
        logp = ps.log_primes()
        log_X = math.log(ps.x_max)
        pieces, weights = [], []
        nu = 1
        while ps.count and nu * logp[0] <= log_X:
            idx = np.searchsorted(logp, log_X / nu, side="right")
            if idx == 0:
                break
            pieces.append(nu * logp[:idx])
            weights.append(np.full(idx, 1.0 / nu))
            nu += 1
        if pieces:
            logs_all = np.concatenate(pieces)
            weights_all = np.concatenate(weights)
            order = np.argsort(logs_all, kind="stable")
            hit = (logs_all[order], weights_all[order])
        else:
            hit = (np.empty(0), np.empty(0))
        ps.cache["power_logs"] = hit
    return hit


@dataclass(frozen=True)
class ZReport:
    s: complex
    value: complex
    truncation: float
    tail_estimate: float


def _li_integrand(sigma):
    """w -> e^((1-sigma) w) (1 - e^-w)/w, extended by 1 at w = 0."""
    def f(w):
        w = np.asarray(w, dtype=np.float64)
        small = w < 1e-8
        safe = np.where(small, 1.0, w)
        ratio = np.where(small, 1.0 - 0.5 * w, -np.expm1(-safe) / safe)
        return np.exp((1.0 - sigma) * w) * ratio
    return f


def Z_eval_report(ps, s, template=None, tol=1e-9):
    """log zeta - log(s/(s-1)) through the truncated Stieltjes integral
    of the weighted prime count against the normalized log-integral:
    exact jump sum over prime powers minus analytic quadrature of the
    smooth part, both cut at x_max."""
    s = complex(s)
    if s.real <= 0.5:
        raise ValueError("Z is evaluated for Re s > 1/2 only")
    logs, weights = _prime_power_logs(ps)
    jump_sum = complex((weights * np.exp(-s * logs)).sum()) if logs.size else 0.0j
    W = math.log(ps.x_max)
    integral = osc_integral(_li_integrand(s.real), 0.0, W, s.imag, tol)
    value = jump_sum - integral
    X = ps.x_max
    gap = abs(riemann_pi(ps, X) - kernels.poly_eval(W, kernels.series_arrays(False)[0]))
    tail = X ** (-s.real) * gap * (1.0 + abs(s) / s.real)
    return ZReport(s=s, value=value, truncation=X, tail_estimate=float(tail))


def Z_eval(ps, s, template=None, tol=1e-9):
    """Value of the report variant (see Z_eval_report)."""
    return Z_eval_report(ps, s, template=template, tol=tol).value
