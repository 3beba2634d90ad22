"""Empirical certification harness for the quantitative bounds.

Asymptotic O(.) statements are checked as trends: per-decade maxima of
the relevant ratio must not grow (ordinary least-squares slope of
log max against log x below a small threshold), across several seeds.
Exact statements (counting bound, convolution identity, tail inequality
boundary algebra) are asserted exactly or at machine-level tolerances.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .numsys import M_sum, _prefix_arrays, _prime_power_logs
from .quadrature import cumulative_osc_integral, osc_integral
from . import kernels

U0_BRACKET = (1.0, 3.0)
WILSON_Z99 = 2.3263478740408408  # one-sided 99% normal quantile
_KOLMOGOROV_STREAM = 0x6B6F6C6D


def envelope(x, t):
    """Deviation envelope sqrt(x) + sqrt(x log(|t|+1)/log(x+1))."""
    x = np.asarray(x, dtype=np.float64)
    return np.sqrt(x) + np.sqrt(x * math.log(abs(t) + 1.0) / np.log(x + 1.0))


# ---------------------------------------------------------------------------
# exponential sums and integrals
# ---------------------------------------------------------------------------

def exp_sum(ps, x, t):
    """S(x, t) = sum_{p <= x} p^{-it} (exact finite sum)."""
    if x > ps.x_max * (1.0 + 1e-12):
        raise ValueError(f"x = {x} beyond construction cutoff {ps.x_max}")
    idx = int(np.searchsorted(ps.primes, x, side="right"))
    if idx == 0:
        return 0.0 + 0.0j
    if t == 0.0:
        return complex(idx)
    return complex(np.exp(-1j * t * ps.log_primes()[:idx]).sum())


def _exp_sum_prefix(ps, t):
    """Cumulative sums of p^{-it} in prime order (index j = first j primes)."""
    phases = np.exp(-1j * t * ps.log_primes()) if t != 0.0 else \
        np.ones(ps.count, dtype=np.complex128)
    return np.concatenate([[0.0 + 0.0j], np.cumsum(phases)])


def exp_int(template, x, t, tol=1e-9):
    """S_c(x, t) = int_1^x u^{-it} dF(u): continuous part by
    oscillation-aware quadrature (after integration by parts, so only
    F_c evaluations are needed), atomic part as an exact finite sum."""
    if x < 1.0:
        raise ValueError("x must be >= 1")
    W = math.log(x)
    Fc = float(np.atleast_1d(template.continuous_eval(x))[0])
    pos, mass = template.atoms_between(1.0, x)
    if t == 0.0:
        return complex(Fc + mass.sum())
    def f(w):
        return np.atleast_1d(template.continuous_eval(np.exp(w)))
    integral = osc_integral(f, 0.0, W, t, tol=tol / (2.0 * abs(t)),
                            breakpoints=template.log_breakpoints(W))
    out = Fc * np.exp(-1j * t * W) + 1j * t * integral
    if pos.size:
        out = out + (mass * np.exp(-1j * t * np.log(pos))).sum()
    return complex(out)


def _exp_int_sweep(template, xs, t, tol=1e-6):
    """S_c at many sorted x for one t (cumulative-panel quadrature)."""
    xs = np.asarray(xs, dtype=np.float64)
    W = np.log(xs)
    Fc = np.atleast_1d(template.continuous_eval(xs))
    pos, mass = template.atoms_between(1.0, float(xs[-1]))
    if t == 0.0:
        disc = np.atleast_1d(template.discrete_eval(xs))
        return (Fc + disc).astype(np.complex128)
    def f(w):
        return np.atleast_1d(template.continuous_eval(np.exp(w)))
    integral = cumulative_osc_integral(
        f, W, t, tol=tol / (2.0 * abs(t)),
        breakpoints=template.log_breakpoints(float(W[-1])))
    out = Fc * np.exp(-1j * t * W) + 1j * t * integral
    if pos.size:
        atom_prefix = np.concatenate(
            [[0.0 + 0.0j], np.cumsum(mass * np.exp(-1j * t * np.log(pos)))])
        out = out + atom_prefix[np.searchsorted(pos, xs, side="right")]
    return out


# ---------------------------------------------------------------------------
# deviation sweep
# ---------------------------------------------------------------------------

@dataclass
class DeviationReport:
    """Per-(x, t) deviations against the envelope plus count deviation."""

    x: np.ndarray
    t: np.ndarray
    deviation: np.ndarray
    envelope: np.ndarray
    ratio: np.ndarray
    max_count_deviation: float
    seed: int = None
    summary: dict = field(default_factory=dict)

    def finalize(self):
        decades, maxima = decade_maxima(self.x, self.ratio)
        self.summary = {
            "max_ratio": float(self.ratio.max()) if self.ratio.size else 0.0,
            "decades": decades.tolist(),
            "decade_max_ratio": maxima.tolist(),
            "slope": log_log_slope(decades, maxima),
            "max_count_deviation": self.max_count_deviation,
            "seed": self.seed,
        }
        return self

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("x,t,deviation,envelope,ratio\n")
            for row in zip(self.x, self.t, self.deviation, self.envelope, self.ratio):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    def to_json(self, path=None):
        text = json.dumps(self.summary, sort_keys=True, indent=2)
        if path:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text


def decade_maxima(x, values):
    """Max of values per decade of x; returns (decade centers, maxima)."""
    d = np.floor(np.log10(x)).astype(int)
    uniq = np.unique(d)
    centers = 10.0 ** (uniq + 0.5)
    maxima = np.array([values[d == u].max() for u in uniq])
    return centers, maxima


def log_log_slope(x, y, floor=1e-300):
    """OLS slope of log y against log x."""
    x = np.asarray(x, dtype=np.float64)
    y = np.maximum(np.asarray(y, dtype=np.float64), floor)
    if x.size < 2:
        return 0.0
    lx, ly = np.log(x), np.log(y)
    lx = lx - lx.mean()
    return float((lx * ly).sum() / (lx * lx).sum())


def default_x_grid(ps, lo=10.0, hi=None, per_decade=32):
    """Log-spaced grid joined with every prime position in range."""
    hi = hi if hi is not None else ps.x_max
    n = max(2, int(round(per_decade * math.log10(hi / lo))) + 1)
    grid = np.geomspace(lo, hi, n)
    jumps = ps.primes[(ps.primes >= lo) & (ps.primes <= hi)]
    return np.unique(np.concatenate([grid, jumps]))


def deviation_sweep(ps, template, xs, ts, tol=1e-6):
    """|S - S_c| against the envelope on the (xs, ts) grid.

    At each x both one-sided values of S are compared (jump points are
    where the deviation is extremal); the count deviation sup|pi - F| is
    an exact scan over all discontinuities in range.
    """
    xs = np.unique(np.asarray(xs, dtype=np.float64))
    cols_x, cols_t, cols_dev, cols_env = [], [], [], []
    for t in ts:
        prefix = _exp_sum_prefix(ps, t)
        idx_r = np.searchsorted(ps.primes, xs, side="right")
        idx_l = np.searchsorted(ps.primes, xs, side="left")
        S_right = prefix[idx_r]
        S_left = prefix[idx_l]
        Sc_right = _exp_int_sweep(template, xs, t, tol)
        pos, mass = template.atoms_between(float(xs[0]), float(xs[-1]))
        atom_at = np.zeros(xs.size, dtype=np.complex128)
        if pos.size:
            hit = np.minimum(np.searchsorted(pos, xs), pos.size - 1)
            ok = pos[hit] == xs
            phase = np.exp(-1j * t * np.log(xs)) if t != 0.0 else 1.0
            atom_at = np.where(ok, mass[hit] * phase, 0.0)
        Sc_left = Sc_right - atom_at
        dev = np.maximum(np.abs(S_right - Sc_right), np.abs(S_left - Sc_left))
        env = envelope(xs, t)
        cols_x.append(xs)
        cols_t.append(np.full(xs.size, t))
        cols_dev.append(dev)
        cols_env.append(env)
    x_all = np.concatenate(cols_x)
    dev_all = np.concatenate(cols_dev)
    env_all = np.concatenate(cols_env)
    report = DeviationReport(
        x=x_all,
        t=np.concatenate(cols_t),
        deviation=dev_all,
        envelope=env_all,
        ratio=dev_all / env_all,
        max_count_deviation=count_deviation(ps, template, float(xs[0]), float(xs[-1])),
        seed=ps.seed,
    )
    return report.finalize()


def count_deviation(ps, template, lo=1.0, hi=None):
    """Exact sup of |pi(x) - F(x)| over [lo, hi]: evaluated from both
    sides at every discontinuity of pi or F (the sup is attained there
    since F is non-decreasing and pi is flat in between)."""
    hi = hi if hi is not None else ps.x_max
    pos, mass = template.atoms_between(lo, hi)
    cand = np.unique(np.concatenate(
        [ps.primes[(ps.primes >= lo) & (ps.primes <= hi)], pos, [lo, hi]]))
    Fc = np.atleast_1d(template.continuous_eval(cand))
    Fd = np.atleast_1d(template.discrete_eval(cand))
    mass_at = np.zeros(cand.size)
    if pos.size:
        hit = np.searchsorted(pos, cand)
        ok = (hit < pos.size) & (pos[np.minimum(hit, pos.size - 1)] == cand)
        mass_at = np.where(ok, mass[np.minimum(hit, pos.size - 1)], 0.0)
    F_right = Fc + Fd
    F_left = F_right - mass_at
    pi_right = np.searchsorted(ps.primes, cand, side="right")
    pi_left = np.searchsorted(ps.primes, cand, side="left")
    dev = np.maximum(np.abs(pi_right - F_right), np.abs(pi_left - F_left))
    return float(dev.max())


# ---------------------------------------------------------------------------
# tail-inequality machinery
# ---------------------------------------------------------------------------

def solve_u0(tol=1e-12):
    """Positive root of e^u = 1 + u + u^2 by safeguarded Newton on [1, 3]."""
    lo, hi = U0_BRACKET
    u = 2.0
    for _ in range(200):
        g = math.exp(u) - 1.0 - u - u * u
        if abs(g) <= tol * 0.1:
            break
        if g > 0.0:
            hi = u
        else:
            lo = u
        gp = math.exp(u) - 1.0 - 2.0 * u
        un = u - g / gp if gp != 0.0 else 0.5 * (lo + hi)
        if not (lo < un < hi):
            un = 0.5 * (lo + hi)
        u = un
    return u


def tail_bound(sigma2, v, u0=None):
    """Two-regime bound on P(S >= v): exp(-v^2/(4 sigma^2)) up to the
    regime split v = u0 sigma^2, exp(-u0 v / 4) beyond it."""
    u0 = u0 if u0 is not None else solve_u0()
    if v <= u0 * sigma2:
        return math.exp(-v * v / (4.0 * sigma2))
    return math.exp(-u0 * v / 4.0)


def wilson_lower(k, n, z=WILSON_Z99):
    """One-sided Wilson lower confidence bound for a binomial proportion."""
    if n == 0:
        return 0.0
    p = k / n
    denom = 1.0 + z * z / n
    center = p + z * z / (2.0 * n)
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n))
    return max(0.0, (center - half) / denom)


class RademacherSampler:
    """J independent signs times `scale` (|X_j| = scale <= 2, var = scale^2);
    the sum is sampled directly through a binomial draw."""

    def __init__(self, J, scale=1.0):
        if not (0.0 < scale <= 2.0):
            raise ValueError("scale must lie in (0, 2] to satisfy |X| <= 2")
        self.J = int(J)
        self.scale = float(scale)

    @property
    def sigma2(self):
        return self.J * self.scale ** 2

    @property
    def max_abs(self):
        return self.scale

    def sample_sums(self, rng, trials):
        heads = rng.binomial(self.J, 0.5, size=trials)
        return self.scale * (2.0 * heads - self.J)

    def sample_matrix(self, rng, trials):
        return self.scale * (2.0 * rng.integers(0, 2, size=(trials, self.J)) - 1.0)


class UniformSampler:
    """J independent U[-h, h] variables (var = h^2/3 each)."""

    def __init__(self, J, half_width=1.0):
        if not (0.0 < half_width <= 2.0):
            raise ValueError("half_width must lie in (0, 2]")
        self.J = int(J)
        self.half_width = float(half_width)

    @property
    def sigma2(self):
        return self.J * self.half_width ** 2 / 3.0

    @property
    def max_abs(self):
        return self.half_width

    def sample_sums(self, rng, trials, chunk=2 ** 22):
        out = np.empty(trials)
        done = 0
        per = max(1, chunk // max(self.J, 1))
        while done < trials:
            take = min(per, trials - done)
            block = rng.uniform(-self.half_width, self.half_width,
                                size=(take, self.J))
            out[done:done + take] = block.sum(axis=1)
            done += take
        return out

    def sample_matrix(self, rng, trials):
        return rng.uniform(-self.half_width, self.half_width,
                           size=(trials, self.J))


def kolmogorov_check(sigma2, v, sampler, trials, seed):
    """Monte-Carlo check of the two-regime tail bound.

    PASS when the empirical tail frequency minus its one-sided 99% Wilson
    radius stays below the bound (the bound limits the true probability;
    sampling noise must not flag false failures).
    """
    if sampler.max_abs > 2.0 + 1e-12:
        raise ValueError("sampler model violates |X_j| <= 2")
    if not math.isclose(sampler.sigma2, sigma2, rel_tol=1e-9):
        raise ValueError(f"sampler variance {sampler.sigma2} != sigma2 {sigma2}")
    probe = sampler.sample_matrix(
        np.random.Generator(np.random.Philox(key=np.array([seed, 1], dtype=np.uint64))), 64)
    if np.abs(probe).max() > 2.0 + 1e-12:
        raise ValueError("sampler draws violate |X_j| <= 2")
    rng = np.random.Generator(np.random.Philox(
        key=np.array([seed & ((1 << 64) - 1), _KOLMOGOROV_STREAM], dtype=np.uint64)))
    sums = sampler.sample_sums(rng, trials)
    k = int(np.count_nonzero(sums >= v))
    empirical = k / trials
    radius = empirical - wilson_lower(k, trials)
    u0 = solve_u0()
    bound = tail_bound(sigma2, v, u0)
    return {
        "sigma2": sigma2,
        "v": v,
        "trials": trials,
        "empirical": empirical,
        "radius": radius,
        "bound": bound,
        "regime": "quadratic" if v <= u0 * sigma2 else "linear",
        "passed": bool(empirical - radius <= bound),
    }


# ---------------------------------------------------------------------------
# gap and identity checks
# ---------------------------------------------------------------------------

def pi_Li_gap_check(ps, x_lo=16.0, x_hi=None, slope_threshold=0.05):
    """Ratio |Pi(x) - Li(x)| / log log x per decade, with the no-growth
    slope criterion; evaluated at prime powers (both sides) and a decade
    grid."""
    x_hi = x_hi if x_hi is not None else ps.x_max
    logs, weights = _prime_power_logs(ps)
    prefix = np.concatenate([[0.0], np.cumsum(weights)])
    Li_coeffs, _ = kernels.series_arrays(False)

    grid = np.geomspace(x_lo, x_hi, 128)
    jumps = np.exp(logs[(logs >= math.log(x_lo)) & (logs <= math.log(x_hi))])
    xs = np.unique(np.concatenate([grid, jumps]))
    w = np.log(xs)
    Li = kernels.poly_eval(w, Li_coeffs)
    Pi_right = prefix[np.searchsorted(logs, w * (1.0 + 1e-15), side="right")]
    Pi_left = prefix[np.searchsorted(logs, w * (1.0 - 1e-15), side="left")]
    loglog = np.log(w)
    r = np.maximum(np.abs(Pi_right - Li), np.abs(Pi_left - Li)) / loglog
    decades, maxima = decade_maxima(xs, r)
    slope = log_log_slope(decades, maxima)
    return {
        "seed": ps.seed,
        "max_ratio": float(r.max()),
        "decades": decades.tolist(),
        "decade_max_ratio": maxima.tolist(),
        "slope": slope,
        "passed": bool(slope <= slope_threshold),
    }


def mertens_identity_check(ps, x):
    """Assert sum_{n_k <= x} M(x / n_k) == 1 exactly."""
    values, _, _ = _prefix_arrays(ps, x)
    values = values[values <= x]
    total = sum(M_sum(ps, x / v) for v in values)
    return total == 1


def pool_reports(reports, slope_threshold=0.05):
    """Combine per-seed decade maxima (max across seeds) and re-fit the
    trend slope; PASS iff the pooled slope stays below the threshold."""
    decades = sorted({d for r in reports for d in r["decades"]})
    pooled = []
    for d in decades:
        vals = [r["decade_max_ratio"][r["decades"].index(d)]
                for r in reports if d in r["decades"]]
        pooled.append(max(vals))
    slope = log_log_slope(np.asarray(decades), np.asarray(pooled))
    return {
        "decades": decades,
        "pooled_decade_max": pooled,
        "slope": slope,
        "max_ratio": max(r["max_ratio"] for r in reports),
        "per_seed_slopes": [r["slope"] for r in reports],
        "passed": bool(slope <= slope_threshold),
    }
