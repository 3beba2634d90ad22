"""Prime-density templates: evaluation, quantiles, atoms, JSON loading.

A template is a non-decreasing right-continuous mass function F on
[1, oo) with F(1) = 0, split into a continuous part F_c and an atomic
part F_d.  Shipped continuous templates: the gram-type series

    liN(x) = sum_{n>=1} (log x)^n / (n! n zeta(n+1))
    LiN(x) = sum_{n>=1} (log x)^n / (n! n) = int_1^x (1 - 1/u)/log u du

plus F(x) = log x, and oscillating variants that add sine blocks on
disjoint log-scale intervals.  Atomic templates carry explicit (position,
mass) lists or a grid rule condensing a continuous template onto a
prescribed point sequence.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels


class TemplateError(ValueError):
    """Inconsistent template definition or parameters."""


def _vec_out(x, out):
    return float(out[0]) if (np.isscalar(x) or np.ndim(x) == 0) else out


# ---------------------------------------------------------------------------
# series evaluators (module-level ops)
# ---------------------------------------------------------------------------

def li_eval(x, tol=1e-12):
    """Gram-type series sum_{n>=1} (log x)^n/(n! n zeta(n+1)).

    Truncates when the current term drops below tol*(1 + partial sum);
    zeta values come from the internal Euler-Maclaurin evaluator.
    """
    if x < 1.0:
        raise ValueError(f"li is defined for x >= 1, got {x}")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    w = math.log(x)
    if w == 0.0:
        return 0.0
    total = 0.0
    wn = 1.0
    for n in range(1, 400):
        wn *= w / n
        term = wn / (n * kernels.zeta_int(n + 1))
        total += term
        if n > w and term < tol * (1.0 + total):
            break
    return total


def Li_eval(x, tol=1e-12):
    """Normalized logarithmic integral int_1^x (1 - 1/u)/log u du.

    Computed through the everywhere-convergent series sum (log x)^n/(n! n)
    (the integrand extends continuously by 1 at u = 1); the truncated tail
    is below tol in absolute value.
    """
    if x < 1.0:
        raise ValueError(f"Li is defined for x >= 1, got {x}")
    w = math.log(x)
    if w == 0.0:
        return 0.0
    total = 0.0
    wn = 1.0
    for n in range(1, 400):
        wn *= w / n
        term = wn / n
        total += term
        if n > 2.0 * w and term < 0.5 * tol:
            break
    return total


def _mobius(n: int) -> int:
    if n == 1:
        return 1
    m, sign = n, 1
    p = 2
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return 0
            sign = -sign
        p += 1
    if m > 1:
        sign = -sign
    return sign


# ---------------------------------------------------------------------------
# template base class
# ---------------------------------------------------------------------------

class Template:
    """Base template: continuous part zero, no atoms.  Subclasses override
    the pieces they provide; all evaluation methods accept scalars or
    numpy arrays and are pure (safe for concurrent use)."""

    template_id = "empty"

    def __init__(self):
        self._chebyshev = {}  # x_max -> certified constant

    # -- continuous branch --------------------------------------------------
    @property
    def total_continuous_mass(self):
        return 0.0

    def continuous_eval(self, x):
        x = np.asarray(x, dtype=np.float64)
        return _vec_out(x, np.zeros(np.atleast_1d(x).shape))

    def continuous_quantile(self, m):
        """min{x : F_c(x) >= m}; default bracketed bisection on
        continuous_eval (200 iterations, 1e-12 relative interval)."""
        return float(self.continuous_quantile_vec(np.array([m]))[0])

    def continuous_quantile_vec(self, m):
        m = np.asarray(m, dtype=np.float64)
        if m.size and self.total_continuous_mass == 0.0:
            raise TemplateError(f"{self.template_id}: no continuous mass to invert")
        if np.any(m > self.total_continuous_mass):
            raise TemplateError("quantile target exceeds total continuous mass")
        return _bisect_quantile(self.continuous_eval, m)

    # -- discrete branch ----------------------------------------------------
    @property
    def total_discrete_mass(self):
        return 0.0

    def discrete_eval(self, x):
        x = np.asarray(x, dtype=np.float64)
        return _vec_out(x, np.zeros(np.atleast_1d(x).shape))

    def atoms_between(self, lo, hi, eps_mass=1e-9):
        """(positions, masses) of atoms with lo < y <= hi, ascending.

        Enumeration inside the interval stops once the remaining interval
        mass falls below eps_mass (relevant for rule-generated atom sets)."""
        return np.empty(0), np.empty(0)

    def atom_mass_at(self, y):
        lo = np.nextafter(y, 1.0) if y > 1.0 else 1.0
        pos, mass = self.atoms_between(lo, y)
        return float(mass.sum())

    # -- combined -----------------------------------------------------------
    def eval(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = np.atleast_1d(self.continuous_eval(x)) + np.atleast_1d(self.discrete_eval(x))
        return _vec_out(x, out)

    def log_breakpoints(self, w_hi):
        """Smoothness breakpoints of F_c in log coordinates (quadrature)."""
        return ()

    def chebyshev_C(self, x_max, n_grid=512):
        """Certified constant C with F(x) <= C x/log(x+1) on (1, x_max].

        Scanned on a log grid (atoms included); the grid-step factor makes
        the scan an upper bound for the whole range, not just the nodes.
        """
        key = float(x_max)
        if key not in self._chebyshev:
            step = key ** (1.0 / n_grid)
            xs = np.geomspace(step, key, n_grid)
            pos, _ = self.atoms_between(1.0, key)
            if pos.size:
                xs = np.unique(np.concatenate([xs, pos]))
            F = np.atleast_1d(self.eval(xs))
            ratio = F * np.log(xs + 1.0) / xs
            self._chebyshev[key] = float(ratio.max() * step)
        return self._chebyshev[key]

    def to_doc(self):
        raise NotImplementedError


def _bisect_quantile(f_eval, targets, max_iter=200, rel_tol=1e-12):
    """Generalized inverse by bracketed bisection, vectorized over targets."""
    targets = np.asarray(targets, dtype=np.float64)
    hi = np.full(targets.shape, 2.0)
    for _ in range(200):
        short = np.atleast_1d(f_eval(hi)) < targets
        if not short.any():
            break
        hi = np.where(short, hi * hi, hi)
    lo = np.ones_like(hi)
    for _ in range(max_iter):
        mid = np.sqrt(lo * hi)
        below = np.atleast_1d(f_eval(mid)) < targets
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= rel_tol * hi):
            break
    return hi


# ---------------------------------------------------------------------------
# gram-type series templates (liN / LiN) and the log template
# ---------------------------------------------------------------------------

class GramSeriesTemplate(Template):
    """F_c(x) = sum c_n (log x)^n with positive coefficients; covers the
    liN (weighted by 1/zeta(n+1)) and LiN (unweighted) templates."""

    def __init__(self, weighted, template_id):
        super().__init__()
        self.weighted = weighted
        self.template_id = template_id
        self._a, self._da = kernels.series_arrays(weighted)

    @property
    def total_continuous_mass(self):
        return math.inf

    def continuous_eval(self, x):
        x = np.asarray(x, dtype=np.float64)
        arr = np.atleast_1d(x)
        if np.any(arr < 1.0):
            raise ValueError("template domain is x >= 1")
        return _vec_out(x, kernels.poly_eval(np.log(arr), self._a))

    def continuous_quantile_vec(self, m):
        m = np.atleast_1d(np.asarray(m, dtype=np.float64))
        if np.any(m < 0.0):
            raise TemplateError("quantile target must be nonnegative")
        if m.size == 0:
            return m.copy()
        w_hi = 2.0
        while kernels.poly_eval(np.array([w_hi]), self._a)[0] < m.max():
            w_hi *= 1.5
            if w_hi > 700.0:
                raise TemplateError("quantile target out of range")
        w = kernels.poly_inverse_newton(m, self._a, self._da, 0.0, w_hi)
        w[m == 0.0] = 0.0  # min{x : F(x) = 0} is the left edge exactly
        return np.exp(w)

    def to_doc(self):
        return {"kind": self.template_id}


def li_template():
    return GramSeriesTemplate(True, "li")


def Li_template():
    return GramSeriesTemplate(False, "Li")


class LogTemplate(Template):
    """F_c(x) = log x (closed-form quantile exp(m))."""

    template_id = "log"

    @property
    def total_continuous_mass(self):
        return math.inf

    def continuous_eval(self, x):
        x = np.asarray(x, dtype=np.float64)
        arr = np.atleast_1d(x)
        if np.any(arr < 1.0):
            raise ValueError("template domain is x >= 1")
        return _vec_out(x, np.log(arr))

    def continuous_quantile_vec(self, m):
        m = np.atleast_1d(np.asarray(m, dtype=np.float64))
        if np.any(m < 0.0):
            raise TemplateError("quantile target must be nonnegative")
        return np.exp(m)

    def to_doc(self):
        return {"kind": "log"}


def log_template():
    return LogTemplate()


# ---------------------------------------------------------------------------
# oscillating templates: sine blocks on disjoint log-scale intervals
# ---------------------------------------------------------------------------

MIN_BLOCK_OFFSET = math.log(12 * kernels.zeta_int(2))  # lower bound for a_k


@dataclass(frozen=True)
class OscillationParams:
    """Block frequencies tau_k (increasing), offsets a_k, exponents
    nu_k in (2,3); delta_k = (log log tau_k + a_k)/log tau_k.  Block k
    occupies (tau_k^(1+delta_k), tau_k^(nu_k)] and consecutive blocks
    must be disjoint."""

    tau: np.ndarray
    a: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "tau", np.asarray(self.tau, dtype=np.float64))
        object.__setattr__(self, "a", np.asarray(self.a, dtype=np.float64))
        object.__setattr__(self, "nu", np.asarray(self.nu, dtype=np.float64))
        if not (self.tau.size == self.a.size == self.nu.size):
            raise TemplateError("tau, a, nu must have equal length")
        if self.tau.size == 0:
            return
        if self.tau[0] <= math.e:
            raise TemplateError("tau_0 must exceed e")
        if np.any(np.diff(self.tau) <= 0.0):
            raise TemplateError("tau must be strictly increasing")
        if np.any((self.nu <= 2.0) | (self.nu >= 3.0)):
            raise TemplateError("nu_k must lie in (2, 3)")
        if np.any(self.a < MIN_BLOCK_OFFSET - 1e-12):
            raise TemplateError(
                f"a_k must be >= log(12 zeta(2)) = {MIN_BLOCK_OFFSET:.6f}")
        if np.any(1.0 + self.delta >= self.nu):
            raise TemplateError("empty block: 1 + delta_k >= nu_k")
        ends = self.nu * self.log_tau
        starts = (1.0 + self.delta) * self.log_tau
        if np.any(ends[:-1] >= starts[1:]):
            raise TemplateError("blocks overlap: tau grows too slowly")

    @property
    def log_tau(self):
        return np.log(self.tau)

    @property
    def delta(self):
        return (np.log(self.log_tau) + self.a) / self.log_tau

    @property
    def log_starts(self):
        """Block left edges in log x."""
        return (1.0 + self.delta) * self.log_tau

    @property
    def log_ends(self):
        return self.nu * self.log_tau

    def blocks_disjoint(self):
        return bool(np.all(self.log_ends[:-1] < self.log_starts[1:]))


def default_oscillation_params(n_blocks=2, tau0=50.0, nu=2.5, a=None,
                               continuous=True):
    """tau_k = tau0^(3^k); a_k defaults to the monotonicity bound.

    With continuous=True (the default) nu_k and a_k are snapped upward to
    the nearest block-edge phase zeros, sin(tau_k nu_k log tau_k) = 0 and
    sin(tau_k (1+delta_k) log tau_k) = 0, so the sine blocks switch on
    and off continuously; the shifts are below pi/(tau_k log tau_k) and
    pi/tau_k respectively, keeping nu_k in (2, 3) and a_k above the
    monotonicity bound.  The same phases zero out every dilated block
    edge at once.  Two blocks already reach x ~ 5e12; beyond the third
    block float64 cannot resolve the phases tau_k log x at all, so large
    n_blocks values are rejected by the frequency cap below.
    """
    if a is None:
        a = MIN_BLOCK_OFFSET
    log_tau = np.log(tau0) * 3.0 ** np.arange(n_blocks)
    if log_tau[-1] > 700.0:
        raise TemplateError("too many blocks for float64 frequencies")
    tau = np.exp(log_tau)
    a_arr = np.full(n_blocks, float(a))
    nu_arr = np.full(n_blocks, float(nu))
    if continuous:
        theta = tau * log_tau
        nu_arr = np.round(nu_arr * theta / math.pi) * math.pi / theta
        left_phase = theta + tau * (np.log(log_tau) + a_arr)
        a_arr = a_arr + (np.ceil(left_phase / math.pi) * math.pi - left_phase) / tau
    return OscillationParams(tau, a_arr, nu_arr)


class OscillatingTemplate(Template):
    """Gram-type base plus sine blocks.

    weighted=True:  liN(x) + sum_{k,n} mu(n)/n sin((tau_k/n) log x) on the
                    n-dilated blocks (prime-count shape);
    weighted=False: LiN(x) + sum_k sin(tau_k log x) on the blocks
                    (weighted prime-count shape, one block active at most).
    """

    def __init__(self, params, weighted):
        super().__init__()
        self.params = params
        self.weighted = weighted
        self.template_id = "oscillating-prime" if weighted else "oscillating-riemann"
        self._a, self._da = kernels.series_arrays(weighted)

    @property
    def total_continuous_mass(self):
        return math.inf

    def _block_sum(self, w, deriv=False):
        """Sum of supported sine terms (or d/dw) at log positions w."""
        p = self.params
        out = np.zeros_like(w)
        if p.tau.size == 0:
            return out
        n_max = 1
        if self.weighted:
            n_max = max(1, int(np.max(w) / p.log_starts[0]) + 1)
        for n in range(1, n_max + 1):
            mu = _mobius(n) if self.weighted else (1 if n == 1 else 0)
            if mu == 0:
                continue
            un = w / n
            k = np.searchsorted(p.log_starts, un, side="right") - 1
            k_ok = np.clip(k, 0, p.tau.size - 1)
            active = (k >= 0) & (un <= p.log_ends[k_ok]) & (un > p.log_starts[k_ok])
            if not active.any():
                continue
            freq = p.tau[k_ok] / n
            if deriv:
                term = (mu / n) * freq * np.cos(freq * w)
            else:
                term = (mu / n) * np.sin(freq * w)
            out += np.where(active, term, 0.0)
        return out

    def continuous_eval(self, x):
        x = np.asarray(x, dtype=np.float64)
        w = np.log(np.atleast_1d(x))
        return _vec_out(x, kernels.poly_eval(w, self._a) + self._block_sum(w))

    def _eval_w(self, w):
        return kernels.poly_eval(w, self._a) + self._block_sum(w)

    def _deriv_w(self, w):
        return kernels.poly_eval(w, self._da) + self._block_sum(w, deriv=True)

    def continuous_quantile_vec(self, m):
        m = np.atleast_1d(np.asarray(m, dtype=np.float64))
        if np.any(m < 0.0):
            raise TemplateError("quantile target must be nonnegative")
        if m.size == 0:
            return m.copy()
        w_hi = 2.0
        while self._eval_w(np.array([w_hi]))[0] < m.max():
            w_hi *= 1.5
            if w_hi > 700.0:
                raise TemplateError("quantile target out of range")
        w = _newton_in_w(self._eval_w, self._deriv_w, m, 0.0, w_hi)
        w[m == 0.0] = 0.0
        return np.exp(w)

    def log_breakpoints(self, w_hi):
        p = self.params
        edges = []
        n_max = max(1, int(w_hi / p.log_starts[0]) + 1) if self.weighted else 1
        for n in range(1, n_max + 1):
            if self.weighted and _mobius(n) == 0:
                continue
            for k in range(p.tau.size):
                s, e = n * p.log_starts[k], n * p.log_ends[k]
                if s < w_hi:
                    edges.append(s)
                if e < w_hi:
                    edges.append(e)
        return tuple(sorted(edges))

    def to_doc(self):
        return {
            "kind": "oscillating",
            "variant": "prime" if self.weighted else "riemann",
            "tau": self.params.tau.tolist(),
            "a": self.params.a.tolist(),
            "nu": self.params.nu.tolist(),
        }


def _newton_in_w(f, fprime, targets, lo, hi, ftol=1e-13, maxit=200):
    """Safeguarded vectorized Newton for a generic increasing f in w."""
    m = np.asarray(targets, dtype=np.float64)
    w = np.full(m.shape, 0.5 * (lo + hi))
    lo_a = np.full(m.shape, lo)
    hi_a = np.full(m.shape, hi)
    active = np.ones(m.shape, dtype=bool)
    for _ in range(maxit):
        fv = f(w) - m
        conv = np.abs(fv) <= ftol * (1.0 + np.abs(m))
        active &= ~conv
        if not active.any():
            break
        pos = fv > 0.0
        hi_a = np.where(active & pos, w, hi_a)
        lo_a = np.where(active & ~pos, w, lo_a)
        fp = fprime(w)
        with np.errstate(divide="ignore", invalid="ignore"):
            wn = w - fv / fp
        bad = ~((wn > lo_a) & (wn < hi_a)) | ~np.isfinite(wn)
        wn = np.where(bad, 0.5 * (lo_a + hi_a), wn)
        w = np.where(active, wn, w)
    return w


def pi_c_eval(x, params, tol=1e-12):
    """Prime-count oscillating template value at x (series tolerance tol).

    liN(x) plus the finitely many dilated block terms whose support
    contains x; the block lookup is a binary search per dilation order."""
    tmpl = OscillatingTemplate(params, weighted=True)
    base = li_eval(x, tol)
    w = np.array([math.log(x)])
    return base + float(tmpl._block_sum(w)[0])


def Pi_c_eval(x, params):
    """Weighted-count oscillating template at x: LiN plus one block term."""
    tmpl = OscillatingTemplate(params, weighted=False)
    base = Li_eval(x, 1e-12)
    w = np.array([math.log(x)])
    return base + float(tmpl._block_sum(w)[0])


# ---------------------------------------------------------------------------
# atomic and mixed templates
# ---------------------------------------------------------------------------

class AtomicTemplate(Template):
    """Purely discrete template from explicit (position, mass) atoms."""

    def __init__(self, positions, masses, template_id="atoms"):
        super().__init__()
        pos = np.asarray(positions, dtype=np.float64)
        mas = np.asarray(masses, dtype=np.float64)
        if pos.size != mas.size:
            raise TemplateError("positions and masses must have equal length")
        if pos.size:
            order = np.argsort(pos)
            pos, mas = pos[order], mas[order]
            if np.any(np.diff(pos) <= 0.0):
                raise TemplateError("atom positions must be distinct")
            if pos[0] <= 1.0:
                raise TemplateError("atom positions must exceed 1")
            if np.any(mas <= 0.0):
                raise TemplateError("atom masses must be positive")
        self.positions = pos
        self.masses = mas
        self._cum = np.concatenate([[0.0], np.cumsum(mas)])
        self.template_id = template_id

    @property
    def total_discrete_mass(self):
        return float(self._cum[-1])

    def discrete_eval(self, x):
        x = np.asarray(x, dtype=np.float64)
        idx = np.searchsorted(self.positions, np.atleast_1d(x), side="right")
        return _vec_out(x, self._cum[idx])

    def atoms_between(self, lo, hi, eps_mass=1e-9):
        i = np.searchsorted(self.positions, lo, side="right")
        j = np.searchsorted(self.positions, hi, side="right")
        return self.positions[i:j].copy(), self.masses[i:j].copy()

    def to_doc(self):
        return {"kind": "atoms",
                "atoms": [[float(y), float(a)]
                          for y, a in zip(self.positions, self.masses)]}


class MixedTemplate(Template):
    """Continuous template plus explicit atoms (F = F_c + F_d)."""

    def __init__(self, continuous, atoms, template_id=None):
        super().__init__()
        self.continuous = continuous
        self.atomic = atoms if isinstance(atoms, AtomicTemplate) else \
            AtomicTemplate([y for y, _ in atoms], [a for _, a in atoms])
        self.template_id = template_id or f"{continuous.template_id}+atoms"

    @property
    def total_continuous_mass(self):
        return self.continuous.total_continuous_mass

    @property
    def total_discrete_mass(self):
        return self.atomic.total_discrete_mass

    def continuous_eval(self, x):
        return self.continuous.continuous_eval(x)

    def continuous_quantile(self, m):
        return self.continuous.continuous_quantile(m)

    def continuous_quantile_vec(self, m):
        return self.continuous.continuous_quantile_vec(m)

    def discrete_eval(self, x):
        return self.atomic.discrete_eval(x)

    def atoms_between(self, lo, hi, eps_mass=1e-9):
        return self.atomic.atoms_between(lo, hi, eps_mass)

    def log_breakpoints(self, w_hi):
        return self.continuous.log_breakpoints(w_hi)

    def to_doc(self):
        doc = self.continuous.to_doc()
        doc["atoms"] = self.atomic.to_doc()["atoms"]
        return doc


def grid_template(base, v):
    """Condense a purely continuous template onto the grid {v_k}.

    Returns an atomic template with atoms (v_k, F(v_k) - F(v_{k-1})),
    v_0 := 1; zero-mass cells are dropped.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.size == 0:
        raise TemplateError("empty grid")
    if v[0] <= 1.0 or np.any(np.diff(v) <= 0.0):
        raise TemplateError("grid must be strictly increasing with v_1 > 1")
    if base.total_discrete_mass != 0.0:
        raise TemplateError("grid_template requires a purely continuous base")
    F = np.atleast_1d(base.continuous_eval(v))
    alpha = np.diff(np.concatenate([[0.0], F]))
    keep = alpha > 0.0
    return AtomicTemplate(v[keep], alpha[keep],
                          template_id=f"grid({base.template_id})")


def scaled_log_grid(count, k0=10.0, scale=1.0):
    """v_k = scale * log(k + k0), k = 1..count (an admissible grid shape)."""
    k = np.arange(1, count + 1, dtype=np.float64)
    return scale * np.log(k + k0)


def check_admissible_grid(v, t_grid, growth_factor=4.0):
    """Report the two grid-admissibility ratios.

    First: sup_k (v_{k+1} - v_k)/log v_k.  Second, per t: the tail sum
    sum_{v_k >= h(t)} (v_k - v_{k-1})^2/(v_k log v_k) relative to
    log(t+1)/t, with h(t) = log(t+1) log log(t+e).  Flags a violation if
    either per-decade maximum sequence grows by more than growth_factor
    from its first populated decade to its last.
    """
    v = np.asarray(v, dtype=np.float64)
    if np.any(np.diff(v) <= 0.0):
        raise TemplateError("grid must be strictly increasing")
    usable = v[:-1] > 1.0  # log v_k <= 0 has no meaningful ratio
    gaps = np.diff(v)[usable]
    gap_ratio = gaps / np.log(v[:-1][usable])
    decades = np.floor(np.log10(v[:-1][usable])).astype(int)
    gap_decade_max = _decade_maxima(decades, gap_ratio)

    prev = np.concatenate([[1.0], v[:-1]])
    with np.errstate(divide="ignore", invalid="ignore"):
        tail_terms = np.where(v > 1.0,
                              (v - prev) ** 2 / (v * np.log(np.maximum(v, 1.0 + 1e-12))),
                              0.0)
    # cumulative-from-the-right tail sums, evaluated at each h(t)
    suffix = np.concatenate([np.cumsum(tail_terms[::-1])[::-1], [0.0]])
    t_grid = np.asarray(t_grid, dtype=np.float64)
    ratios = []
    for t in t_grid:
        h = math.log(t + 1.0) * math.log(math.log(t + math.e))
        start = np.searchsorted(v, h, side="left")
        tail = suffix[start]
        rhs = math.log(t + 1.0) / t if t > 0 else 1.0
        ratios.append(tail / rhs)
    ratios = np.asarray(ratios)
    with np.errstate(divide="ignore"):
        t_decades = np.where(t_grid > 0,
                             np.floor(np.log10(np.maximum(t_grid, 1e-300))),
                             0).astype(int)
    tail_decade_max = _decade_maxima(t_decades, ratios)

    def grows(decade_max):
        vals = [m for _, m in decade_max if m > 0]
        return len(vals) >= 2 and vals[-1] > growth_factor * vals[0]

    return {
        "sup_gap_ratio": float(gap_ratio.max()) if gap_ratio.size else 0.0,
        "gap_ratio_decade_max": gap_decade_max,
        "tail_ratios": [[float(t), float(r)] for t, r in zip(t_grid, ratios)],
        "tail_ratio_decade_max": tail_decade_max,
        "gap_ratio_flag": grows(gap_decade_max),
        "tail_ratio_flag": grows(tail_decade_max),
        "flagged": grows(gap_decade_max) or grows(tail_decade_max),
    }


def _decade_maxima(decades, values):
    out = []
    for d in np.unique(decades):
        sel = decades == d
        out.append((int(d), float(np.max(values[sel]))))
    return out


# ---------------------------------------------------------------------------
# JSON loading
# ---------------------------------------------------------------------------

def template_from_doc(doc):
    """Build a template from a JSON document.

    {"kind": "li" | "Li" | "log" | "oscillating" | "grid" | "atoms", ...};
    continuous kinds accept an optional "atoms": [[y, mass], ...] making a
    mixed template.  Grid templates take an inline "v" list or a named
    rule {"name": "scaled_log", "count": ..., "k0": ..., "scale": ...}.
    """
    if isinstance(doc, str):
        doc = json.loads(doc)
    kind = doc.get("kind")
    atoms = doc.get("atoms")
    if kind == "li":
        tmpl = li_template()
    elif kind == "Li":
        tmpl = Li_template()
    elif kind == "log":
        tmpl = log_template()
    elif kind == "oscillating":
        if "tau" in doc:
            params = OscillationParams(np.asarray(doc["tau"]),
                                       np.asarray(doc["a"]),
                                       np.asarray(doc["nu"]))
        else:
            params = default_oscillation_params(
                n_blocks=int(doc.get("n_blocks", 2)),
                tau0=float(doc.get("tau0", 50.0)),
                nu=float(doc.get("nu", 2.5)))
        variant = doc.get("variant", "prime")
        if variant not in ("prime", "riemann"):
            raise TemplateError(f"unknown oscillating variant {variant!r}")
        tmpl = OscillatingTemplate(params, weighted=(variant == "prime"))
    elif kind == "grid":
        base = template_from_doc(doc["base"])
        if "v" in doc:
            v = np.asarray(doc["v"], dtype=np.float64)
        else:
            rule = doc["rule"]
            if rule.get("name") != "scaled_log":
                raise TemplateError(f"unknown grid rule {rule.get('name')!r}")
            v = scaled_log_grid(int(rule["count"]),
                                k0=float(rule.get("k0", 10.0)),
                                scale=float(rule.get("scale", 1.0)))
        if atoms is not None:
            raise TemplateError("grid templates cannot carry extra atoms")
        return grid_template(base, v)
    elif kind == "atoms":
        if not atoms:
            raise TemplateError("atoms template needs an atom list")
        return AtomicTemplate([y for y, _ in atoms], [a for _, a in atoms])
    else:
        raise TemplateError(f"unknown template kind {kind!r}")
    if atoms:
        return MixedTemplate(tmpl, atoms)
    return tmpl


NAMED_TEMPLATES = ("li", "Li", "log", "oscillating")


def resolve_template(spec):
    """Template from a shorthand name, inline JSON, or @file reference."""
    if isinstance(spec, dict):
        return template_from_doc(spec)
    spec = spec.strip()
    if spec.startswith("@"):
        with open(spec[1:], "r", encoding="utf-8") as fh:
            return template_from_doc(json.load(fh))
    if spec.startswith("{"):
        return template_from_doc(spec)
    if spec in NAMED_TEMPLATES:
        return template_from_doc({"kind": spec})
    raise TemplateError(f"unknown template spec {spec!r}")
