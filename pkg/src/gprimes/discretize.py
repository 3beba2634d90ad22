"""Randomized discretization of a density template into a prime system.

The continuous part of the template is cut into unit-mass cells at the
quantile boundaries q_j and every cell receives exactly one point, drawn
by inverse-transform sampling from the mass restricted to that cell.  The
atomic part is cut at the positions where its cumulative mass crosses
integers; each of those cells draws one point among the atoms it covers,
with boundary atoms shared between neighbouring cells through carry
weights.  Both branches use one counter-based generator keyed by
(seed, branch), so cell j always consumes the j-th stream element and the
construction is reproducible and order-independent.
"""

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .templates import Template, TemplateError

_BRANCH_CONTINUOUS = 0x636F6E74  # "cont"
_BRANCH_DISCRETE = 0x64697363    # "disc"
_MASK64 = (1 << 64) - 1

# Treat continuous mass within this absolute slack of an integer as
# attained; covers quantile tolerance and series round-off (the template
# layer works to ~1e-12 relative).
_CELL_SNAP = 1e-9


class ConstructionError(RuntimeError):
    """Sampling or partition failure, carrying the offending cell."""

    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


def cell_uniforms(seed, branch, count):
    """count uniforms on (0, 1], element j-1 belonging to cell j."""
    key = np.array([seed & _MASK64, branch & _MASK64], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    return 1.0 - gen.random(count)


@dataclass(frozen=True)
class Partition:
    """Cell boundaries q_0 = 1 < q_1 <= ... <= q_J for one branch."""

    branch: str
    q: np.ndarray               # length J+1, q[0] = 1
    gamma: np.ndarray = None    # discrete branch: carry weights, length J+1

    @property
    def cell_count(self):
        return self.q.size - 1


@dataclass(frozen=True)
class DiscreteCellLaw:
    """Sampling law of one discrete-branch cell: positions with their
    probabilities (carry at the left boundary, interior atom masses, the
    remainder at the right boundary)."""

    j: int
    positions: np.ndarray
    probs: np.ndarray
    degenerate: bool

    def sample(self, u):
        """Position for a uniform u in (0, 1]."""
        cum = np.cumsum(self.probs)
        idx = int(np.searchsorted(cum, u, side="left"))
        idx = min(idx, self.positions.size - 1)
        return float(self.positions[idx])


@dataclass(frozen=True)
class PrimeSystem:
    """Sorted multiset of generalized primes with construction metadata."""

    primes: np.ndarray
    seed: int
    template_id: str
    x_max: float
    strictly_increasing: bool
    cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        p = np.asarray(self.primes, dtype=np.float64)
        p.setflags(write=False)
        object.__setattr__(self, "primes", p)
        if p.size and p[0] <= 1.0:
            raise ConstructionError("generalized primes must exceed 1")
        if p.size > 1 and np.any(np.diff(p) < 0.0):
            raise ConstructionError("primes must be sorted")

    @property
    def count(self):
        return int(self.primes.size)

    def log_primes(self):
        out = self.cache.get("log_primes")
        if out is None:
            out = np.log(self.primes)
            out.setflags(write=False)
            self.cache["log_primes"] = out
        return out


# ---------------------------------------------------------------------------
# partitions
# ---------------------------------------------------------------------------

def build_partition(template, branch, x_max, eps_mass=1e-9):
    """Quantile cells of one branch of the template up to x_max.

    Continuous branch: q_j = quantile(j).  Discrete branch: q_j is the
    atom position where cumulative atomic mass first reaches j; repeated
    boundaries happen when one atom carries more than one unit of mass.
    A template with less than one unit of branch mass yields an empty
    partition, which is not an error.
    """
    if x_max <= 1.0:
        raise ValueError("x_max must exceed 1")
    if branch == "continuous":
        total = float(np.atleast_1d(template.continuous_eval(x_max))[0])
        J = int(math.floor(total + _CELL_SNAP))
        if J < 1:
            return Partition("continuous", np.array([1.0]))
        q = np.concatenate([[1.0],
                            template.continuous_quantile_vec(np.arange(1.0, J + 1.0))])
        return Partition("continuous", q)
    if branch != "discrete":
        raise ValueError(f"unknown branch {branch!r}")

    pos, mass = template.atoms_between(1.0, x_max, eps_mass)
    if pos.size == 0:
        return Partition("discrete", np.array([1.0]), np.array([0.0]))
    cum = np.cumsum(mass)
    q = [1.0]
    gamma = [0.0]
    level = 0  # integers consumed so far
    for y, c in zip(pos, cum):
        floor_c = int(math.floor(c + eps_mass))
        crossed = floor_c - level
        frac = c - floor_c if c - floor_c > eps_mass else 0.0
        for _ in range(crossed):
            level += 1
            q.append(float(y))
            gamma.append(float(frac))
    return Partition("discrete", np.asarray(q), np.asarray(gamma))


def cell_law(template, partition, j, eps_mass=1e-9):
    """DiscreteCellLaw for cell j of a discrete partition."""
    if partition.branch != "discrete":
        raise ValueError("cell laws exist only for the discrete branch")
    if not (1 <= j <= partition.cell_count):
        raise ConstructionError(f"cell {j} outside partition", cell=j)
    q_left = partition.q[j - 1]
    q_right = partition.q[j]
    if q_left == q_right:
        return DiscreteCellLaw(j, np.array([q_right]), np.array([1.0]), True)
    gamma_left = float(partition.gamma[j - 1])
    pos, mass = template.atoms_between(q_left, q_right, eps_mass)
    inside = pos < q_right
    pos_in, mass_in = pos[inside], mass[inside]
    beta = 1.0 - gamma_left - float(mass_in.sum())
    if beta < -eps_mass:
        raise TemplateError(
            f"cell {j}: negative boundary weight {beta:.3e}; "
            "atomic masses inconsistent with the partition")
    beta = min(max(beta, 0.0), 1.0)
    positions = [q_left] if gamma_left > 0.0 else []
    probs = [gamma_left] if gamma_left > 0.0 else []
    positions.extend(pos_in.tolist())
    probs.extend(mass_in.tolist())
    if beta > 0.0:
        positions.append(float(q_right))
        probs.append(beta)
    positions = np.asarray(positions)
    probs = np.asarray(probs)
    defect = abs(probs.sum() - 1.0)
    if defect > 10.0 * eps_mass:
        raise TemplateError(f"cell {j}: law mass defect {defect:.3e}")
    return DiscreteCellLaw(j, positions, probs, False)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def sample_continuous_cell(template, partition, j, rng_state):
    """One inverse-transform draw from cell j of the continuous branch."""
    if not (1 <= j <= partition.cell_count):
        raise ConstructionError(f"cell {j} outside partition", cell=j)
    u = 1.0 - rng_state.random()
    try:
        x = template.continuous_quantile(j - 1.0 + u)
    except Exception as exc:
        raise ConstructionError(f"quantile failed in cell {j}: {exc}",
                                cell=j) from exc
    return float(x)


def sample_discrete_cell(template, partition, j, rng_state, eps_mass=1e-9):
    """One draw from the atom law of cell j of the discrete branch."""
    law = cell_law(template, partition, j, eps_mass)
    if law.degenerate:
        return float(law.positions[0])
    u = 1.0 - rng_state.random()
    return law.sample(u)


def discretize(template, seed, x_max, eps_mass=1e-9):
    """Build the full PrimeSystem for a template: one point per unit-mass
    cell of each branch, merged and sorted.  Deterministic in
    (seed, template, x_max); per-cell containment gives
    |pi(x) - F(x)| <= 2 everywhere (<= 1 for purely continuous templates).
    """
    if x_max <= 1.0:
        raise ValueError("x_max must exceed 1")
    template.chebyshev_C(x_max)  # certification is part of the contract

    pieces = []
    total_c = float(np.atleast_1d(template.continuous_eval(x_max))[0])
    J_c = int(math.floor(total_c + _CELL_SNAP))
    if J_c >= 1:
        u = cell_uniforms(seed, _BRANCH_CONTINUOUS, J_c)
        targets = np.arange(J_c, dtype=np.float64) + u
        pieces.append(np.atleast_1d(template.continuous_quantile_vec(targets)))

    part_d = build_partition(template, "discrete", x_max, eps_mass)
    J_d = part_d.cell_count
    discrete_used = J_d > 0
    if discrete_used:
        u = cell_uniforms(seed, _BRANCH_DISCRETE, J_d)
        draws = np.empty(J_d)
        for j in range(1, J_d + 1):
            law = cell_law(template, part_d, j, eps_mass)
            draws[j - 1] = law.positions[0] if law.degenerate else law.sample(u[j - 1])
        pieces.append(draws)

    primes = np.sort(np.concatenate(pieces)) if pieces else np.empty(0)
    strictly = not discrete_used
    if strictly and primes.size > 1 and np.any(np.diff(primes) <= 0.0):
        # float collision across neighbouring cells; keep metadata honest
        strictly = False
    return PrimeSystem(primes=primes, seed=int(seed),
                       template_id=template.template_id,
                       x_max=float(x_max), strictly_increasing=strictly)


# ---------------------------------------------------------------------------
# optional density calibration: steer the measured Z(1) toward zero by
# adding/removing finitely many primes near an anchor
# ---------------------------------------------------------------------------

def _log_zeta_contribution(p, x_max):
    """Contribution of one prime at p to the truncated log-zeta integral
    at s = 1: sum of p^-nu/nu over the powers p^nu <= x_max."""
    nu_max = max(1, int(math.floor(math.log(x_max) / math.log(p))))
    return sum(p ** (-nu) / nu for nu in range(1, nu_max + 1))


def z1_estimate(ps):
    """Truncated Z at s = 1: the prime-power sum minus the integral of
    the normalized log-integral density, both cut at x_max."""
    from .numsys import _prime_power_logs
    from .quadrature import osc_integral
    logs, weights = _prime_power_logs(ps)
    jump = float((weights * np.exp(-logs)).sum()) if logs.size else 0.0

    def f(w):
        w = np.asarray(w, dtype=np.float64)
        small = w < 1e-8
        safe = np.where(small, 1.0, w)
        return np.where(small, 1.0 - 0.5 * w, -np.expm1(-safe) / safe)

    integral = osc_integral(f, 0.0, math.log(ps.x_max), 0.0, tol=1e-10).real
    return jump - integral


def calibrate_density(ps, anchor=100.0, max_changes=64, tol=1e-3):
    """Add or remove primes near the anchor until |Z(1) estimate| <= tol.

    Mirrors the finite-modification freedom of the construction: each
    change shifts the estimate by the prime's truncated log-zeta
    contribution, and a final fractional residue is absorbed by one
    prime placed where its contribution matches.  Returns the adjusted
    system plus a report; the counting bound degrades by at most the
    number of changes.
    """
    z1_before = z1_estimate(ps)
    z1 = z1_before
    primes = list(ps.primes)
    added, removed = [], []
    while abs(z1) > tol and len(added) + len(removed) < max_changes:
        if z1 < 0.0:
            deficit = -z1
            g_anchor = _log_zeta_contribution(anchor, ps.x_max)
            if deficit >= g_anchor:
                p = anchor
            else:
                p = 1.0 / -math.expm1(-deficit)
                if p >= 0.99 * ps.x_max:
                    break  # residue below what any in-range prime can add
            p = min(max(p, 1.0 + 1e-9), ps.x_max)
            primes.append(p)
            added.append(p)
            z1 += _log_zeta_contribution(p, ps.x_max)
        else:
            if not primes:
                break
            k = int(np.argmin(np.abs(np.asarray(primes) - anchor)))
            p = primes.pop(k)
            removed.append(p)
            z1 -= _log_zeta_contribution(p, ps.x_max)
    arr = np.sort(np.asarray(primes))
    strictly = bool(arr.size < 2 or np.all(np.diff(arr) > 0.0))
    out = PrimeSystem(primes=arr, seed=ps.seed,
                      template_id=ps.template_id + "+z1cal",
                      x_max=ps.x_max, strictly_increasing=strictly)
    return out, {
        "z1_before": z1_before,
        "z1_after": z1_estimate(out),
        "added": added,
        "removed": removed,
        "converged": abs(z1) <= tol,
    }


# ---------------------------------------------------------------------------
# file format: one JSON header line, one prime per line (17 significant
# digits -> exact float64 round trip)
# ---------------------------------------------------------------------------

def write_prime_system(ps, path):
    header = {
        "format": "psys/1",
        "seed": ps.seed,
        "template_id": ps.template_id,
        "x_max": ps.x_max,
        "count": ps.count,
        "strictly_increasing": ps.strictly_increasing,
    }
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for p in ps.primes:
            fh.write(f"{p:.17g}\n")
    os.replace(tmp, path)


def read_prime_system(path):
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != "psys/1":
            raise ValueError(f"{path}: not a psys/1 file")
        primes = np.array([float(line) for line in fh if line.strip()])
    if primes.size != header["count"]:
        raise ValueError(f"{path}: count mismatch "
                         f"({primes.size} primes, header {header['count']})")
    return PrimeSystem(primes=primes, seed=int(header["seed"]),
                       template_id=header["template_id"],
                       x_max=float(header["x_max"]),
                       strictly_increasing=bool(header["strictly_increasing"]))
