"""Composite Gauss panels for oscillatory integrals in log coordinates.

Integrals here have the shape  int_a^b f(w) exp(-i t w) dw  with f smooth
(up to known breakpoints).  Panels are kept below both a smoothness width
and a quarter wavelength 1/(4|t|), so a fixed-order Gauss rule resolves
the phase; a panel-doubling pass certifies the requested tolerance.
"""

import numpy as np

GAUSS_ORDER = 8
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GAUSS_ORDER)


class QuadratureError(RuntimeError):
    """Raised when panel doubling fails to reach the requested tolerance."""

    def __init__(self, message, worst_panel=None):
        super().__init__(message)
        self.worst_panel = worst_panel


def panel_width(t, base_width=0.5):
    """Maximum admissible panel width: smoothness cap and 1/(4|t|)."""
    w = base_width
    if t != 0.0:
        w = min(w, 1.0 / (4.0 * abs(t)))
    return w


def _refine(marks, h):
    """Insert nodes so that no gap between consecutive marks exceeds h."""
    pieces = [marks[:1]]
    for left, right in zip(marks[:-1], marks[1:]):
        n = max(1, int(np.ceil((right - left) / h)))
        pieces.append(np.linspace(left, right, n + 1)[1:])
    return np.concatenate(pieces)


def _bounds(a, b, h, breakpoints=()):
    """Sorted panel boundaries covering [a, b], split at breakpoints,
    with no panel wider than h."""
    cuts = [a, b] + [c for c in breakpoints if a < c < b]
    return _refine(np.unique(np.asarray(cuts, dtype=np.float64)), h)


def _split_half(bounds):
    mids = 0.5 * (bounds[:-1] + bounds[1:])
    out = np.empty(bounds.size + mids.size)
    out[0::2] = bounds
    out[1::2] = mids
    return out


def _panel_integrals(f, bounds, t):
    """Per-panel integrals of f(w) exp(-i t w) by the fixed Gauss rule."""
    left = bounds[:-1]
    width = bounds[1:] - left
    nodes = left[:, None] + np.outer(width, 0.5 * (_GL_X + 1.0))
    flat = nodes.ravel()
    vals = np.asarray(f(flat), dtype=np.complex128)
    if t != 0.0:
        vals = vals * np.exp(-1j * t * flat)
    vals = vals.reshape(nodes.shape)
    return (vals @ _GL_W) * (0.5 * width)


def osc_integral(f, a, b, t, tol=1e-9, breakpoints=(), base_width=0.5,
                 max_doublings=12):
    """int_a^b f(w) exp(-i t w) dw to absolute tolerance `tol`.

    f must accept a float64 array.  Raises QuadratureError (carrying the
    worst panel) if doubling stalls above the tolerance.
    """
    if b <= a:
        return 0.0 + 0.0j
    bounds = _bounds(a, b, panel_width(t, base_width), breakpoints)
    parts = _panel_integrals(f, bounds, t)
    total = parts.sum()
    for _ in range(max(1, max_doublings)):
        bounds_parent, parts_parent = bounds, parts
        bounds = _split_half(bounds)
        parts = _panel_integrals(f, bounds, t)
        total2 = parts.sum()
        if abs(total2 - total) <= tol:
            return total2
        total = total2
    diffs = np.abs(parts[0::2] + parts[1::2] - parts_parent)
    k = int(np.argmax(diffs))
    raise QuadratureError(
        f"oscillatory quadrature did not reach tol={tol:g}; worst panel "
        f"[{bounds_parent[k]:.6g}, {bounds_parent[k + 1]:.6g}] "
        f"contributes {diffs[k]:.3g}",
        worst_panel=(float(bounds_parent[k]), float(bounds_parent[k + 1])),
    )


def cumulative_osc_integral(f, w_points, t, tol=1e-6, breakpoints=(),
                            base_width=0.5, max_doublings=8):
    """Cumulative integrals int_0^{w_i} f(w) exp(-i t w) dw for sorted w_i.

    The query points themselves are panel boundaries, so each cumulative
    value is a prefix sum of panel integrals; the doubling pass certifies
    the total to `tol`, which bounds every prefix of the refinement error
    in practice (panel errors are summed with like signs only in the
    worst case).
    """
    w_points = np.asarray(w_points, dtype=np.float64)
    if w_points.size == 0:
        return np.zeros(0, dtype=np.complex128)
    hi = float(w_points[-1])
    if hi <= 0.0:
        return np.zeros(w_points.size, dtype=np.complex128)
    h = panel_width(t, base_width)
    marks = np.unique(np.concatenate([[0.0, hi], w_points,
                                      np.asarray(breakpoints, dtype=np.float64)]))
    marks = marks[(marks >= 0.0) & (marks <= hi)]
    bounds = _refine(marks, h)
    parts = _panel_integrals(f, bounds, t)
    for _ in range(max_doublings):
        bounds2 = _split_half(bounds)
        parts2 = _panel_integrals(f, bounds2, t)
        if abs(parts2.sum() - parts.sum()) <= tol:
            bounds, parts = bounds2, parts2
            break
        bounds, parts = bounds2, parts2
    prefix = np.concatenate([[0.0 + 0.0j], np.cumsum(parts)])
    idx = np.searchsorted(bounds, w_points)
    return prefix[idx]
