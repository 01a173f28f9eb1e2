"""
Panel Gauss-Legendre quadrature for smooth but strongly oscillating
integrands on a finite interval ``[0, k_max]``.

Panels are laid out before any rule is applied so that no panel spans more
than half an oscillation of the integrand (see :func:`phase_breakpoints`).
Each panel is integrated with two Gauss-Legendre rules of different order;
their difference is the error estimate, and panels that miss the target are
bisected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_REL_TOL = 1e-9
_HIGH, _LOW = 24, 12
_ROUNDING = 64 * np.finfo(float).eps
_NODES = {n: np.polynomial.legendre.leggauss(n) for n in (_HIGH, _LOW)}


class QuadratureError(RuntimeError):
    """Adaptive refinement did not reach the requested tolerance."""

    def __init__(self, message, worst_panel=None, error=None):
        super().__init__(message)
        self.worst_panel = worst_panel
        self.error = error


@dataclass(frozen=True)
class QuadratureSpec:
    k_max: float | None = None  # None: 8/sigma, chosen by the caller
    rel_tol: float = DEFAULT_REL_TOL
    max_bisections: int = 12
    # absolute floor relative to the integral of |f|; rounding makes anything
    # below a few ulps of that unattainable
    abs_floor: float = 1e-14

    def __post_init__(self):
        if self.k_max is not None and not self.k_max > 0:
            raise ValueError("k_max must be positive")
        if not (0 < self.rel_tol <= 1e-3):
            raise ValueError("rel_tol must lie in (0, 1e-3]")


@dataclass
class QuadResult:
    value: np.ndarray
    error: np.ndarray
    n_panels: int
    extras: dict = field(default_factory=dict)

    def __iter__(self):
        yield self.value
        yield self.error


def _rule(f, a, b, n):
    x, w = _NODES[n]
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    k = mid[:, None] + half[:, None] * x[None, :]
    vals = np.asarray(f(k.ravel()), dtype=float)
    vals = vals.reshape(vals.shape[:-1] + k.shape)
    return np.sum(vals * w, axis=-1) * half, np.sum(np.abs(vals) * w, axis=-1) * half


def merge_breakpoints(k_max, *grids, min_width=None):
    pts = np.concatenate([np.asarray(g, dtype=float).ravel() for g in grids] + [[0.0, k_max]])
    pts = np.unique(np.clip(pts, 0.0, k_max))
    if min_width is None:
        min_width = 1e-12 * k_max
    keep = np.concatenate([[True], np.diff(pts) > min_width])
    pts = pts[keep]
    pts[-1] = k_max
    return pts


def uniform_breakpoints(k_max, spacing):
    n = max(1, int(np.ceil(k_max / spacing)))
    return np.linspace(0.0, k_max, n + 1)


def phase_breakpoints(k_max, phase_of_k, k_of_phase, step=np.pi):
    """Points where a monotone phase ``phase_of_k`` crosses multiples of ``step``."""
    total = float(phase_of_k(k_max))
    n = int(np.floor(total / step))
    if n < 1:
        return np.array([0.0, k_max])
    return np.concatenate([[0.0], k_of_phase(step * np.arange(1, n + 1)), [k_max]])


def integrate_radial(integrand, spec: QuadratureSpec, breakpoints=None, k_max=None) -> QuadResult:
    """Integrate ``integrand`` over ``[0, k_max]``.

    ``integrand`` maps a 1-D array of nodes to an array of shape
    ``(..., nodes)``; several integrands sharing the same nodes are
    integrated in one pass. Returns value and error estimate with the same
    leading shape. The estimate satisfies ``error <= rel_tol * |value|``
    unless the value sits at rounding level, in which case the bound is the
    absolute floor ``abs_floor * integral(|f|)``.
    """
    k_max = spec.k_max if k_max is None else k_max
    if k_max is None or not k_max > 0:
        raise ValueError("k_max must be given and positive")
    if breakpoints is None:
        breakpoints = np.linspace(0.0, k_max, 17)
    pts = np.asarray(breakpoints, dtype=float)
    a, b = pts[:-1], pts[1:]

    done_val, done_err, done_abs = [], [], []
    for level in range(spec.max_bisections + 1):
        hi, hi_abs = _rule(integrand, a, b, _HIGH)
        lo, _ = _rule(integrand, a, b, _LOW)
        err = np.abs(hi - lo)
        value = hi.sum(axis=-1) + sum(v.sum(axis=-1) for v in done_val)
        total_err = err.sum(axis=-1) + sum(e.sum(axis=-1) for e in done_err)
        l1 = hi_abs.sum(axis=-1) + sum(v.sum(axis=-1) for v in done_abs)
        target = np.maximum(spec.rel_tol * np.abs(value), spec.abs_floor * l1)
        if np.all(total_err <= target):
            bad = np.zeros(a.shape, dtype=bool)
        else:
            # width-proportional share of the budget; panels already at
            # rounding level are left alone
            allowance = np.maximum(0.5 * target[..., None] * (b - a) / k_max, _ROUNDING * hi_abs)
            bad = np.any(err > allowance, axis=tuple(range(err.ndim - 1)))
        done_val.append(hi[..., ~bad])
        done_err.append(err[..., ~bad])
        done_abs.append(hi_abs[..., ~bad])
        if not np.any(bad):
            break
        if level == spec.max_bisections:
            errs = np.max(err.reshape(-1, err.shape[-1])[:, bad], axis=0)
            j = int(np.argmax(errs))
            lo_edge, hi_edge = float(a[bad][j]), float(b[bad][j])
            raise QuadratureError(
                f"quadrature did not converge; worst panel [{lo_edge:.6g}, {hi_edge:.6g}] "
                f"with error {float(errs[j]):.3g}",
                worst_panel=(lo_edge, hi_edge), error=float(errs[j]))
        mid = 0.5 * (a[bad] + b[bad])
        a, b = np.concatenate([a[bad], mid]), np.concatenate([mid, b[bad]])

    value = sum(v.sum(axis=-1) for v in done_val)
    error = sum(e.sum(axis=-1) for e in done_err)
    n_panels = sum(v.shape[-1] for v in done_val)
    return QuadResult(value=np.asarray(value), error=np.asarray(error), n_panels=n_panels)
