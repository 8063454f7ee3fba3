"""Brute-force grid oracles for low-dimensional cross-checks.

These deliberately avoid the closed-form projections and measures they are
used to verify. A candidate grid is laid over (a window of) the set, the
incumbent best point is kept, and the window is recentered and shrunk around
it. The objectives involved (squared distance, the linearization-minus-
quadratic bracket) are convex/concave over a convex set, so refinement around
the grid incumbent converges to the global optimum. Intended for d <= 3 and
test-scale budgets only.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np

from .geometry import Array, FeasibleSet, as_point

_PTS_PER_AXIS = 15
_SHRINK = 0.5


def _l1_shrink(v: Array, radius: float) -> Array:
    """Nearest point with l1 norm `radius` via bisection on the soft
    threshold; independent of the closed-form sort-based projection."""
    lo, hi = 0.0, float(np.max(np.abs(v)))
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if np.sum(np.maximum(np.abs(v) - mid, 0.0)) > radius:
            lo = mid
        else:
            hi = mid
    return np.sign(v) * np.maximum(np.abs(v) - hi, 0.0)


def _window_candidates(feasible: FeasibleSet, center: Array, half_width: float,
                       pts: int) -> Array:
    """Feasible candidate points on a grid inside a window around `center`."""
    kind = feasible.kind
    d = feasible.dim
    if kind == "simplex":
        # parametrize by the first d-1 coordinates; the last closes the sum
        s = feasible.radius
        axes = []
        for i in range(d - 1):
            lo = max(0.0, center[i] - half_width)
            hi = min(s, center[i] + half_width)
            axes.append(np.linspace(lo, hi, pts))
        grids = np.meshgrid(*axes, indexing="ij") if axes else []
        free = (np.stack([g.ravel() for g in grids], axis=1)
                if axes else np.zeros((1, 0)))
        last = s - np.sum(free, axis=1)
        mask = last >= 0.0
        pts_arr = np.concatenate([free[mask], last[mask, None]], axis=1)
        return pts_arr

    if kind == "box":
        los = np.maximum(feasible.lo, center - half_width)
        his = np.minimum(feasible.hi, center + half_width)
    elif kind in ("euclidean-ball", "l1-ball"):
        los = np.maximum(feasible.center - feasible.radius, center - half_width)
        his = np.minimum(feasible.center + feasible.radius, center + half_width)
    elif kind == "whole-space":
        los = center - half_width
        his = center + half_width
    else:
        raise ValueError(f"unsupported kind {kind!r}")

    axes = [np.linspace(los[i], his[i], pts) for i in range(d)]
    grids = np.meshgrid(*axes, indexing="ij")
    cand = np.stack([g.ravel() for g in grids], axis=1)
    # map candidates outside a ball onto its boundary instead of discarding
    # them: constrained optima sit on the boundary, and a purely interior
    # grid would stall an O(half_width) step short of them
    if kind == "euclidean-ball":
        off = cand - feasible.center
        nrm = np.linalg.norm(off, axis=1)
        out = nrm > feasible.radius
        cand[out] = feasible.center \
            + off[out] * (feasible.radius / nrm[out])[:, None]
    elif kind == "l1-ball":
        off = cand - feasible.center
        out = np.sum(np.abs(off), axis=1) > feasible.radius
        for i in np.nonzero(out)[0]:
            cand[i] = feasible.center + _l1_shrink(off[i], feasible.radius)
    return cand


def _refine(feasible: FeasibleSet, objective, start: Array, half_width0: float,
            refinements: int, pts: int) -> Tuple[Array, float]:
    """Minimize `objective` over the set by coarse-to-fine grid search."""
    center = start.copy()
    best_pt = None
    best_val = np.inf
    hw = half_width0
    for _ in range(refinements):
        cand = _window_candidates(feasible, center, hw, pts)
        if cand.shape[0] == 0:
            hw *= 2.0
            continue
        vals = objective(cand)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val = float(vals[i])
            best_pt = cand[i].copy()
        center = best_pt
        hw *= _SHRINK
    return best_pt, best_val


def _initial_window(feasible: FeasibleSet, target: Array) -> Tuple[Array, float]:
    if feasible.kind == "whole-space":
        return target.copy(), 1.0
    c = feasible.center
    hw = float(feasible.radius_bound) if feasible.radius_bound else 1.0
    hw = max(hw, float(np.linalg.norm(target - c)))
    return c.copy(), max(hw, 1e-6) * 1.05


def grid_project(feasible: FeasibleSet, z, refinements: int = 60,
                 pts: int = _PTS_PER_AXIS) -> Array:
    """Approximate projection of z onto the set by grid refinement."""
    z = as_point(z, dim=feasible.dim)

    def sqdist(cand: Array) -> Array:
        return np.sum((cand - z) ** 2, axis=1)

    start, hw = _initial_window(feasible, z)
    best, _ = _refine(feasible, sqdist, start, hw, refinements, pts)
    return best


def grid_bracket_max(z, zeta, L: float, feasible: FeasibleSet,
                     refinements: int = 60,
                     pts: int = _PTS_PER_AXIS) -> Tuple[float, Array]:
    """Maximize -<zeta, z'-z> - (L/2)||z'-z||^2 over the set on a grid.

    Returns (max value, argmax). The exact maximum is nonnegative whenever
    z is feasible (z' = z scores 0).
    """
    z = as_point(z, dim=feasible.dim)
    zeta = as_point(zeta, dim=feasible.dim)

    def neg_bracket(cand: Array) -> Array:
        diff = cand - z
        return diff @ zeta + 0.5 * L * np.sum(diff ** 2, axis=1)

    # the unconstrained maximizer z - zeta/L seeds the window size
    start, hw = _initial_window(feasible, z - zeta / L)
    best, neg_val = _refine(feasible, neg_bracket, start, hw, refinements, pts)
    return -neg_val, best


def grid_strong_measure(z, zeta, L: float, feasible: FeasibleSet,
                        refinements: int = 60,
                        pts: int = _PTS_PER_AXIS) -> float:
    """Strong stationarity measure by grid maximization of the bracket."""
    m, _ = grid_bracket_max(z, zeta, L, feasible, refinements, pts)
    return float(np.sqrt(2.0 * L * max(m, 0.0)))
