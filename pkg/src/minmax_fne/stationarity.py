"""Stationarity measures for constrained first-order points.

Two residuals are computed for a point z with gradient-like vector zeta and
curvature constant L:

* the strong measure: sqrt of 2L times the best value of the concave bracket
  -<zeta, z' - z> - (L/2)||z' - z||^2 over the feasible set, and
* the weak measure: L times the distance from z to its projected gradient
  step, i.e. the proximal gradient norm.

Both vanish exactly at constrained stationary points, the strong one
dominates the weak one, and on the whole space both collapse to ||zeta||.
The bracket is a concave quadratic, so its constrained maximizer is the
projected step p = project(z - zeta/L); the strong measure is therefore
computable in closed form whenever the projection is.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Tuple

import numpy as np

from .geometry import Array, FeasibleSet, as_point, project

if TYPE_CHECKING:  # pragma: no cover
    from .saddle import ProblemSpec

_FEAS_TOL = 1e-9
# how negative a bracket value can go before it is an error, not roundoff
_NEG_CLAMP = -1e-14


@dataclass(frozen=True)
class StationarityReport:
    """Strong/weak measures plus the maximizing (projected-step) point."""

    strong: float
    weak: float
    prox_point: Array


def _check_inputs(z: Array, zeta: Array, L: float,
                  feasible: FeasibleSet) -> Tuple[Array, Array]:
    z = as_point(z, dim=feasible.dim)
    zeta = as_point(zeta, dim=feasible.dim)
    if L <= 0.0:
        raise ValueError(f"curvature constant must be positive, got {L}")
    if not feasible.contains(z, tol=_FEAS_TOL):
        raise ValueError("point is not feasible (beyond 1e-9 slack)")
    return z, zeta


def stationarity_report(z, zeta, L: float,
                        feasible: FeasibleSet) -> StationarityReport:
    """Compute both measures and the maximizer in one projection.

    Parameters
    ----------
    z : ndarray
        Feasible point (1e-9 absolute slack).
    zeta : ndarray
        Gradient-like vector at z.
    L : float
        Positive curvature constant.
    feasible : FeasibleSet

    Returns
    -------
    StationarityReport
    """
    z, zeta = _check_inputs(z, zeta, L, feasible)
    p = project(feasible, z - zeta / L)
    diff = p - z
    # + 0.0 normalizes a signed zero so the reported measure is never -0.0
    m = -float(zeta @ diff) - 0.5 * L * float(diff @ diff) + 0.0
    if m < 0.0:
        if m < _NEG_CLAMP * max(1.0, float(zeta @ zeta)):
            raise ArithmeticError(
                f"bracket value {m} is negative beyond roundoff; "
                "projection or inputs are inconsistent")
        m = 0.0
    strong = float(np.sqrt(2.0 * L * m))
    weak = L * float(np.linalg.norm(diff))
    return StationarityReport(strong=strong, weak=weak, prox_point=p)


def strong_measure(z, zeta, L: float, feasible: FeasibleSet) -> float:
    """Strong stationarity measure at (z, zeta, L) on the set."""
    return stationarity_report(z, zeta, L, feasible).strong


def weak_measure(z, zeta, L: float, feasible: FeasibleSet) -> float:
    """Weak (proximal-gradient-norm) measure at (z, zeta, L) on the set."""
    return stationarity_report(z, zeta, L, feasible).weak


def fne_check(x, y, problem: "ProblemSpec", eps_x: float, eps_y: float
              ) -> Tuple[bool, StationarityReport, StationarityReport]:
    """Approximate first-order Nash equilibrium verdict.

    Passes iff the minimizing side's strong measure at (x, grad_x F(x,y),
    L_xx) is at most eps_x and the maximizing side's strong measure at
    (y, -grad_y F(x,y), L_yy) is at most eps_y.

    Returns
    -------
    (bool, StationarityReport, StationarityReport)
        Verdict, x-side report, y-side report.
    """
    if eps_x <= 0.0 or eps_y <= 0.0:
        raise ValueError("accuracy targets must be positive")
    gx = problem.oracle_gx(x, y)
    gy = problem.oracle_gy(x, y)
    rep_x = stationarity_report(x, gx, problem.L_xx, problem.X)
    rep_y = stationarity_report(y, -gy, problem.L_yy, problem.Y)
    ok = rep_x.strong <= eps_x and rep_y.strong <= eps_y
    return ok, rep_x, rep_y
