"""Envelope-smoothing diagnostics for the primal max-function.

The primal function phi(x) = max_y F(x, y) is weakly convex with modulus
L_xx. Its quadratic envelope with weight 2*L_xx,

    env(x) = min_{x' in X} [ phi(x') + L_xx * ||x' - x||^2 ],

is differentiable with gradient 2*L_xx*(x - x_plus), where x_plus is the
unique minimizer above; the gradient norm is a stationarity certificate for
phi itself. These routines are diagnostics layered on top of the solver
loop, not part of it: they spend extra oracle calls to report an envelope
gradient with an explicit error bar.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .fgm import (CallCounters, InexactOracle, restart_fgm,
                  restart_params_from_gap, restart_params_from_radius)
from .geometry import Array, FeasibleSet, as_point, project
from .saddle import ProblemSpec
from .stationarity import stationarity_report

logger = logging.getLogger("minmax_fne")


@dataclass(frozen=True)
class MoreauReport:
    """Envelope-gradient estimate at one anchor point.

    grad_norm is exactly 2*L_xx*||x - x_plus|| for the returned x_plus;
    inner_accuracy is the gap bound targeted on the envelope subproblem, and
    grad_norm_error converts it (plus the dual-regularization bias and the
    inner maximization error) into a bound on |grad_norm - true norm|.
    """

    x_plus: Array
    grad_norm: float
    inner_accuracy: float
    grad_norm_error: float


def moreau_gradient(x, spec: ProblemSpec, inner_tol: float,
                    mode: str = "concave",
                    lambda_y: Optional[float] = None,
                    counters: Optional[CallCounters] = None) -> MoreauReport:
    """Estimate the envelope gradient of the primal max-function at x.

    Minimizes x' -> phi(x') + L_xx*||x' - x||^2 over X by an outer restart
    scheme whose gradient oracle is assembled from an inner y-maximization
    at each query point (the max-function gradient equals the partial
    x-gradient at the inner maximizer). In concave mode the inner problem is
    made strongly concave by a small quadratic pull toward the dual anchor,
    with weight chosen from inner_tol so the induced bias stays inside the
    reported error bar; in strongly-concave mode `lambda_y` is the
    objective's own modulus and no pull is added.

    Parameters
    ----------
    x : ndarray
        Anchor point, in X.
    spec : ProblemSpec
    inner_tol : float
        Target gap on the envelope subproblem; the distance error scales
        like sqrt(2*inner_tol/L_xx).
    mode : {"concave", "strongly-concave"}
    lambda_y : float, optional
        Strong-concavity modulus for strongly-concave mode.
    counters : CallCounters, optional

    Returns
    -------
    MoreauReport
    """
    if inner_tol <= 0.0:
        raise ValueError("inner tolerance must be positive")
    x = as_point(x, dim=spec.X.dim)
    if not spec.X.contains(x):
        raise ValueError("anchor must lie in X")
    L = spec.L_xx
    dist_scale = math.sqrt(2.0 * inner_tol / L)

    if mode == "strongly-concave":
        if lambda_y is None or lambda_y <= 0.0:
            raise ValueError(
                "strongly-concave mode needs a positive lambda_y")
        mu_in = float(lambda_y)
        reg_in = 0.0
        bias = 0.0
    elif mode == "concave":
        # pull weight keeps the regularization bias R_y*sqrt(mu/L) at or
        # under a third of the distance scale
        mu_in = 2.0 * inner_tol / (9.0 * spec.R_y ** 2)
        reg_in = mu_in
        bias = spec.R_y * math.sqrt(mu_in / L)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    L_in = spec.L_yy + reg_in
    kappa_in = L_in / mu_in
    # inner maximization accuracy: the y-error enters the outer gradient
    # through the coupling constant, and a gradient error e shifts the
    # strongly convex argmin by at most e / L_xx
    if spec.L_xy > 0.0:
        y_dist_tol = L * dist_scale / (6.0 * spec.L_xy)
    else:
        y_dist_tol = spec.R_y
    eps_in = 3.0 * L_in * min(y_dist_tol, spec.R_y)
    T_in, S_in = restart_params_from_radius(kappa_in, L_in, 2.0 * spec.R_y,
                                            eps_in)

    def maximize_dual(x_query: Array) -> Array:
        def neg_grad(y_pt: Array) -> Array:
            if counters is not None:
                counters.grad += 1
            return -(spec.oracle_gy(x_query, y_pt)
                     - reg_in * (y_pt - spec.ybar))

        oracle = InexactOracle(grad_fn=neg_grad, smoothness=L_in)
        return restart_fgm(spec.ybar, spec.Y, 1.0 / L_in, T_in, S_in,
                           oracle, counters=counters)

    def value_at(x_query: Array) -> float:
        y_best = maximize_dual(x_query)
        return float(spec.oracle_F(x_query, y_best))

    # outer restart on the strongly convex subproblem: weak convexity L is
    # overcome by the 2L-weighted pull, leaving modulus L
    L_g = 3.0 * L + spec.L_xy ** 2 / mu_in
    kappa_g = L_g / L
    gap_slack = eps_in ** 2 / (9.0 * L_in)
    gap0 = (spec.Delta + max(0.0, value_at(x) - value_at(spec.x0))
            + reg_in * spec.R_y ** 2 / 2.0 + gap_slack + 1e-12)
    eps_o = math.sqrt(18.0 * L_g * inner_tol)
    T_o = max(1, int(math.ceil(math.sqrt(40.0 * kappa_g))))
    S_o = restart_params_from_gap(kappa_g, L_g, gap0, eps_o)

    def env_grad(x_query: Array) -> Array:
        y_best = maximize_dual(x_query)
        if counters is not None:
            counters.grad += 1
        return spec.oracle_gx(x_query, y_best) + 2.0 * L * (x_query - x)

    oracle_g = InexactOracle(grad_fn=env_grad, smoothness=L_g)
    try:
        x_plus = restart_fgm(x, spec.X, 1.0 / L_g, T_o, S_o, oracle_g,
                             counters=counters)
    except ArithmeticError as exc:
        raise ArithmeticError(
            f"envelope subproblem solve at the given anchor failed: {exc}"
        ) from exc

    grad_norm = 2.0 * L * float(np.linalg.norm(x - x_plus))
    dist_bound = dist_scale + bias + dist_scale / 6.0
    report = MoreauReport(x_plus=x_plus, grad_norm=grad_norm,
                          inner_accuracy=inner_tol,
                          grad_norm_error=2.0 * L * dist_bound)
    logger.debug("moreau_gradient: grad_norm=%.6g error_bar=%.3g "
                 "T_in=%d S_in=%d T_o=%d S_o=%d",
                 grad_norm, report.grad_norm_error, T_in, S_in, T_o, S_o)
    return report


def constrained_concavity_check(h: Callable[[Array], Tuple[float, Array]],
                                y, y_prime, L: float,
                                Y: FeasibleSet) -> Tuple[float, float]:
    """Evaluate both sides of the constrained-concavity inequality.

    For a concave h and feasible y, y', the increment h(y') - h(y) is
    bounded by the inner product of the projected-ascent displacement

        zeta = L * (proj_Y(y + grad_h(y)/L) - y)

    with y' - y, plus (S^2 - W^2) / (2L) where S and W are the strong and
    weak stationarity measures of -grad_h(y) at y. Returns (lhs, rhs); the
    inequality lhs <= rhs holds up to roundoff for genuinely concave h.

    The h oracle maps a point to a (value, gradient) pair.
    """
    if L <= 0.0:
        raise ValueError("curvature constant must be positive")
    y = as_point(y, dim=Y.dim)
    y_prime = as_point(y_prime, dim=Y.dim)
    if not (Y.contains(y) and Y.contains(y_prime)):
        raise ValueError("both evaluation points must lie in Y")

    val_y, grad_y = h(y)
    val_yp, _ = h(y_prime)
    lhs = float(val_yp) - float(val_y)

    rep = stationarity_report(y, -grad_y, L, Y)
    zeta = L * (project(Y, y + grad_y / L) - y)
    rhs = float(np.dot(zeta, y_prime - y)) \
        + (rep.strong ** 2 - rep.weak ** 2) / (2.0 * L)
    return lhs, rhs


def epsilon_y_for_moreau(eps_x: float, spec: ProblemSpec) -> float:
    """Dual accuracy making the equilibrium certify envelope stationarity.

    Returns min(eps_x^2 / (L_xx * R_y), eps_x * sqrt(L_yy / L_xx)). Running
    fne_search with this eps_y makes the envelope gradient norm at the
    returned primal point O(eps_x).
    """
    if eps_x <= 0.0:
        raise ValueError("accuracy target must be positive")
    return min(eps_x ** 2 / (spec.L_xx * spec.R_y),
               eps_x * math.sqrt(spec.L_yy / spec.L_xx))
