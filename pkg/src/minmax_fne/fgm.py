"""Accelerated gradient method with inexact first-order information.

The inner workhorse is a fast gradient method that tolerates an additive
accuracy budget delta in its oracle: per iteration it makes exactly one
gradient call and two prox-mapping calls, anchored at the epoch's starting
point through a running weighted-gradient sum. A restart wrapper turns the
sublinear epoch guarantee into linear convergence on strongly convex
problems (each epoch halves the distance to the minimizer), and a
proximal-point operator builds on the restart scheme to approximately
minimize a weakly-convex function plus a quadratic pull toward the anchor.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from .geometry import Array, FeasibleSet, as_point, prox_map

logger = logging.getLogger("minmax_fne")


@dataclass
class CallCounters:
    """Mutable tally of oracle and projection work.

    Gradient calls are incremented by the counting wrappers around problem
    oracles (each partial-gradient evaluation is one call); projection calls
    are incremented by the solver loops (two per inner iteration).
    """

    grad: int = 0
    proj: int = 0


@dataclass(frozen=True)
class InexactOracle:
    """First-order oracle with declared additive accuracy.

    Attributes
    ----------
    grad_fn : callable
        Approximate gradient map z -> g(z).
    smoothness : float
        Curvature constant L > 0 of the underlying objective.
    delta : float
        Declared additive accuracy (0 for an exact oracle).
    value_fn : callable, optional
        Approximate value map; never used by the solver loops, only by
        sandwich-style tests.
    """

    grad_fn: Callable[[Array], Array]
    smoothness: float
    delta: float = 0.0
    value_fn: Optional[Callable[[Array], float]] = None

    def __post_init__(self):
        if self.smoothness <= 0.0:
            raise ValueError("smoothness constant must be positive")
        if self.delta < 0.0:
            raise ValueError("oracle accuracy must be nonnegative")


@dataclass(frozen=True)
class FgmConfig:
    """Stepsize / iteration / restart bundle for the restart scheme."""

    gamma: float
    T: int
    S: int

    def __post_init__(self):
        if self.gamma <= 0.0:
            raise ValueError("stepsize must be positive")
        if self.T < 1 or self.S < 1:
            raise ValueError("iteration and restart counts must be >= 1")


# ----------------- core loops -----------------

def fgm(z0, feasible: FeasibleSet, gamma: float, T: int,
        oracle: InexactOracle, counters: Optional[CallCounters] = None
        ) -> Array:
    """One epoch of the accelerated method: T iterations from z0.

    Parameters
    ----------
    z0 : ndarray
        Feasible starting point; also the anchor of the running-sum prox step.
    feasible : FeasibleSet
    gamma : float
        Stepsize (1/L for an L-smooth objective).
    T : int
        Iteration count; exactly T gradient calls and 2T prox calls are made.
    oracle : InexactOracle
    counters : CallCounters, optional
        Projection tally (gradients are counted by the oracle's own wrapper).

    Returns
    -------
    ndarray
        The final iterate z_T.
    """
    if gamma <= 0.0 or T < 1:
        raise ValueError("need a positive stepsize and at least one iteration")
    z = as_point(z0, dim=feasible.dim).copy()
    if not feasible.contains(z):
        raise ValueError("start point must be feasible")
    z_anchor = z.copy()
    G = np.zeros_like(z)
    for t in range(T):
        u = prox_map(z_anchor, gamma * G, feasible)
        tau = 2.0 * (t + 2) / ((t + 1) * (t + 4))
        v = tau * u + (1.0 - tau) * z
        g = (0.5 * (t + 2)) * np.asarray(oracle.grad_fn(v), dtype=float)
        if not np.all(np.isfinite(g)):
            raise ArithmeticError(
                f"non-finite gradient at inner iteration t={t}")
        w = prox_map(u, gamma * g, feasible)
        z = tau * w + (1.0 - tau) * z
        G = G + g
        if counters is not None:
            counters.proj += 2
    return z


def restart_fgm(z0, feasible: FeasibleSet, gamma: float, T: int, S: int,
                oracle: InexactOracle,
                counters: Optional[CallCounters] = None) -> Array:
    """S warm-started epochs of `fgm`, T iterations each.

    Total cost: S*T gradient calls, 2*S*T prox calls.
    """
    if S < 1:
        raise ValueError("need at least one restart epoch")
    z = as_point(z0, dim=feasible.dim)
    for s in range(S):
        try:
            z = fgm(z, feasible, gamma, T, oracle, counters=counters)
        except ArithmeticError as exc:
            raise ArithmeticError(f"epoch s={s}: {exc}") from exc
    return z


# ----------------- parameter selection -----------------

def _ceil_at_least_one(x: float) -> int:
    if not math.isfinite(x):
        raise ValueError(f"non-finite iteration bound {x}")
    return max(1, int(math.ceil(x)))


def restart_params_from_radius(kappa: float, L: float, R: float,
                               eps: float) -> Tuple[int, int]:
    """Epoch length and restart count from a known starting radius.

    T = ceil(sqrt(40*kappa)) guarantees every epoch halves the distance to
    the minimizer; S = ceil(log2(3*L*R/eps)) epochs then push the distance
    below eps/(3L). Both are clamped to at least 1.
    """
    if kappa < 1.0 or L <= 0.0 or R <= 0.0 or eps <= 0.0:
        raise ValueError("need kappa >= 1 and positive L, R, eps")
    T = _ceil_at_least_one(math.sqrt(40.0 * kappa))
    S = _ceil_at_least_one(math.log2(3.0 * L * R / eps)) if 3.0 * L * R > eps \
        else 1
    return T, S


def restart_params_from_gap(kappa: float, L: float, gap: float,
                            eps: float) -> int:
    """Restart count from an initial objective-gap bound instead of a radius.

    Strong convexity converts the gap into a radius bound R^2 <= 2*kappa*gap/L,
    giving S = ceil(0.5*log2(18*kappa*L*gap/eps^2)), clamped to >= 1.
    """
    if kappa < 1.0 or L <= 0.0 or gap <= 0.0 or eps <= 0.0:
        raise ValueError("need kappa >= 1 and positive L, gap, eps")
    # log-space to tolerate extreme eps
    val = (math.log2(18.0) + math.log2(kappa) + math.log2(L) + math.log2(gap)
           - 2.0 * math.log2(eps))
    return max(1, int(math.ceil(0.5 * val)))


# ----------------- proximal-point operator -----------------

def prox_point_via_fgm(x, grad_phi: Callable[[Array], Array], L: float,
                       feasible: FeasibleSet, eps: float, gap_bound: float,
                       counters: Optional[CallCounters] = None) -> Array:
    """Approximate proximal-point step: minimize phi + L*||. - x||^2.

    The regularized objective is L-strongly convex and 3L-smooth (condition
    number at most 3), so the restart scheme runs with stepsize 1/(3L), epoch
    length 11 and S = ceil(0.5*log2(72*L*gap_bound/eps^2)) restarts. The
    output x_plus approximates the exact proximal point to eps/(6L) in
    distance, eps/2 in the strong measure of the regularized objective, and
    eps^2/(24L) in objective gap.

    Parameters
    ----------
    x : ndarray
        Anchor point (feasible).
    grad_phi : callable
        Exact gradient of the L-smooth (possibly nonconvex) phi.
    L : float
        Smoothness constant of phi; also the regularization weight.
    feasible : FeasibleSet
    eps : float
        Target accuracy driving the restart count.
    gap_bound : float
        Upper bound on the regularized objective's initial gap at x. A crude
        bound is fine; it only enters logarithmically.
    counters : CallCounters, optional
    """
    if L <= 0.0 or eps <= 0.0 or gap_bound <= 0.0:
        raise ValueError("need positive L, eps, and gap_bound")
    x = as_point(x, dim=feasible.dim)
    T = 11
    S = max(1, int(math.ceil(0.5 * (
        math.log2(72.0) + math.log2(L) + math.log2(gap_bound)
        - 2.0 * math.log2(eps)))))

    def grad_reg(z: Array) -> Array:
        return grad_phi(z) + 2.0 * L * (z - x)

    oracle = InexactOracle(grad_fn=grad_reg, smoothness=3.0 * L)
    logger.debug("prox-point via restarts: T=%d S=%d", T, S)
    return restart_fgm(x, feasible, 1.0 / (3.0 * L), T, S, oracle,
                       counters=counters)
