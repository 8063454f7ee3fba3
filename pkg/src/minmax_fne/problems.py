"""Benchmark problem families and oracle checking utilities.

Each family builds a deterministic instance from a 64-bit seed: one
generator drives all draws, smoothness constants come from spectral norms
of the generated matrices, and the primal-gap bound Delta is either exact
(closed-form saddle) or a documented analytic over-estimate. Regenerating
an instance from the same (name, seed, dims) is bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .geometry import Array, FeasibleSet, as_point
from .saddle import ProblemSpec

FAMILIES = ("quad-bilinear", "max-of-quadratics", "scalar-boundary",
            "strongly-concave-toy")


@dataclass(frozen=True)
class ProblemInstance:
    """A named, seeded problem with optional reference solution.

    known_solution, when present, is an (x_star, y_star) pair whose origin
    is documented in `provenance`. strong_concavity carries the dual
    modulus for instances whose objective is strongly concave in y, so
    drivers can run them in strongly-concave mode without re-deriving it.
    """

    name: str
    spec: ProblemSpec
    seed: int
    known_solution: Optional[Tuple[Array, Array]] = None
    provenance: str = ""
    strong_concavity: Optional[float] = None


def _orthogonal(rng: np.random.Generator, d: int) -> Array:
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def _sym_with_spectrum(rng: np.random.Generator, eigs: Array) -> Array:
    v = _orthogonal(rng, eigs.size)
    return (v * eigs) @ v.T


def _quad_bilinear(seed: int, d_x: int, d_y: int) -> ProblemInstance:
    """Convex-concave quadratic with bilinear coupling on two balls.

    F(x, y) = x'Qx/2 + y'(Ax - b) - y'Py/2 with Q, P positive definite.
    The unconstrained saddle point solves two linear systems; it is
    attached as known_solution when it lies strictly inside both balls.
    """
    rng = np.random.default_rng(seed)
    Q = _sym_with_spectrum(rng, rng.uniform(0.1, 1.0, size=d_x))
    P = _sym_with_spectrum(rng, rng.uniform(0.02, 0.05, size=d_y))
    A = rng.standard_normal((d_y, d_x))
    A *= 0.3 / np.linalg.norm(A, 2)
    b = rng.standard_normal(d_y)
    b *= 0.05 / np.linalg.norm(b)

    X = FeasibleSet.ball(np.zeros(d_x), 2.0)
    Y = FeasibleSet.ball(np.zeros(d_y), 1.0)
    L_xx = float(np.linalg.norm(Q, 2))
    L_yy = float(np.linalg.norm(P, 2))
    L_xy = float(np.linalg.norm(A, 2))
    # crude but valid: the objective's total range over X x Y bounds the
    # primal gap from above
    Delta = float(0.5 * L_xx * 4.0 + (L_xy * 2.0 + np.linalg.norm(b))
                  + 0.5 * L_yy) * 2.0

    spec = ProblemSpec(
        oracle_F=lambda x, y: float(0.5 * x @ Q @ x + y @ (A @ x - b)
                                    - 0.5 * y @ P @ y),
        oracle_gx=lambda x, y: Q @ x + A.T @ y,
        oracle_gy=lambda x, y: A @ x - b - P @ y,
        X=X, Y=Y, L_xx=L_xx, L_yy=L_yy, L_xy=L_xy, R_y=1.0, Delta=Delta,
        x0=np.zeros(d_x))

    known = None
    note = ""
    x_star = np.linalg.solve(Q + A.T @ np.linalg.solve(P, A),
                             A.T @ np.linalg.solve(P, b))
    y_star = np.linalg.solve(P, A @ x_star - b)
    if np.linalg.norm(x_star) < 1.9 and np.linalg.norm(y_star) < 0.9:
        known = (x_star, y_star)
        note = ("unconstrained stationary point from two linear solves, "
                "verified strictly interior to both balls")
    return ProblemInstance(name="quad-bilinear", spec=spec, seed=seed,
                           known_solution=known, provenance=note)


def _strongly_concave_toy(seed: int, d: int) -> ProblemInstance:
    """Strongly concave dual with a closed-form saddle point.

    F(x, y) = x'Qx/2 + y'(Ax - b) - mu*||y||^2/2 on free x and the unit
    ball in y. Maximizing y in closed form gives the convex primal
    phi(x) = x'Qx/2 + ||Ax - b||^2/(2 mu), so x_star, y_star, and the exact
    primal gap at x0 = 0 all come from one linear solve.
    """
    mu = 0.5
    rng = np.random.default_rng(seed)
    Q = _sym_with_spectrum(rng, rng.uniform(0.5, 1.0, size=d))
    A = rng.standard_normal((d, d))
    A *= 0.3 / np.linalg.norm(A, 2)
    b = rng.standard_normal(d)
    b *= 0.1 / np.linalg.norm(b)

    x_star = np.linalg.solve(Q + A.T @ A / mu, A.T @ b / mu)
    y_star = (A @ x_star - b) / mu

    def phi(x: Array) -> float:
        r = A @ x - b
        return float(0.5 * x @ Q @ x + 0.5 * (r @ r) / mu)

    assert np.linalg.norm(y_star) <= 0.9, "saddle must be interior in y"
    assert np.linalg.norm(b) / mu <= 0.9, "y-maximizer at x0 must be interior"
    Delta = phi(np.zeros(d)) - phi(x_star) + 1e-9

    spec = ProblemSpec(
        oracle_F=lambda x, y: float(0.5 * x @ Q @ x + y @ (A @ x - b)
                                    - 0.5 * mu * (y @ y)),
        oracle_gx=lambda x, y: Q @ x + A.T @ y,
        oracle_gy=lambda x, y: A @ x - b - mu * y,
        X=FeasibleSet.whole_space(d), Y=FeasibleSet.ball(np.zeros(d), 1.0),
        L_xx=float(np.linalg.norm(Q, 2)), L_yy=mu,
        L_xy=float(np.linalg.norm(A, 2)), R_y=1.0, Delta=Delta,
        x0=np.zeros(d))
    return ProblemInstance(
        name="strongly-concave-toy", spec=spec, seed=seed,
        known_solution=(x_star, y_star),
        provenance=("saddle from the linear solve (Q + A'A/mu) x = A'b/mu "
                    "with y = (Ax - b)/mu, verified interior"),
        strong_concavity=mu)


def _max_of_quadratics(seed: int, d: int, k: int) -> ProblemInstance:
    """Weighted maximum of mildly nonconvex quartics over a ball.

    F(x, y) = sum_i y_i f_i(x) with y on the simplex and
    f_i(x) = alpha_i ||x - c_i||^4 / 4 + (x - c_i)'B_i(x - c_i)/2 + d_i;
    each B_i has a few small negative eigenvalues, so individual f_i are
    nonconvex while the quartic term keeps them bounded below. Smoothness
    constants are closed-form bounds from the generated spectra; Delta uses
    the analytic lower bound f_i >= d_i - ||B_i||^2 / (4 alpha_i).
    """
    rng = np.random.default_rng(seed)
    alphas = rng.uniform(0.005, 0.01, size=k)
    centers = rng.standard_normal((k, d))
    centers *= (rng.uniform(0.1, 0.3, size=k)
                / np.linalg.norm(centers, axis=1))[:, None]
    B = np.empty((k, d, d))
    for i in range(k):
        B[i] = _sym_with_spectrum(rng, rng.uniform(-0.01, 0.015, size=d))
    B_norms = np.array([np.linalg.norm(B[i], 2) for i in range(k)])
    offsets = rng.uniform(0.0, 0.05, size=k)

    reach = 1.0 + np.linalg.norm(centers, axis=1)  # max ||x - c_i|| on X
    L_xx = float(np.max(3.0 * alphas * reach ** 2 + B_norms))
    grad_caps = alphas * reach ** 3 + B_norms * reach
    L_xy = float(np.sqrt(np.sum(grad_caps ** 2)))
    # the objective is linear in the weights, so any positive constant is a
    # valid curvature declaration; one of the couplings' order keeps the
    # dual schedule and the y-side measure target balanced
    L_yy = 0.05

    def f_values(x: Array) -> Array:
        U = x[None, :] - centers
        sq = np.sum(U * U, axis=1)
        quad = 0.5 * np.einsum("ij,ijk,ik->i", U, B, U)
        return 0.25 * alphas * sq ** 2 + quad + offsets

    def f_grads(x: Array) -> Array:
        U = x[None, :] - centers
        sq = np.sum(U * U, axis=1)
        return (alphas * sq)[:, None] * U + np.einsum("ijk,ik->ij", B, U)

    x0 = np.zeros(d)
    lower = float(np.max(offsets - B_norms ** 2 / (4.0 * alphas)))
    Delta = float(np.max(f_values(x0))) - lower + 1e-9

    spec = ProblemSpec(
        oracle_F=lambda x, y: float(y @ f_values(x)),
        oracle_gx=lambda x, y: y @ f_grads(x),
        oracle_gy=lambda x, y: f_values(x),
        X=FeasibleSet.ball(np.zeros(d), 1.0), Y=FeasibleSet.simplex(k),
        L_xx=L_xx, L_yy=L_yy, L_xy=L_xy,
        R_y=math.sqrt(1.0 - 1.0 / k), Delta=Delta, x0=x0)
    return ProblemInstance(name="max-of-quadratics", spec=spec, seed=seed)


def _scalar_boundary(seed: int, a: float) -> ProblemInstance:
    """One-dimensional family with an inert primal variable.

    F(x, y) = -(y - a)^2 / 2 on X = [-1, 1], Y = [-1, 0]. The maximizing
    player's stationarity measures at points near the upper end of Y have
    closed forms that separate the strong from the weak measure; the zero
    coupling also exercises the schedule's degenerate-coupling path.
    """
    if a <= 0.0:
        raise ValueError("family parameter a must be positive")

    spec = ProblemSpec(
        oracle_F=lambda x, y: float(-0.5 * (y[0] - a) ** 2),
        oracle_gx=lambda x, y: np.zeros(1),
        oracle_gy=lambda x, y: np.array([-(y[0] - a)]),
        X=FeasibleSet.box(np.array([-1.0]), np.array([1.0])),
        Y=FeasibleSet.box(np.array([-1.0]), np.array([0.0])),
        L_xx=1.0, L_yy=1.0, L_xy=0.0, R_y=1.0, Delta=0.01,
        x0=np.zeros(1))
    return ProblemInstance(
        name="scalar-boundary", spec=spec, seed=seed,
        known_solution=(np.zeros(1), np.zeros(1)),
        provenance=("y maximizes a concave parabola with vertex at a > 0, "
                    "clipped to the upper end of Y; x is inert"))


def build_problem(name: str, seed: int = 0,
                  dims: Optional[Dict[str, float]] = None) -> ProblemInstance:
    """Construct a named problem instance deterministically.

    Parameters
    ----------
    name : str
        One of "quad-bilinear" (dims: d_x, d_y), "strongly-concave-toy"
        (dims: d), "max-of-quadratics" (dims: d, k), "scalar-boundary"
        (dims: a).
    seed : int
        64-bit seed; the only source of randomness.
    dims : dict, optional
        Family-specific sizes; defaults are the desk-scale shapes.
    """
    dims = dict(dims or {})
    if name == "quad-bilinear":
        return _quad_bilinear(seed, int(dims.get("d_x", 5)),
                              int(dims.get("d_y", 5)))
    if name == "strongly-concave-toy":
        return _strongly_concave_toy(seed, int(dims.get("d", 5)))
    if name == "max-of-quadratics":
        return _max_of_quadratics(seed, int(dims.get("d", 10)),
                                  int(dims.get("k", 4)))
    if name == "scalar-boundary":
        return _scalar_boundary(seed, float(dims.get("a", 1.0)))
    raise ValueError(f"unknown problem family {name!r}; "
                     f"known: {FAMILIES}")


def finite_diff_check(grad_fn: Callable[[Array], Array],
                      value_fn: Callable[[Array], float],
                      points: Sequence[Array], h: float = 1e-6) -> float:
    """Worst relative gradient error against central differences.

    For each point, every coordinate of the gradient is compared with the
    symmetric difference quotient of the value oracle; the error is
    normalized by the larger of 1 and the gradient's largest entry.
    Returns the maximum over all points.
    """
    if h <= 0.0:
        raise ValueError("difference step h must be positive")
    worst = 0.0
    for pt in points:
        pt = as_point(pt)
        g = as_point(grad_fn(pt), dim=pt.size)
        fd = np.empty_like(pt)
        for i in range(pt.size):
            e = np.zeros_like(pt)
            e[i] = h
            fd[i] = (value_fn(pt + e) - value_fn(pt - e)) / (2.0 * h)
        num = float(np.max(np.abs(fd - g)))
        den = max(1.0, float(np.max(np.abs(g))))
        worst = max(worst, num / den)
    return worst
