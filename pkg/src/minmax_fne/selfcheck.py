"""Fast invariant suite behind the CLI `check` subcommand.

Each check returns a list of failure descriptions (empty on success). The
suite favors exact structural invariants (idempotence, feasibility, counter
arithmetic, closed forms) over statistical ones so a pristine build passes
deterministically in seconds.
"""

from __future__ import annotations

import math
from typing import Callable, List

import numpy as np

from .bregman import (bregman_div, bregman_prox, euclidean_dgf, lp_dgf,
                      strong_measure_bregman)
from .fgm import CallCounters, InexactOracle, fgm
from .geometry import FeasibleSet, project, prox_map
from .moreau import constrained_concavity_check, moreau_gradient
from .problems import build_problem, finite_diff_check
from .saddle import compute_schedule, fne_search
from .stationarity import stationarity_report, strong_measure, weak_measure


def _sample_sets(rng: np.random.Generator) -> List[FeasibleSet]:
    return [
        FeasibleSet.whole_space(3),
        FeasibleSet.box(np.array([-1.0, 0.0, 0.5]),
                        np.array([1.0, 2.0, 1.5])),
        FeasibleSet.ball(rng.standard_normal(3) * 0.3, 1.2),
        FeasibleSet.simplex(4, scale=1.0),
        FeasibleSet.l1_ball(np.zeros(3), 0.8),
    ]


def check_geometry(seed: int = 0) -> List[str]:
    rng = np.random.default_rng(seed)
    fails: List[str] = []
    for fs in _sample_sets(rng):
        pts = [rng.standard_normal(fs.dim) * 2.0 for _ in range(20)]
        for z in pts:
            p = project(fs, z)
            if not fs.contains(p):
                fails.append(f"geometry: projection left {fs.kind}")
            p2 = project(fs, p)
            if np.linalg.norm(p2 - p) > 1e-12:
                fails.append(f"geometry: projection onto {fs.kind} "
                             "is not idempotent")
        for za, zb in zip(pts[:10], pts[10:]):
            pa, pb = project(fs, za), project(fs, zb)
            if (np.linalg.norm(pa - pb)
                    > np.linalg.norm(za - zb) + 1e-12):
                fails.append(f"geometry: projection onto {fs.kind} "
                             "is expansive")
        if fs.kind == "simplex":
            s = float(np.sum(project(fs, rng.standard_normal(fs.dim))))
            if abs(s - 1.0) > 1e-12:
                fails.append("geometry: simplex projection sum off scale")
        if fs.kind == "l1-ball":
            p = project(fs, rng.standard_normal(fs.dim) * 3.0)
            if float(np.sum(np.abs(p - fs.center))) > fs.radius + 1e-12:
                fails.append("geometry: l1 projection outside the ball")
    return fails


def check_stationarity(seed: int = 1) -> List[str]:
    rng = np.random.default_rng(seed)
    fails: List[str] = []
    for fs in _sample_sets(rng):
        for _ in range(40):
            z = project(fs, rng.standard_normal(fs.dim))
            zeta = rng.standard_normal(fs.dim)
            L = float(rng.uniform(0.2, 5.0))
            rep = stationarity_report(z, zeta, L, fs)
            if rep.weak > rep.strong + 1e-10:
                fails.append(f"stationarity: weak exceeds strong on "
                             f"{fs.kind}")
            s_hi = strong_measure(z, zeta, 2.0 * L, fs)
            if rep.strong > s_hi + 1e-10:
                fails.append("stationarity: strong measure decreased in L")
        if fs.kind == "whole-space":
            z = rng.standard_normal(fs.dim)
            zeta = rng.standard_normal(fs.dim)
            nrm = float(np.linalg.norm(zeta))
            if abs(strong_measure(z, zeta, 1.7, fs) - nrm) > 1e-10 \
                    or abs(weak_measure(z, zeta, 1.7, fs) - nrm) > 1e-10:
                fails.append("stationarity: free-space measures miss the "
                             "gradient norm")
    return fails


def check_fgm(seed: int = 2) -> List[str]:
    fails: List[str] = []
    counters = CallCounters()
    calls = [0]

    def grad(z):
        calls[0] += 1
        counters.grad += 1
        return z

    fs = FeasibleSet.whole_space(4)
    z0 = np.full(4, 2.0)
    oracle = InexactOracle(grad_fn=grad, smoothness=1.0)
    z1 = fgm(z0, fs, 1.0, 1, oracle, counters=counters)
    if np.linalg.norm(z1) > 1e-14:
        fails.append("fgm: single unit step on the identity-curvature "
                     "quadratic missed the minimizer")
    if calls[0] != 1 or counters.proj != 2:
        fails.append("fgm: call accounting off for T=1")
    calls[0] = 0
    counters = CallCounters()

    def grad2(z):
        calls[0] += 1
        counters.grad += 1
        return z

    fgm(z0, fs, 0.7, 13, InexactOracle(grad_fn=grad2, smoothness=1.0),
        counters=counters)
    if calls[0] != 13 or counters.proj != 26:
        fails.append("fgm: gradient/prox counts off for T=13")
    return fails


def check_boundary_gap(seed: int = 3) -> List[str]:
    fails: List[str] = []
    Y = FeasibleSet.box(np.array([-1.0]), np.array([0.0]))
    for a, eps in [(1.0, 0.5), (2.0, 0.25), (0.5, 0.125)]:
        y_hat = np.array([-eps])
        grad_h = np.array([a + eps])  # gradient of -(y-a)^2/2 at -eps
        rep = stationarity_report(y_hat, -grad_h, 1.0, Y)
        if abs(rep.strong ** 2 - (2 * a * eps + eps ** 2)) > 1e-12:
            fails.append(f"boundary family: strong measure off at a={a}")
        if abs(rep.weak - eps) > 1e-12:
            fails.append(f"boundary family: weak measure off at a={a}")

        def h(y, a=a):
            return -0.5 * (y[0] - a) ** 2, np.array([-(y[0] - a)])

        lhs, rhs = constrained_concavity_check(h, y_hat, np.zeros(1), 1.0, Y)
        if abs(lhs - (a * eps + 0.5 * eps ** 2)) > 1e-12 \
                or abs(rhs - (eps ** 2 + a * eps)) > 1e-12:
            fails.append(f"boundary family: concavity bound sides off at "
                         f"a={a}")
    return fails


def check_saddle_accounting(seed: int = 4) -> List[str]:
    fails: List[str] = []
    inst = build_problem("scalar-boundary", seed=seed)
    sched = compute_schedule(inst.spec, 1.0, 1.0)
    if sched.T_o != 11:
        fails.append("saddle: inner epoch length is not 11")
    x_hat, y_hat, trace = fne_search(inst.spec, 1.0, 1.0,
                                     termination="adaptive")
    per_outer = (sched.S_y * sched.Tbar_y * (sched.T_o * sched.S_o + 1)
                 + sched.T_o * sched.S_o + 2)
    if trace.status != "converged" or len(trace.rows) != 1:
        fails.append("saddle: adaptive run on the inert-primal family did "
                     "not stop at the first outer iterate")
    if trace.grad_calls != per_outer:
        fails.append("saddle: measured gradient calls disagree with the "
                     "declared per-iteration arithmetic")
    if trace.rows[-1].grad_calls_cum != trace.grad_calls \
            or trace.rows[-1].proj_calls_cum != trace.proj_calls:
        fails.append("saddle: trace cumulative counters disagree with "
                     "totals")
    if trace.S_y_final > 5.0 * 1.0:
        fails.append("saddle: dual stationarity above its guarantee")
    return fails


def check_bregman(seed: int = 5) -> List[str]:
    rng = np.random.default_rng(seed)
    fails: List[str] = []
    d = 6
    geo_e = euclidean_dgf(d)
    ball = FeasibleSet.ball(np.zeros(d), 1.5)
    for _ in range(25):
        z = project(ball, rng.standard_normal(d))
        zp = rng.standard_normal(d)
        zeta = rng.standard_normal(d)
        L = float(rng.uniform(0.3, 3.0))
        if abs(bregman_div(geo_e, zp, z)
               - 0.5 * np.sum((zp - z) ** 2)) > 1e-12:
            fails.append("bregman: Euclidean divergence off")
        if np.linalg.norm(bregman_prox(z, zeta, ball, geo_e)
                          - prox_map(z, zeta, ball)) > 1e-12:
            fails.append("bregman: Euclidean prox reduction off")
        if abs(strong_measure_bregman(z, zeta, L, ball, geo_e)
               - strong_measure(z, zeta, L, ball)) > 1e-12:
            fails.append("bregman: Euclidean measure reduction off")

    d = 10
    geo = lp_dgf(d)
    free = FeasibleSet.whole_space(d)
    # certified l1 strong-convexity modulus of this O(1)-scaled geometry
    # (see the lp_dgf docstring); the unit modulus fails by a factor e
    modulus = 1.0 / (math.e * math.log(d))
    for _ in range(60):
        z = rng.standard_normal(d)
        zp = rng.standard_normal(d)
        if bregman_div(geo, zp, z) \
                < 0.5 * modulus * np.sum(np.abs(zp - z)) ** 2 - 1e-10:
            fails.append("bregman: lp divergence under the certified l1 "
                         "strong-convexity bound")
        w = geo.grad_omega_conj(geo.grad_omega(z))
        if np.linalg.norm(w - z, ord=1) > 1e-10 * max(
                1.0, np.linalg.norm(z, ord=1)):
            fails.append("bregman: gradient map inverse off")
        zeta = rng.standard_normal(d) * 0.5
        zstar = bregman_prox(z, zeta, free, geo)
        res = geo.grad_omega(zstar) - (geo.grad_omega(z) - zeta)
        if np.linalg.norm(res, ord=np.inf) > 1e-10:
            fails.append("bregman: free-space prox optimality residual "
                         "too large")
    return fails


def check_problems(seed: int = 6) -> List[str]:
    fails: List[str] = []
    inst = build_problem("quad-bilinear", seed=seed)
    rng = np.random.default_rng(seed + 1)
    y_fix = project(inst.spec.Y, rng.standard_normal(inst.spec.Y.dim))
    pts = [project(inst.spec.X, rng.standard_normal(inst.spec.X.dim))
           for _ in range(5)]
    err = finite_diff_check(lambda x: inst.spec.oracle_gx(x, y_fix),
                            lambda x: inst.spec.oracle_F(x, y_fix),
                            pts, h=1e-5)
    if err > 1e-7:
        fails.append("problems: quadratic x-gradient fails the finite-"
                     "difference check")
    again = build_problem("quad-bilinear", seed=seed)
    probe = rng.standard_normal(inst.spec.X.dim)
    y_probe = project(inst.spec.Y, rng.standard_normal(inst.spec.Y.dim))
    if inst.spec.oracle_F(probe, y_probe) \
            != again.spec.oracle_F(probe, y_probe):
        fails.append("problems: rebuilding from the same seed is not "
                     "bit-reproducible")
    return fails


def check_moreau(seed: int = 7) -> List[str]:
    fails: List[str] = []
    mu = 0.1
    spec_huber = _huber_spec(mu)
    rep = moreau_gradient(np.array([2.0]), spec_huber, 1e-6,
                          mode="strongly-concave", lambda_y=mu)
    if abs(rep.grad_norm - 1.0) > rep.grad_norm_error + 1e-9:
        fails.append("moreau: Huber envelope gradient outside its error "
                     "bar")
    two_l = 2.0 * spec_huber.L_xx
    zeta = two_l * (np.array([2.0]) - rep.x_plus)
    srep = stationarity_report(np.array([2.0]), zeta, two_l, spec_huber.X)
    if abs(srep.strong - rep.grad_norm) > 1e-8 \
            or abs(srep.weak - rep.grad_norm) > 1e-8:
        fails.append("moreau: envelope-gradient identity broken")
    return fails


def _huber_spec(mu: float):
    """Bilinear coupling capped by a strongly concave dual: phi is Huber."""
    from .saddle import ProblemSpec
    return ProblemSpec(
        oracle_F=lambda x, y: float(x[0] * y[0] - 0.5 * mu * y[0] ** 2),
        oracle_gx=lambda x, y: np.array([y[0]]),
        oracle_gy=lambda x, y: np.array([x[0] - mu * y[0]]),
        X=FeasibleSet.box(np.array([-4.0]), np.array([4.0])),
        Y=FeasibleSet.box(np.array([-1.0]), np.array([1.0])),
        L_xx=0.5, L_yy=mu, L_xy=1.0, R_y=1.0, Delta=0.01,
        x0=np.zeros(1))


CHECKS: List[Callable[[], List[str]]] = [
    check_geometry, check_stationarity, check_fgm, check_boundary_gap,
    check_saddle_accounting, check_bregman, check_problems, check_moreau,
]


def run_all() -> List[str]:
    """Run every invariant check; returns all failure descriptions."""
    failures: List[str] = []
    for chk in CHECKS:
        failures.extend(chk())
    return failures
