"""Acceptance checks: one test per shipped guarantee, each with a wall
clock limit. Every expected value is either closed form, produced by an
independent reference solver in the test body, or checked against an
analytic bound."""

import math
import time

import numpy as np
from numpy.testing import assert_allclose, assert_

from minmax_fne.bregman import (bregman_div, bregman_prox, euclidean_dgf,
                                lp_dgf, strong_measure_bregman)
from minmax_fne.bruteforce import grid_strong_measure
from minmax_fne.fgm import (InexactOracle, fgm, prox_point_via_fgm,
                            restart_params_from_radius)
from minmax_fne.geometry import FeasibleSet, project, prox_map
from minmax_fne.moreau import moreau_gradient
from minmax_fne.problems import build_problem
from minmax_fne.saddle import (ProblemSpec, complexity_factors,
                               compute_schedule, fne_search, solve_reg_dual)
from minmax_fne.stationarity import (fne_check, stationarity_report,
                                     strong_measure)


def _random_quadratics(seed, count, d, eig_lo, eig_hi, radius):
    """Convex quadratics with minimizer from a linear solve."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        evals = rng.uniform(eig_lo, eig_hi, size=d)
        V = np.linalg.qr(rng.standard_normal((d, d)))[0]
        Q = (V * evals) @ V.T
        c = rng.standard_normal(d)
        z_star = np.linalg.solve(Q, c)
        L = float(np.linalg.eigvalsh(Q)[-1])
        u = rng.standard_normal(d)
        z0 = z_star + radius * u / np.linalg.norm(u)
        out.append((Q, c, z_star, L, z0))
    return out


def _qval(Q, c, z):
    return 0.5 * float(z @ Q @ z) - float(c @ z)


def test_criterion_01_accelerated_rate_on_quadratics():
    t0 = time.perf_counter()
    d, R = 50, 1.5
    fs = FeasibleSet.whole_space(d)
    for Q, c, z_star, L, z0 in _random_quadratics(101, 20, d, 0.1, 3.0, R):
        fstar = _qval(Q, c, z_star)
        oracle = InexactOracle(grad_fn=lambda z, Q=Q, c=c: Q @ z - c,
                               smoothness=L)
        for T in (10, 50, 100):
            out = fgm(z0, fs, 1.0 / L, T, oracle)
            gap = _qval(Q, c, out) - fstar
            assert_(gap <= 4.0 * L * R * R / T ** 2,
                    msg=f"T={T}: gap {gap} above 4LR^2/T^2")
    assert_(time.perf_counter() - t0 < 5.0)


def test_criterion_02_rate_survives_declared_oracle_error():
    t0 = time.perf_counter()
    d, R = 50, 1.5
    prng = np.random.default_rng(202)
    for Q, c, z_star, L, z0 in _random_quadratics(101, 20, d, 0.1, 3.0, R):
        fstar = _qval(Q, c, z_star)
        fs = FeasibleSet.ball(z0, 2.0 * R)
        for T in (10, 50, 100):
            delta = L * R * R / (2.0 * T ** 3)
            # a gradient error of norm delta/(2*diam), together with the
            # matching value shift, keeps the two-sided linearization
            # bracket valid on fs with additive slack delta
            r = delta / (2.0 * 4.0 * R)

            def noisy(z, Q=Q, c=c, r=r):
                e = prng.standard_normal(z.size)
                return Q @ z - c + (r / np.linalg.norm(e)) * e

            out = fgm(z0, fs, 1.0 / L, T,
                      InexactOracle(grad_fn=noisy, smoothness=L,
                                    delta=delta))
            gap = _qval(Q, c, out) - fstar
            assert_(gap <= 5.0 * L * R * R / T ** 2,
                    msg=f"T={T}: gap {gap} above 5LR^2/T^2")
    assert_(time.perf_counter() - t0 < 5.0)


def test_criterion_03_restart_scheme_linear_convergence():
    t0 = time.perf_counter()
    d, L, R, eps = 20, 2.0, 2.0, 0.05
    rng = np.random.default_rng(303)
    for kappa in (3.0, 10.0, 100.0):
        for _ in range(3):
            evals = rng.uniform(L / kappa, L, size=d)
            evals[0], evals[1] = L / kappa, L
            V = np.linalg.qr(rng.standard_normal((d, d)))[0]
            Q = (V * evals) @ V.T
            c = rng.standard_normal(d)
            z_star = np.linalg.solve(Q, c)
            u = rng.standard_normal(d)
            z0 = z_star + R * u / np.linalg.norm(u)
            fs = FeasibleSet.ball(z_star, 1.5 * R)
            T, S = restart_params_from_radius(kappa, L, R, eps)
            oracle = InexactOracle(grad_fn=lambda z, Q=Q, c=c: Q @ z - c,
                                   smoothness=L)
            z = z0
            for s in range(1, S + 1):
                z = fgm(z, fs, 1.0 / L, T, oracle)
                assert_(np.linalg.norm(z - z_star)
                        <= 2.0 ** (-s) * R * (1.0 + 1e-9),
                        msg=f"kappa={kappa}: epoch {s} did not halve")
            assert_(np.linalg.norm(z - z_star) <= eps / (3.0 * L))
            assert_(_qval(Q, c, z) - _qval(Q, c, z_star)
                    <= eps ** 2 / (18.0 * L))
            assert_(strong_measure(z, Q @ z - c, L, fs) <= eps / 3.0)
    assert_(time.perf_counter() - t0 < 10.0)


def test_criterion_04_prox_point_operator_on_nonconvex_quartic():
    t0 = time.perf_counter()
    rng = np.random.default_rng(404)
    a = 0.5
    V = np.linalg.qr(rng.standard_normal((3, 3)))[0]
    B = (V * np.array([-0.4, 0.2, 0.6])) @ V.T
    c = 0.3 * rng.standard_normal(3)
    r0 = 2.0
    fs = FeasibleSet.ball(np.zeros(3), r0)
    L = 3.0 * a * r0 ** 2 + float(np.linalg.norm(B, 2))

    def phi(x):
        n2 = float(x @ x)
        return 0.25 * a * n2 * n2 + 0.5 * float(x @ B @ x) + float(c @ x)

    def grad_phi(x):
        return a * float(x @ x) * x + B @ x + c

    x_hat = project(fs, rng.standard_normal(3))

    def reg(x):
        return phi(x) + L * float((x - x_hat) @ (x - x_hat))

    def grad_reg(x):
        return grad_phi(x) + 2.0 * L * (x - x_hat)

    # reference minimizer of the strongly convex regularized subproblem:
    # a million projected gradient steps, then a fixed-point residual guard
    step = 1.0 / (3.0 * L)
    x_ref = x_hat.copy()
    for _ in range(10 ** 6):
        x_ref = x_ref - step * grad_reg(x_ref)
        nrm = math.sqrt(float(x_ref @ x_ref))
        if nrm > r0:
            x_ref *= r0 / nrm
    assert_(np.linalg.norm(x_ref - project(fs, x_ref - step * grad_reg(x_ref)))
            <= 1e-12)
    gap0 = phi(x_hat) - reg(x_ref)

    for eps in (1e-2, 1e-4):
        out = prox_point_via_fgm(x_hat, grad_phi, L, fs, eps, gap0)
        assert_(np.linalg.norm(out - x_ref) <= eps / (6.0 * L))
        assert_(strong_measure(out, grad_reg(out), L, fs) <= eps / 2.0)
        assert_(reg(out) - reg(x_ref) <= eps ** 2 / (24.0 * L))
    assert_(time.perf_counter() - t0 < 30.0)


def _draw_feasible(rng, kind, dim):
    if kind == 0:
        return FeasibleSet.ball(rng.standard_normal(dim),
                                rng.uniform(0.5, 2.0))
    if kind == 1:
        lo = rng.standard_normal(dim) - 1.0
        return FeasibleSet.box(lo, lo + rng.uniform(0.5, 2.0, size=dim))
    if kind == 2 and dim >= 2:
        return FeasibleSet.simplex(dim)
    if kind == 3:
        return FeasibleSet.l1_ball(np.zeros(dim), rng.uniform(0.5, 2.0))
    return FeasibleSet.whole_space(dim)


def test_criterion_05_measure_order_monotonicity_and_grids():
    t0 = time.perf_counter()
    rng = np.random.default_rng(505)
    for i in range(10 ** 4):
        dim = int(rng.integers(1, 7))
        fs = _draw_feasible(rng, i % 5, dim)
        z = project(fs, rng.standard_normal(dim) * 2.0)
        zeta = rng.standard_normal(dim) * (10.0 ** rng.uniform(-1, 1))
        L = 10.0 ** rng.uniform(-1.3, 1.7)
        rep = stationarity_report(z, zeta, L, fs)
        assert_(rep.weak <= rep.strong + 1e-9 * (1.0 + rep.strong),
                msg=f"weak above strong on {fs.kind} (draw {i})")
        if i % 5 == 0:
            # nondecreasing in the curvature constant; the additive floor
            # absorbs sqrt(2L*roundoff) noise at near-stationary draws
            s2 = strong_measure(z, zeta, 2.0 * L, fs)
            assert_(rep.strong <= s2 * (1.0 + 1e-9) + 1e-6,
                    msg=f"not monotone in L on {fs.kind} (draw {i})")
    rng = np.random.default_rng(506)
    for i in range(60):
        dim = int(rng.integers(1, 3))
        fs = _draw_feasible(rng, i % 4, dim)
        if not fs.bounded:
            fs = FeasibleSet.ball(np.zeros(dim), 1.0)
        z = project(fs, rng.standard_normal(dim))
        zeta = rng.standard_normal(dim) * 2.0
        L = 10.0 ** rng.uniform(-0.5, 0.7)
        s = strong_measure(z, zeta, L, fs)
        g = grid_strong_measure(z, zeta, L, fs, refinements=45)
        assert_(abs(s - g) <= 1e-5 * max(1.0, s),
                msg=f"grid disagrees on {fs.kind}: {s} vs {g}")
    assert_(time.perf_counter() - t0 < 10.0)


def test_criterion_06_boundary_family_closed_forms():
    # concave parabola peaking at a >= 0, maximized over [-1, 0]; at the
    # probe point -e every quantity has a closed form, and the gap bound
    # holds with its two sides equal to e^2/2 + a*e and e^2 + a*e
    t0 = time.perf_counter()
    Y = FeasibleSet.box(np.array([-1.0]), np.array([0.0]))
    for a in (0.0, 0.5, 1.0, 10.0):
        for e in (0.1, 0.5, 1.0):
            y_hat = np.array([-e])
            grad_h = np.array([a + e])  # derivative of -(y-a)^2/2 at -e
            rep = stationarity_report(y_hat, -grad_h, 1.0, Y)
            assert_allclose(rep.strong ** 2, 2.0 * a * e + e * e,
                            rtol=1e-12, atol=1e-12)
            assert_allclose(rep.weak, e, rtol=1e-12, atol=1e-12)
            disp = rep.prox_point - y_hat  # projected-step displacement
            assert_allclose(disp, [e], rtol=1e-12, atol=1e-12)
            lhs = (0.0 - (-0.5 * (y_hat[0] - a) ** 2)) - 0.5 * a * a
            assert_allclose(lhs, 0.5 * e * e + a * e, rtol=1e-12, atol=1e-12)
            rhs = float(disp @ (np.zeros(1) - y_hat)) \
                + 0.5 * (rep.strong ** 2 - rep.weak ** 2)
            assert_allclose(rhs, e * e + a * e, rtol=1e-12, atol=1e-12)
            assert_(lhs <= rhs + 1e-12)
    assert_(time.perf_counter() - t0 < 1.0)


def test_criterion_07_end_to_end_equilibrium_search():
    t0 = time.perf_counter()
    runs = [
        (build_problem("strongly-concave-toy", seed=3, dims={"d": 5}),
         "strongly-concave", 0.5),
        (build_problem("max-of-quadratics", seed=5,
                       dims={"d": 10, "k": 4}), "concave", None),
    ]
    for inst, mode, lam in runs:
        x_hat, y_hat, trace = fne_search(
            inst.spec, 1e-2, 1e-2, mode=mode, termination="adaptive",
            lambda_y=lam)
        ok, _, _ = fne_check(x_hat, y_hat, inst.spec, 2e-2, 5e-2)
        assert_(ok, msg=f"{inst.name}: output rejected at (2ex, 5ey)")
        for row in trace.rows:
            assert_(row.S_y <= 5e-2,
                    msg=f"{inst.name}: dual measure {row.S_y} at "
                        f"t={row.outer_t}")
        assert_(trace.grad_calls <= trace.budget,
                msg=f"{inst.name}: {trace.grad_calls} gradient calls over "
                    f"the declared {trace.budget}")
    assert_(time.perf_counter() - t0 < 300.0)


def _recover_toy_dual_reference(spec, sched):
    """Exact regularized-dual evaluator for an all-quadratic instance.

    Recovers the x-side quadratic from oracle probes, then evaluates
    y -> min_x [F(x, y) - reg/2*||y - ybar||^2 + L_xx*||x - x_prev||^2]
    through a linear solve, with a residual guard on every call.
    """
    dx, dy = spec.X.dim, spec.Y.dim
    gx0 = spec.oracle_gx(np.zeros(dx), np.zeros(dy))
    Q = np.column_stack([spec.oracle_gx(np.eye(dx)[i], np.zeros(dy)) - gx0
                         for i in range(dx)])
    A_T = np.column_stack([spec.oracle_gx(np.zeros(dx), np.eye(dy)[j]) - gx0
                           for j in range(dy)])
    M = Q + 2.0 * spec.L_xx * np.eye(dx)

    def psi(y, x_prev):
        x_min = np.linalg.solve(M, 2.0 * spec.L_xx * x_prev - A_T @ y - gx0)
        res = np.linalg.norm(spec.oracle_gx(x_min, y)
                             + 2.0 * spec.L_xx * (x_min - x_prev))
        assert_(res <= 1e-8, msg=f"reference inner solve residual {res}")
        dybar = y - spec.ybar
        return (spec.oracle_F(x_min, y)
                - 0.5 * sched.reg_lambda * float(dybar @ dybar)
                + spec.L_xx * float((x_min - x_prev) @ (x_min - x_prev)))

    return psi


def test_criterion_08_inexact_dual_oracle_sandwich():
    t0 = time.perf_counter()
    inst = build_problem("strongly-concave-toy", seed=3, dims={"d": 5})
    spec = inst.spec
    sched = compute_schedule(spec, 1e-2, 1e-2, mode="strongly-concave",
                             lambda_y=0.5)
    psi_ref = _recover_toy_dual_reference(spec, sched)
    x_end, _, _ = fne_search(spec, 1e-2, 1e-2, mode="strongly-concave",
                             termination="adaptive", lambda_y=0.5)
    rng = np.random.default_rng(808)
    quad_c = 0.5 * (spec.L_yy_plus + sched.reg_lambda)
    pairs = 0
    for x_prev in (spec.x0, x_end):
        for _ in range(10):
            y = rng.standard_normal(spec.Y.dim)
            y *= rng.uniform(0.0, 0.9) / np.linalg.norm(y)
            x_til, grad_psi = solve_reg_dual(y, x_prev, spec, sched)
            dybar = y - spec.ybar
            val = (spec.oracle_F(x_til, y)
                   - 0.5 * sched.reg_lambda * float(dybar @ dybar)
                   + spec.L_xx * float((x_til - x_prev) @ (x_til - x_prev))
                   + sched.delta / 4.0)
            for k in range(5):
                if k == 0:
                    yp = y.copy()
                else:
                    yp = rng.standard_normal(spec.Y.dim)
                    yp *= rng.uniform(0.0, 0.9) / np.linalg.norm(yp)
                expr = -psi_ref(yp, x_prev) + val + float(grad_psi @ (yp - y))
                bound = quad_c * float((yp - y) @ (yp - y)) + sched.delta
                assert_(expr >= -1e-12,
                        msg=f"lower sandwich side {expr} at pair {pairs}")
                assert_(expr <= bound + 1e-12,
                        msg=f"upper sandwich side exceeded by "
                            f"{expr - bound} at pair {pairs}")
                pairs += 1
    assert_(pairs == 100)
    assert_(time.perf_counter() - t0 < 60.0)


def test_criterion_09_dual_gradient_matches_finite_differences():
    t0 = time.perf_counter()
    inst = build_problem("strongly-concave-toy", seed=3, dims={"d": 5})
    spec = inst.spec
    sched = compute_schedule(spec, 1e-2, 1e-2, mode="strongly-concave",
                             lambda_y=0.5)
    psi_ref = _recover_toy_dual_reference(spec, sched)
    rng = np.random.default_rng(909)
    h = 1e-5
    dy = spec.Y.dim
    for _ in range(20):
        y = rng.standard_normal(dy)
        y *= rng.uniform(0.0, 0.9) / np.linalg.norm(y)
        _, grad_psi = solve_reg_dual(y, spec.x0, spec, sched)
        fd = np.empty(dy)
        for j in range(dy):
            e = np.zeros(dy)
            e[j] = h
            fd[j] = (psi_ref(y + e, spec.x0)
                     - psi_ref(y - e, spec.x0)) / (2.0 * h)
        err = float(np.max(np.abs(fd - grad_psi))) \
            / max(1.0, float(np.max(np.abs(fd))))
        assert_(err <= 1e-4, msg=f"dual-gradient FD error {err}")
    assert_(time.perf_counter() - t0 < 60.0)


def test_criterion_10_envelope_gradient_equals_both_measures():
    t0 = time.perf_counter()
    # 1-D instance whose primal max-function is the Huber function: the
    # envelope gradient at x=2 is exactly 1
    mu = 0.1
    huber = ProblemSpec(
        oracle_F=lambda x, y: float(x[0] * y[0])
        - 0.5 * mu * float(y[0] ** 2),
        oracle_gx=lambda x, y: np.array([y[0]]),
        oracle_gy=lambda x, y: np.array([x[0] - mu * y[0]]),
        X=FeasibleSet.box(np.array([-4.0]), np.array([4.0])),
        Y=FeasibleSet.box(np.array([-1.0]), np.array([1.0])),
        L_xx=0.5, L_yy=mu, L_xy=1.0, R_y=1.0, Delta=0.01, x0=np.zeros(1))
    cases = [
        (huber, np.array([2.0]), mu, 1.0),
        (build_problem("strongly-concave-toy", seed=3, dims={"d": 5}).spec,
         np.full(5, 0.3), 0.5, None),
    ]
    for spec, x_hat, lam, exact in cases:
        rep = moreau_gradient(x_hat, spec, 1e-8, mode="strongly-concave",
                              lambda_y=lam)
        zeta = 2.0 * spec.L_xx * (x_hat - rep.x_plus)
        srep = stationarity_report(x_hat, zeta, 2.0 * spec.L_xx, spec.X)
        assert_(abs(srep.strong - rep.grad_norm) <= 1e-8)
        assert_(abs(srep.weak - rep.grad_norm) <= 1e-8)
        if exact is not None:
            assert_allclose(rep.grad_norm, exact, atol=1e-8)
    assert_(time.perf_counter() - t0 < 60.0)


def test_criterion_11_l1_geometry_calibration():
    t0 = time.perf_counter()
    # Euclidean reductions: the generalized prox and measure collapse to
    # their projection-based counterparts
    geo2 = euclidean_dgf(5)
    fs = FeasibleSet.box(-np.ones(5), np.ones(5))
    rng = np.random.default_rng(111)
    for _ in range(20):
        z = project(fs, rng.standard_normal(5))
        zeta = rng.standard_normal(5)
        assert_allclose(bregman_prox(z, zeta, fs, geo2),
                        prox_map(z, zeta, fs), atol=1e-12)
        assert_allclose(strong_measure_bregman(z, zeta, 2.0, fs, geo2),
                        strong_measure(z, zeta, 2.0, fs), atol=1e-12)
    spread_ratios = {}
    for d in (10, 1000):
        geo = lp_dgf(d)
        Cd = 2.0 * geo.omega(np.eye(d)[0])
        logd = math.log(d)
        # potential range over l1 balls stays below the declared growth map
        rng = np.random.default_rng(d)
        for _ in range(200):
            v = rng.standard_normal(d)
            r = rng.uniform(0.1, 3.0)
            v *= r * rng.uniform() / float(np.sum(np.abs(v)))
            assert_(geo.omega(v) <= geo.omega_radius_fn(r) * (1 + 1e-12))
        assert_(geo.omega(np.eye(d)[0]) <= geo.omega_radius_fn(1.0))
        # gradient max-norm over the unit l1 ball peaks at vertices and
        # stays below the dual bound sqrt(2 c C_d log d)
        bound = math.sqrt(2.0 * geo.growth_c * Cd * logd)
        assert_allclose(float(np.max(np.abs(geo.grad_omega(np.eye(d)[0])))),
                        Cd, rtol=1e-12)
        assert_(Cd <= bound)
        for _ in range(200):
            v = rng.standard_normal(d)
            v *= rng.uniform() / float(np.sum(np.abs(v)))
            assert_(float(np.max(np.abs(geo.grad_omega(v)))) <= bound)
        # certified l1 modulus 1/(e log d): divergence dominates the
        # scaled squared l1 distance on sampled pairs
        sigma = 1.0 / (math.e * logd)
        worst = np.inf
        for _ in range(500):
            z = rng.standard_normal(d)
            z *= rng.uniform() / np.sum(np.abs(z))
            zp = rng.standard_normal(d)
            zp *= rng.uniform() / np.sum(np.abs(zp))
            n1 = float(np.sum(np.abs(z - zp)))
            if n1 < 1e-8:
                continue
            ratio = bregman_div(geo, z, zp) / (0.5 * n1 * n1)
            worst = min(worst, ratio)
            assert_(ratio >= sigma * (1.0 - 1e-9))
        spread = bregman_div(geo, np.full(d, 1.0 / d), np.zeros(d)) / 0.5
        spread_ratios[d] = (min(worst, spread), spread)
    assert_(time.perf_counter() - t0 < 30.0)
    # declared unit modulus of the potential in the l1 norm: divergence at
    # least half the squared l1 distance for every pair
    for d, (worst, spread) in spread_ratios.items():
        assert_(worst >= 1.0 - 1e-9,
                msg=f"d={d}: divergence/(l1 dist^2/2) ratio {worst:.4f} "
                    f"(spread direction gives {spread:.4f}); the unit "
                    f"l1 modulus does not hold")


def test_criterion_12_primal_budget_scaling():
    t0 = time.perf_counter()
    inst = build_problem("max-of-quadratics", seed=5, dims={"d": 10, "k": 4})
    rows = {}
    for eps_x in (0.07, 0.035):
        sched = compute_schedule(inst.spec, eps_x, 1e-2, mode="concave")
        _, _, trace = fne_search(inst.spec, eps_x, 1e-2, mode="concave",
                                 termination="fixed")
        assert_(len(trace.rows) == sched.Tbar_x)
        assert_(trace.grad_calls == trace.budget,
                msg=f"fixed run used {trace.grad_calls} of {trace.budget}")
        rows[eps_x] = len(trace.rows)
    # halving eps_x quadruples the planned outer factor exactly, and the
    # measured outer count tracks it to within a factor 2
    tx_coarse = complexity_factors(inst.spec, 0.07, 1e-2)[0]
    tx_fine = complexity_factors(inst.spec, 0.035, 1e-2)[0]
    assert_allclose(tx_fine / tx_coarse, 4.0, rtol=1e-12)
    measured = rows[0.035] / rows[0.07]
    assert_(2.0 <= measured <= 8.0,
            msg=f"outer-iteration ratio {measured} outside [2, 8]")
    assert_(time.perf_counter() - t0 < 600.0)
