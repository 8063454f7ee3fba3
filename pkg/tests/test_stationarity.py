"""Unit tests for the strong/weak stationarity measures."""

import math

import numpy as np
from numpy.testing import assert_allclose, assert_
from pytest import raises as assert_raises

from minmax_fne.geometry import FeasibleSet, project
from minmax_fne.stationarity import (StationarityReport, fne_check,
                                     stationarity_report, strong_measure,
                                     weak_measure)
from minmax_fne.bruteforce import grid_strong_measure
from minmax_fne.problems import build_problem


def test_whole_space_collapses_to_gradient_norm():
    W = FeasibleSet.whole_space(2)
    rep = stationarity_report(np.array([7.0, -3.0]), np.array([3.0, 4.0]),
                              2.0, W)
    assert_allclose(rep.strong, 5.0, rtol=0)
    assert_allclose(rep.weak, 5.0, rtol=0)
    assert_allclose(rep.prox_point, [7.0 - 1.5, -3.0 - 2.0], rtol=0)


def test_box_frozen_example():
    # frozen against the dense-grid maximizer of the concave bracket
    B = FeasibleSet.box(np.zeros(2), np.ones(2))
    z = np.array([0.3, 0.7])
    zeta = np.array([1.0, -2.0])
    rep = stationarity_report(z, zeta, 1.5, B)
    assert_allclose(rep.strong, 1.5149257407543117, rtol=1e-15)
    assert_allclose(rep.weak, 0.6363961030678928, rtol=1e-15)
    assert_allclose(rep.prox_point, [0.0, 1.0], atol=1e-15)
    assert_allclose(rep.strong, grid_strong_measure(z, zeta, 1.5, B),
                    atol=1e-5)


def test_convenience_wrappers_match_report():
    B = FeasibleSet.box(np.zeros(2), np.ones(2))
    z = np.array([0.3, 0.7])
    zeta = np.array([1.0, -2.0])
    rep = stationarity_report(z, zeta, 1.5, B)
    assert strong_measure(z, zeta, 1.5, B) == rep.strong
    assert weak_measure(z, zeta, 1.5, B) == rep.weak


def test_boundary_gap_closed_forms():
    # concave parabola -(y-a)^2/2 on Y = [-1, 0], evaluated at y = -eps:
    # the ascent step clips to the upper end, so S^2 = 2*a*eps + eps^2
    # while W = eps; the gap S^2 - W^2 = 2*a*eps is attained exactly.
    Y = FeasibleSet.box(np.array([-1.0]), np.array([0.0]))
    for a in (0.5, 1.0, 2.0, 5.0):
        for eps in (0.1, 0.5, 1.0):
            y = np.array([-eps])
            grad_h = np.array([a + eps])
            rep = stationarity_report(y, -grad_h, 1.0, Y)
            assert_allclose(rep.strong ** 2, 2 * a * eps + eps ** 2,
                            atol=1e-12)
            assert_allclose(rep.weak, eps, atol=1e-12)
            assert_allclose(rep.strong ** 2 - rep.weak ** 2, 2 * a * eps,
                            atol=1e-12)


def test_zero_at_solution_with_positive_sign():
    # the bracket evaluates to -0.0 at an exact solution; the report must
    # normalize it so downstream formatting never shows a negative zero
    S = FeasibleSet.ball(np.zeros(2), 1.0)
    rep = stationarity_report(np.zeros(2), np.zeros(2), 3.0, S)
    assert rep.strong == 0.0
    assert math.copysign(1.0, rep.strong) == 1.0
    assert rep.weak == 0.0


class TestMeasureInvariants:
    def setup_method(self):
        rng = np.random.default_rng(19)
        self.rng = rng
        self.sets = [
            FeasibleSet.whole_space(3),
            FeasibleSet.box(-np.ones(3), 2.0 * np.ones(3)),
            FeasibleSet.ball(rng.standard_normal(3), 1.2),
            FeasibleSet.simplex(3, scale=1.0),
            FeasibleSet.l1_ball(np.zeros(3), 0.8),
        ]

    def test_weak_below_strong(self):
        for fs in self.sets:
            for _ in range(2000):
                z = project(fs, self.rng.standard_normal(3) * 2.0)
                zeta = self.rng.standard_normal(3) * 3.0
                L = float(self.rng.uniform(0.1, 10.0))
                rep = stationarity_report(z, zeta, L, fs)
                assert_(rep.weak <= rep.strong + 1e-9 * (1 + rep.strong),
                        msg=f"weak > strong on {fs.kind}")

    def test_strong_measure_monotone_in_curvature(self):
        # slack: near an exact stationary point the computed measure is
        # sqrt(2 L * roundoff), about 1e-7 at these scales, so exact-zero
        # values at different L can compare out of order by that much
        Ls = [0.25, 1.0, 4.0, 16.0]
        for fs in self.sets:
            for _ in range(200):
                z = project(fs, self.rng.standard_normal(3) * 2.0)
                zeta = self.rng.standard_normal(3) * 3.0
                vals = [strong_measure(z, zeta, L, fs) for L in Ls]
                for lo, hi in zip(vals, vals[1:]):
                    assert_(lo <= hi + 1e-6,
                            msg=f"measure not monotone in L on {fs.kind}")

    def test_grid_agreement_low_dim(self):
        B1 = FeasibleSet.box(np.array([-1.0]), np.array([0.5]))
        B2 = FeasibleSet.ball(np.zeros(2), 1.0)
        L1 = FeasibleSet.l1_ball(np.array([0.1, -0.2]), 0.7)
        for fs in (B1, B2, L1):
            for _ in range(5):
                z = project(fs, self.rng.standard_normal(fs.dim))
                zeta = self.rng.standard_normal(fs.dim)
                s = strong_measure(z, zeta, 2.0, fs)
                assert_allclose(s, grid_strong_measure(z, zeta, 2.0, fs),
                                atol=1e-5)


def test_report_is_frozen_dataclass():
    rep = StationarityReport(strong=1.0, weak=0.5, prox_point=np.zeros(1))
    with assert_raises(AttributeError):
        rep.strong = 2.0


def test_preconditions():
    B = FeasibleSet.box(np.zeros(2), np.ones(2))
    with assert_raises(ValueError):
        stationarity_report(np.array([0.5, 0.5]), np.zeros(2), 0.0, B)
    with assert_raises(ValueError):
        stationarity_report(np.array([0.5, 0.5]), np.zeros(2), -1.0, B)
    with assert_raises(ValueError):
        # infeasible beyond the 1e-9 slack
        stationarity_report(np.array([2.0, 0.5]), np.zeros(2), 1.0, B)
    with assert_raises(ValueError):
        stationarity_report(np.zeros(3), np.zeros(3), 1.0, B)


def test_fne_check_on_boundary_family():
    inst = build_problem("scalar-boundary", seed=0)
    x_star, y_star = inst.known_solution
    ok, rep_x, rep_y = fne_check(x_star, y_star, inst.spec, 1e-9, 1e-9)
    assert_(ok)
    assert rep_x.strong == 0.0
    assert rep_y.strong == 0.0

    # at y = -1/2 the dual measure is sqrt(2*a*eps + eps^2) with a = 1,
    # eps = 1/2, i.e. sqrt(5)/2; the verdict flips across that threshold
    y = np.array([-0.5])
    ok_tight, _, rep_y = fne_check(x_star, y, inst.spec, 1e-9,
                                   math.sqrt(5.0) / 2.0 - 1e-9)
    assert_(not ok_tight)
    ok_loose, _, _ = fne_check(x_star, y, inst.spec, 1e-9,
                               math.sqrt(5.0) / 2.0 + 1e-9)
    assert_(ok_loose)
    assert_allclose(rep_y.strong, math.sqrt(5.0) / 2.0, rtol=1e-14)
