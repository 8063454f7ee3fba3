"""Outer solver for smooth nonconvex-concave min-max problems.

The driver runs inexact proximal-point steps on the minimizing variable. At
outer iteration t the dual player's surrogate -- the regularized objective
with a quadratic pull toward the previous primal iterate, minimized over x --
is maximized over y by the restart scheme, with each dual gradient obtained
from an inner accelerated solve of the x-subproblem. The parameter schedule
ties every inner tolerance to the two target accuracies so the final pair is
an approximate first-order Nash equilibrium with constants (2, 5) times the
targets.

All iteration counts are ceilings of real-valued lower bounds, clamped to at
least 1. Logarithms in the restart counts are evaluated in log-space so tiny
accuracy budgets cannot overflow.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np

from .fgm import CallCounters, InexactOracle, restart_fgm
from .geometry import Array, FeasibleSet, as_point, set_center
from .stationarity import stationarity_report

logger = logging.getLogger("minmax_fne")

HARD_BUDGET_CAP = 10 ** 9

MODES = ("concave", "strongly-concave")
TERMINATIONS = ("fixed", "adaptive")
SELECT_RULES = ("step", "gradnorm")


class ScheduleBudgetError(RuntimeError):
    """Raised at schedule time when the declared budget exceeds the cap."""

    def __init__(self, budget: int, cap: int):
        super().__init__(
            f"declared oracle budget {budget} exceeds the hard cap {cap}")
        self.budget = budget
        self.cap = cap


# ----------------- problem description -----------------

@dataclass(frozen=True)
class ProblemSpec:
    """Oracles and constants describing one min-max instance.

    Attributes
    ----------
    oracle_F : callable
        (x, y) -> objective value.
    oracle_gx, oracle_gy : callable
        (x, y) -> partial gradients.
    X, Y : FeasibleSet
        Feasible sets; Y must be bounded.
    L_xx, L_yy, L_xy : float
        Smoothness constants: Lipschitz moduli of grad_x F in x, grad_y F in
        y, and of grad_x F in y (equivalently grad_y F in x).
    R_y : float
        Euclidean radius bound for Y (at least Y.radius_bound).
    Delta : float
        Upper bound on the primal gap: max_y F(x0, y) minus its minimum
        over x. A crude bound for a bounded X is 2*L_xx*R_x^2.
    x0 : ndarray
        Primal start, in X.
    ybar : ndarray or None
        Dual anchor; defaults to the center of Y.
    """

    oracle_F: Callable[[Array, Array], float]
    oracle_gx: Callable[[Array, Array], Array]
    oracle_gy: Callable[[Array, Array], Array]
    X: FeasibleSet
    Y: FeasibleSet
    L_xx: float
    L_yy: float
    L_xy: float
    R_y: float
    Delta: float
    x0: Array = field(repr=False, default=None)
    ybar: Optional[Array] = field(repr=False, default=None)

    def __post_init__(self):
        if self.L_xx <= 0.0 or self.L_yy <= 0.0 or self.L_xy < 0.0:
            raise ValueError("need positive L_xx, L_yy and nonnegative L_xy")
        if self.Delta <= 0.0:
            raise ValueError("the primal gap bound Delta must be positive")
        if not self.Y.bounded:
            raise ValueError("the maximizing player's set must be bounded")
        if self.R_y <= 0.0 or self.R_y < self.Y.radius_bound - 1e-12:
            raise ValueError("R_y must dominate the radius bound of Y")
        x0 = as_point(self.x0, dim=self.X.dim)
        if not self.X.contains(x0):
            raise ValueError("x0 must lie in X")
        object.__setattr__(self, "x0", x0)
        if self.ybar is None:
            object.__setattr__(self, "ybar", set_center(self.Y))
        else:
            yb = as_point(self.ybar, dim=self.Y.dim)
            if not self.Y.contains(yb):
                raise ValueError("ybar must lie in Y")
            object.__setattr__(self, "ybar", yb)

    @property
    def L_yy_plus(self) -> float:
        """Coupling-adjusted dual smoothness: L_yy + L_xy^2 / L_xx."""
        return self.L_yy + self.L_xy ** 2 / self.L_xx


# ----------------- schedule -----------------

@dataclass(frozen=True)
class SolverSchedule:
    """All solver constants derived from the targets (eps_x, eps_y).

    `budget` is the exact oracle-call arithmetic of the solver loop and is
    what gets enforced; `budget_product` is the headline product
    T_o*S_o*S_y*Tbar_x*Tbar_y, reported for comparison (it omits the closing
    dual-partial evaluation of each inner solve, the re-solve at the accepted
    dual point, and the two exact diagnostic gradients per outer iteration).
    """

    lambda_y: float
    Theta: float
    Theta_plus: float
    delta: float
    gamma_x: float
    gamma_y: float
    Tbar_x: int
    Tbar_y: int
    S_y: int
    T_o: int
    S_o: int
    budget: int
    budget_product: int
    mode: str
    reg_lambda: float  # explicit dual regularizer weight (0 when mode
    # is strongly-concave: the objective itself provides the curvature)
    eps_x: float
    eps_y: float

    def __post_init__(self):
        if min(self.Tbar_x, self.Tbar_y, self.S_y, self.T_o, self.S_o) < 1:
            raise ValueError("all iteration counts must be >= 1")


def _log2_sum(logs: List[float]) -> float:
    """log2 of a sum of positive terms given their log2s (overflow-safe)."""
    m = max(logs)
    return m + math.log2(sum(2.0 ** (l - m) for l in logs))


def _ceil1(x: float) -> int:
    if not math.isfinite(x):
        raise ValueError(f"non-finite schedule quantity {x}")
    return max(1, int(math.ceil(x)))


def compute_schedule(spec: ProblemSpec, eps_x: float, eps_y: float,
                     mode: str = "concave",
                     lambda_y: Optional[float] = None,
                     budget_cap: int = HARD_BUDGET_CAP) -> SolverSchedule:
    """Derive the full parameter schedule for `fne_search`.

    Parameters
    ----------
    spec : ProblemSpec
    eps_x, eps_y : float
        Target stationarity accuracies for the min and max player. The
        output pair is guaranteed at (2*eps_x, 5*eps_y).
    mode : {"concave", "strongly-concave"}
        "concave": the dual is made strongly concave by an explicit
        regularizer with weight eps_y / R_y. "strongly-concave": the
        objective itself is strongly concave in y with modulus `lambda_y`;
        no regularizer is added and the prescribed modulus drives the
        schedule.
    lambda_y : float, optional
        Strong-concavity modulus; required (positive) in strongly-concave
        mode, ignored otherwise.
    budget_cap : int
        Hard cap on the declared budget; exceeding it raises
        ScheduleBudgetError at schedule time, before any oracle call.
    """
    if eps_x <= 0.0 or eps_y <= 0.0:
        raise ValueError("accuracy targets must be positive")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "strongly-concave":
        if lambda_y is None or lambda_y <= 0.0:
            raise ValueError(
                "strongly-concave mode needs a positive lambda_y")
        lam = float(lambda_y)
        reg_lambda = 0.0
    else:
        lam = eps_y / spec.R_y
        reg_lambda = lam

    L_yy_plus = spec.L_yy_plus
    Theta = spec.L_yy * spec.R_y ** 2
    Theta_plus = L_yy_plus * spec.R_y ** 2
    gamma_x = 1.0 / (2.0 * spec.L_xx)
    gamma_y = 1.0 / (L_yy_plus + lam)

    Tbar_x = _ceil1(10.0 * spec.L_xx * (spec.Delta + 2.0 * eps_y * spec.R_y)
                    / eps_x ** 2)
    Tbar_y = _ceil1(math.sqrt(40.0 * (L_yy_plus + lam) / lam))

    terms = [8.0 * eps_y * spec.R_y, Theta / (2.0 * Tbar_y ** 3)]
    if Theta_plus > Theta:
        terms.append(math.sqrt(spec.Delta * (Theta_plus - Theta)
                               / (Tbar_x * Tbar_y ** 2)))
    else:
        logger.warning("zero coupling constant makes one accuracy term "
                       "vanish; dropping it from the min")
    delta = min(terms)
    assert delta > 0.0

    S_y = _ceil1(2.0 * max(math.log2(Tbar_y),
                           math.log2(Theta_plus) - math.log2(delta)))

    # inner restarts, computed fully in log-space
    log_front = math.log2(72.0 * (3.0 * spec.Delta + 2.0 * Theta
                                  + 6.0 * eps_y * spec.R_y))
    log_terms = [
        math.log2(spec.L_xx) - 2.0 * math.log2(eps_x),
        math.log2(2.0 * Theta_plus) - 2.0 * math.log2(delta),
        -math.log2(12.0) - math.log2(delta),
    ]
    S_o = _ceil1(0.5 * (log_front + _log2_sum(log_terms)))
    T_o = 11

    budget_product = T_o * S_o * S_y * Tbar_x * Tbar_y
    # exact loop arithmetic: every dual-oracle evaluation costs T_o*S_o
    # x-gradients plus one closing y-gradient; the accepted dual point is
    # re-solved (no closing gradient); two exact diagnostic partials per
    # outer iteration
    per_outer = S_y * Tbar_y * (T_o * S_o + 1) + T_o * S_o + 2
    budget = Tbar_x * per_outer

    logger.info("schedule: lambda_y=%.3g delta=%.3g Tbar_x=%d Tbar_y=%d "
                "S_y=%d T_o=%d S_o=%d budget=%d (headline product %d)",
                lam, delta, Tbar_x, Tbar_y, S_y, T_o, S_o, budget,
                budget_product)
    if budget > budget_cap:
        raise ScheduleBudgetError(budget, budget_cap)

    return SolverSchedule(
        lambda_y=lam, Theta=Theta, Theta_plus=Theta_plus, delta=delta,
        gamma_x=gamma_x, gamma_y=gamma_y, Tbar_x=Tbar_x, Tbar_y=Tbar_y,
        S_y=S_y, T_o=T_o, S_o=S_o, budget=budget,
        budget_product=budget_product, mode=mode, reg_lambda=reg_lambda,
        eps_x=eps_x, eps_y=eps_y)


def tighten_schedule(sched: SolverSchedule, **overrides) -> SolverSchedule:
    """Return a copy with increased iteration counts.

    Only the integer loop fields may be overridden and only upward;
    loosening any of them would void the accuracy argument.
    """
    allowed = ("Tbar_x", "Tbar_y", "S_y", "S_o")
    for name, value in overrides.items():
        if name not in allowed:
            raise ValueError(f"cannot override {name!r}; allowed: {allowed}")
        if int(value) < getattr(sched, name):
            raise ValueError(
                f"override {name}={value} loosens the schedule "
                f"(current {getattr(sched, name)})")
    new = replace(sched, **{k: int(v) for k, v in overrides.items()})
    per_outer = (new.S_y * new.Tbar_y * (new.T_o * new.S_o + 1)
                 + new.T_o * new.S_o + 2)
    return replace(
        new,
        budget=new.Tbar_x * per_outer,
        budget_product=new.T_o * new.S_o * new.S_y * new.Tbar_x * new.Tbar_y)


# ----------------- inner solve -----------------

def solve_reg_dual(y, x_prev, spec: ProblemSpec, sched: SolverSchedule,
                   counters: Optional[CallCounters] = None,
                   want_grad: bool = True) -> Tuple[Array, Optional[Array]]:
    """Approximately minimize the pulled-back objective at fixed y.

    Runs the restart scheme from x_prev on x -> F(x, y) + L_xx*||x -
    x_prev||^2 (a strongly convex problem with condition number at most 3)
    and, when `want_grad`, evaluates the inexact dual gradient at y: the
    partial grad_y F at the approximate minimizer, minus the explicit
    regularizer pull toward ybar (weight sched.reg_lambda; zero in
    strongly-concave mode).

    Returns
    -------
    (ndarray, ndarray or None)
        The approximate minimizer and, when requested, the inexact dual
        gradient.
    """
    y = as_point(y, dim=spec.Y.dim)
    x_prev = as_point(x_prev, dim=spec.X.dim)
    two_lxx = 2.0 * spec.L_xx

    def grad_sub(x: Array) -> Array:
        if counters is not None:
            counters.grad += 1
        return spec.oracle_gx(x, y) + two_lxx * (x - x_prev)

    oracle = InexactOracle(grad_fn=grad_sub, smoothness=3.0 * spec.L_xx)
    x_tilde = restart_fgm(x_prev, spec.X, 1.0 / (3.0 * spec.L_xx),
                          sched.T_o, sched.S_o, oracle, counters=counters)
    if not want_grad:
        return x_tilde, None
    if counters is not None:
        counters.grad += 1
    grad_psi = spec.oracle_gy(x_tilde, y) \
        - sched.reg_lambda * (y - spec.ybar)
    return x_tilde, grad_psi


# ----------------- trace -----------------

@dataclass(frozen=True)
class TraceRow:
    """One outer iteration's diagnostics (the CSV row)."""

    outer_t: int
    step_norm: float
    S_x: float
    S_y: float
    W_x: float
    W_y: float
    grad_calls_cum: int
    proj_calls_cum: int


@dataclass
class SolveTrace:
    """Per-iteration records plus the final selection and counters."""

    rows: List[TraceRow] = field(default_factory=list)
    tau: int = 0
    status: str = "pending"
    grad_calls: int = 0
    proj_calls: int = 0
    budget: int = 0
    budget_product: int = 0

    @property
    def S_x_final(self) -> float:
        return self.rows[self.tau - 1].S_x

    @property
    def S_y_final(self) -> float:
        return self.rows[self.tau - 1].S_y


# ----------------- outer loop -----------------

def fne_search(spec: ProblemSpec, eps_x: float, eps_y: float,
               mode: str = "concave", termination: str = "fixed",
               lambda_y: Optional[float] = None, select: str = "step",
               schedule: Optional[SolverSchedule] = None,
               budget_cap: int = HARD_BUDGET_CAP
               ) -> Tuple[Array, Array, SolveTrace]:
    """Search for an approximate first-order Nash equilibrium.

    Parameters
    ----------
    spec : ProblemSpec
    eps_x, eps_y : float
        Target accuracies; the output is guaranteed at (2*eps_x, 5*eps_y).
    mode : {"concave", "strongly-concave"}
        See `compute_schedule`.
    termination : {"fixed", "adaptive"}
        "fixed" runs all Tbar_x outer iterations and then selects the
        returned index by `select`. "adaptive" exits at the first iterate
        whose exact-gradient strong measure is at most 2*eps_x (guaranteed
        to occur within Tbar_x iterations when Delta is a valid bound);
        running out of iterations without passing returns the best-so-far
        with status "budget-exceeded", signalling an underestimated Delta.
    lambda_y : float, optional
        Strong-concavity modulus for strongly-concave mode.
    select : {"step", "gradnorm"}
        Selection rule for fixed mode: index minimizing the outer step norm
        (default; first minimal index on ties) or the exact primal gradient
        norm.
    schedule : SolverSchedule, optional
        Precomputed (possibly tightened) schedule; computed here otherwise.

    Returns
    -------
    (x_hat, y_hat, SolveTrace)
    """
    if termination not in TERMINATIONS:
        raise ValueError(
            f"termination must be one of {TERMINATIONS}, got {termination!r}")
    if select not in SELECT_RULES:
        raise ValueError(
            f"select must be one of {SELECT_RULES}, got {select!r}")
    sched = schedule if schedule is not None else compute_schedule(
        spec, eps_x, eps_y, mode=mode, lambda_y=lambda_y,
        budget_cap=budget_cap)

    counters = CallCounters()
    trace = SolveTrace(budget=sched.budget,
                       budget_product=sched.budget_product)
    dual_oracle_smoothness = spec.L_yy_plus + sched.lambda_y

    x_prev = spec.x0.copy()
    kept: List[Tuple[Array, Array, float, float]] = []  # x, y, step, gradnorm
    status = "running"
    for t in range(1, sched.Tbar_x + 1):

        def neg_dual_grad(y_pt: Array) -> Array:
            _, g = solve_reg_dual(y_pt, x_prev, spec, sched,
                                  counters=counters)
            return -g

        oracle = InexactOracle(grad_fn=neg_dual_grad,
                               smoothness=dual_oracle_smoothness,
                               delta=sched.delta)
        y_t = restart_fgm(spec.ybar, spec.Y, sched.gamma_y, sched.Tbar_y,
                          sched.S_y, oracle, counters=counters)
        x_t, _ = solve_reg_dual(y_t, x_prev, spec, sched, counters=counters,
                                want_grad=False)

        # exact-gradient diagnostics (two oracle calls, two projections)
        counters.grad += 2
        gx = spec.oracle_gx(x_t, y_t)
        gy = spec.oracle_gy(x_t, y_t)
        rep_x = stationarity_report(x_t, gx, spec.L_xx, spec.X)
        rep_y = stationarity_report(y_t, -gy, spec.L_yy, spec.Y)
        counters.proj += 2

        step_norm = float(np.linalg.norm(x_t - x_prev))
        trace.rows.append(TraceRow(
            outer_t=t, step_norm=step_norm, S_x=rep_x.strong,
            S_y=rep_y.strong, W_x=rep_x.weak, W_y=rep_y.weak,
            grad_calls_cum=counters.grad, proj_calls_cum=counters.proj))
        kept.append((x_t, y_t, step_norm, float(np.linalg.norm(gx))))
        logger.debug("outer t=%d step=%.3e S_x=%.3e S_y=%.3e grad=%d",
                     t, step_norm, rep_x.strong, rep_y.strong, counters.grad)

        if termination == "adaptive" and rep_x.strong <= 2.0 * eps_x:
            trace.tau = t
            status = "converged"
            break
        x_prev = x_t
    else:
        if termination == "adaptive":
            # ran out of outer iterations without passing the criterion
            status = "budget-exceeded"
        else:
            status = "completed"

    if trace.tau == 0:
        key = 2 if select == "step" else 3
        vals = [rec[key] for rec in kept]
        trace.tau = int(np.argmin(vals)) + 1

    trace.status = status
    trace.grad_calls = counters.grad
    trace.proj_calls = counters.proj
    x_hat, y_hat = kept[trace.tau - 1][0], kept[trace.tau - 1][1]
    logger.info("fne_search: status=%s tau=%d S_x=%.3e S_y=%.3e grad=%d/%d",
                status, trace.tau, trace.S_x_final, trace.S_y_final,
                trace.grad_calls, sched.budget)
    return x_hat, y_hat, trace


def complexity_factors(spec: ProblemSpec, eps_x: float,
                       eps_y: float) -> Tuple[float, float]:
    """Primal and dual iteration-budget factors for benchmarking.

    T_x = L_xx * Delta / eps_x^2 scales the outer loop; T_y =
    sqrt(L_yy_plus * R_y / eps_y) scales the dual loop. Reported in bench
    summaries so measured oracle-call counts can be compared against their
    product (up to logarithmic factors).
    """
    if eps_x <= 0.0 or eps_y <= 0.0:
        raise ValueError("accuracy targets must be positive")
    T_x = spec.L_xx * spec.Delta / eps_x ** 2
    T_y = math.sqrt(spec.L_yy_plus * spec.R_y / eps_y)
    return float(T_x), float(T_y)
