"""Non-Euclidean geometry: distance-generating functions and Bregman loops.

A distance-generating function (d.g.f.) omega that is 1-strongly convex with
respect to a chosen norm induces the divergence

    D(z', z) = omega(z') - omega(z) - <grad omega(z), z' - z>,

which replaces the squared Euclidean distance in prox-mappings, stationarity
measures, and the accelerated restart loop. The l1-adapted d.g.f. here is a
scaled squared lp norm with p slightly above 1, whose range over an l1 ball
grows only logarithmically with dimension; its gradient map inverts in
closed form through the dual-exponent conjugate, which keeps every
prox-mapping a one-dimensional search at worst.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .fgm import (CallCounters, InexactOracle, prox_point_via_fgm,
                  restart_fgm)
from .geometry import Array, FeasibleSet, as_point, project, prox_map

logger = logging.getLogger("minmax_fne")

# range constant of the lp d.g.f. over unit l1 balls: the exact maximum is
# C_d / 2, and C_d / (2 log d) is largest at the smallest supported
# dimension d = 3 (value 0.4771); 0.48 covers every d >= 3
GROWTH_C = 0.48

_BISECT_TOL = 1e-12
_NEG_CLAMP = -1e-14


class UnsupportedGeometryError(ValueError):
    """Requested (feasible set, geometry) pair has no implemented prox."""


@dataclass(frozen=True)
class DgfGeometry:
    """A distance-generating function with its norm and derived maps.

    omega_radius_fn maps a radius r to an upper bound on omega's range over
    the norm ball of radius r (used to size restart schedules);
    smoothness_const is the Lipschitz modulus of grad omega in the chosen
    norm, math.inf when unbounded; growth_c is the calibrated constant in
    the logarithmic range bound.
    """

    dim: int
    norm_id: str  # "l1" or "l2"
    p: float
    omega: Callable[[Array], float] = field(repr=False)
    grad_omega: Callable[[Array], Array] = field(repr=False)
    grad_omega_conj: Callable[[Array], Array] = field(repr=False)
    omega_radius_fn: Callable[[float], float] = field(repr=False)
    smoothness_const: float = math.inf
    growth_c: float = GROWTH_C


def euclidean_dgf(dim: int) -> DgfGeometry:
    """Half squared Euclidean norm; every Bregman op reduces exactly."""
    if dim < 1:
        raise ValueError(f"dimension must be positive, got {dim}")

    def omega(z: Array) -> float:
        return 0.5 * float(np.dot(z, z))

    ident = lambda z: np.array(z, dtype=np.float64, copy=True)  # noqa: E731
    return DgfGeometry(dim=dim, norm_id="l2", p=2.0, omega=omega,
                       grad_omega=ident, grad_omega_conj=ident,
                       omega_radius_fn=lambda r: 0.5 * r * r,
                       smoothness_const=1.0, growth_c=0.5)


def _signed_power(z: Array, expo: float) -> Array:
    return np.sign(z) * np.abs(z) ** expo


def lp_dgf(d: int) -> DgfGeometry:
    """The l1-adapted d.g.f.: a scaled squared lp norm, p = 1 + 1/log d.

    omega(z) = (C_d/2) * ||z||_p^2 with C_d = exp((log d - 1)/(log d + 1)).
    Its range over an l1 ball of radius r is at most 0.48 * log(d) * r^2,
    and the gradient map is invertible in closed form via the dual exponent
    q = p/(p-1). Two caveats. First, with this O(1) scaling the divergence
    does NOT dominate (1/2)||.||_1^2: along maximally spread directions
    (z and z' - z both proportional to the all-ones vector) the ratio of
    divergence to half squared l1 distance equals exp(-1) for every d; the
    modulus certified by the sharp p-norm convexity inequality plus norm
    comparison is (p-1) * C_d * d^(2/p - 2) = 1/(e log d). A unit l1
    modulus would need the scale grown by a log(d) * e factor, which would
    in turn inflate the omega range to Theta(log d) * r^2. Second, grad
    omega has no Lipschitz modulus in this geometry (smoothness_const is
    unbounded), which rules the geometry out of the proximal-point loop.
    """
    if d < 3:
        raise ValueError(f"lp geometry needs dimension >= 3, got {d}")
    logd = math.log(d)
    p = 1.0 + 1.0 / logd
    q = p / (p - 1.0)
    C = math.exp((logd - 1.0) / (logd + 1.0))

    def omega(z: Array) -> float:
        return 0.5 * C * float(np.linalg.norm(z, ord=p)) ** 2

    def grad_omega(z: Array) -> Array:
        nrm = float(np.linalg.norm(z, ord=p))
        if nrm == 0.0:
            return np.zeros_like(z)
        return C * nrm ** (2.0 - p) * _signed_power(z, p - 1.0)

    def grad_omega_conj(zeta: Array) -> Array:
        nrm = float(np.linalg.norm(zeta, ord=q))
        if nrm == 0.0:
            return np.zeros_like(zeta)
        return (1.0 / C) * nrm ** (2.0 - q) * _signed_power(zeta, q - 1.0)

    return DgfGeometry(dim=d, norm_id="l1", p=p, omega=omega,
                       grad_omega=grad_omega,
                       grad_omega_conj=grad_omega_conj,
                       omega_radius_fn=lambda r: GROWTH_C * logd * r * r,
                       smoothness_const=math.inf, growth_c=GROWTH_C)


def bregman_div(geo: DgfGeometry, z_prime, z) -> float:
    """Divergence D(z', z); nonnegative, zero exactly at z' = z."""
    z_prime = as_point(z_prime, dim=geo.dim)
    z = as_point(z, dim=geo.dim)
    val = geo.omega(z_prime) - geo.omega(z) \
        - float(np.dot(geo.grad_omega(z), z_prime - z))
    return max(val, 0.0)


# ----------------- prox-mappings -----------------

def _reg_weight(reg) -> Tuple[float, Optional[Array]]:
    if reg is None:
        return 0.0, None
    eps_r, Omega_r, z0 = reg
    if eps_r < 0.0 or Omega_r <= 0.0:
        raise ValueError("reg needs eps >= 0 and Omega > 0, got "
                         f"({eps_r}, {Omega_r})")
    return eps_r / math.sqrt(Omega_r), z0


def _lp_l1ball_prox(m: Array, radius: float, C: float, p: float) -> Array:
    """argmin omega(z) - <m, z> over the origin-centered l1 ball.

    Coordinates decouple once the l1-norm multiplier nu is fixed: active
    coordinates satisfy a signed power law in (|m_i| - nu), and the common
    scale factor has a closed form, so the l1 norm of the candidate is a
    decreasing function of nu. Bisection drives it to the radius with
    multiplier tolerance 1e-12.
    """
    inv = 1.0 / (p - 1.0)

    def candidate(nu: float) -> Array:
        w = np.maximum(np.abs(m) - nu, 0.0)
        wmax = float(np.max(w))
        if wmax == 0.0:
            return np.zeros_like(m)
        # scale-normalized powers keep the huge exponent 1/(p-1) applied
        # only to numbers at most 1
        tau = (w / wmax) ** inv
        scale = wmax / (C * float(np.linalg.norm(tau, ord=p)) ** (2.0 - p))
        return scale * tau * np.sign(m)

    z = candidate(0.0)
    if float(np.sum(np.abs(z))) <= radius + _BISECT_TOL:
        return z
    lo, hi = 0.0, float(np.max(np.abs(m)))
    while hi - lo > _BISECT_TOL * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if float(np.sum(np.abs(candidate(mid)))) > radius:
            lo = mid
        else:
            hi = mid
    z = candidate(hi)
    nrm = float(np.sum(np.abs(z)))
    if nrm > radius and nrm > 0.0:
        z *= radius / nrm
    return z


def _lp_box_prox(m: Array, lo_b: Array, hi_b: Array, C: float,
                 p: float) -> Array:
    """argmin omega(z) - <m, z> over a box, by bisection in the lp scale.

    At a fixed value s of ||z||_p the optimality condition decouples into
    clipped signed powers of m; the clipped candidate's lp norm is
    nonincreasing in s, so the self-consistent s is found by bisection.
    """
    inv = 1.0 / (p - 1.0)
    s_hi = float(np.linalg.norm(np.maximum(np.abs(lo_b), np.abs(hi_b)),
                                ord=p))
    if s_hi == 0.0:
        return np.zeros_like(m)
    mabs = np.abs(m)
    mmax = float(np.max(mabs))

    def candidate(s: float) -> Array:
        if mmax == 0.0:
            u = np.zeros_like(m)
        else:
            try:
                lead = (mmax / (C * s ** (2.0 - p))) ** inv
            except OverflowError:
                lead = math.inf
            u = np.sign(m) * (lead * (mabs / mmax) ** inv)
        return np.clip(u, lo_b, hi_b)

    lo_s, hi_s = 0.0, s_hi
    for _ in range(200):
        if hi_s - lo_s <= _BISECT_TOL * s_hi:
            break
        mid = 0.5 * (lo_s + hi_s)
        if float(np.linalg.norm(candidate(mid), ord=p)) > mid:
            lo_s = mid
        else:
            hi_s = mid
    return candidate(0.5 * (lo_s + hi_s))


def bregman_prox(z, zeta, feasible: FeasibleSet, geo: DgfGeometry,
                 reg=None) -> Array:
    """Minimize <zeta, z'> + D(z', z) (+ optional anchored divergence).

    `reg`, when given, is a triple (eps, Omega, z0) adding the composite
    term (eps / sqrt(Omega)) * D(z', z0) to the objective, which keeps a
    regularizer exact inside the step instead of linearizing it.

    Supported pairs: any set with the Euclidean geometry (reduces to
    `prox_map`), and whole-space / box / origin-centered l1-ball with the
    lp geometry. Everything else raises UnsupportedGeometryError.
    """
    z = as_point(z, dim=geo.dim)
    zeta = as_point(zeta, dim=geo.dim)
    if not feasible.contains(z):
        raise ValueError("prox base point must be feasible")
    a, z0 = _reg_weight(reg)

    if geo.norm_id == "l2":
        if a == 0.0:
            return prox_map(z, zeta, feasible)
        z0 = as_point(z0, dim=geo.dim)
        return project(feasible, (z - zeta + a * z0) / (1.0 + a))

    if geo.norm_id != "l1":
        raise UnsupportedGeometryError(
            f"no prox solver for geometry {geo.norm_id!r}")

    # first-order target: grad omega(z*) = m on the active face
    m = geo.grad_omega(z) - zeta
    if a > 0.0:
        z0 = as_point(z0, dim=geo.dim)
        m = (m + a * geo.grad_omega(z0)) / (1.0 + a)
    # the d.g.f. scale constant, recovered at a unit vector
    e0 = np.zeros(geo.dim)
    e0[0] = 1.0
    C = 2.0 * geo.omega(e0)

    if feasible.kind == "whole-space":
        return geo.grad_omega_conj(m)
    if feasible.kind == "box":
        return _lp_box_prox(m, feasible.lo, feasible.hi, C, geo.p)
    if feasible.kind == "l1-ball":
        if float(np.linalg.norm(feasible.center)) != 0.0:
            raise UnsupportedGeometryError(
                "l1-ball prox in lp geometry needs an origin-centered ball")
        return _lp_l1ball_prox(m, feasible.radius, C, geo.p)
    raise UnsupportedGeometryError(
        f"no lp-geometry prox for feasible set kind {feasible.kind!r}")


def strong_measure_bregman(z, zeta, L: float, feasible: FeasibleSet,
                           geo: DgfGeometry) -> float:
    """Strong stationarity measure in the given geometry.

    sqrt(2L * m) with m the maximum of -<zeta, z'-z> - L*D(z', z) over the
    set; the maximizer is the Bregman mirror step with step zeta / L.
    """
    if L <= 0.0:
        raise ValueError(f"curvature L must be positive, got {L}")
    z = as_point(z, dim=geo.dim)
    zeta = as_point(zeta, dim=geo.dim)
    p_star = bregman_prox(z, zeta / L, feasible, geo)
    lin = -float(np.dot(zeta, p_star - z))
    m = lin - L * bregman_div(geo, p_star, z)
    # the bracket cancels O(omega) terms even when zeta is tiny, so the
    # roundoff floor has to scale with those magnitudes, not with zeta
    cross = float(np.dot(geo.grad_omega(z), p_star - z))
    scale = abs(lin) + L * (abs(geo.omega(p_star)) + abs(geo.omega(z))
                            + abs(cross))
    floor = _NEG_CLAMP * max(1.0, scale)
    if m < floor:
        raise ArithmeticError(
            f"negative bracket {m} in the Bregman strong measure")
    # + 0.0 keeps a clamped -0.0 bracket from leaking a negative zero
    return math.sqrt(2.0 * L * max(m, 0.0) + 0.0)


# ----------------- accelerated loop -----------------

def _bregman_epoch(anchor: Array, feasible: FeasibleSet, geo: DgfGeometry,
                   gamma: float, T: int, oracle: InexactOracle, lam: float,
                   center: Array,
                   counters: Optional[CallCounters]) -> Array:
    """One accelerated epoch with divergence steps and an exact composite.

    The strongly convex term lam * D(., center) is carried inside each
    prox-mapping with its accumulated weight rather than linearized, so the
    geometry never needs a smooth gradient map.
    """
    z = anchor.copy()
    G = np.zeros_like(anchor)
    weight_sum = 0.0
    for t in range(T):
        com = (gamma * weight_sum * lam, 1.0, center) if lam > 0.0 else None
        u = bregman_prox(anchor, gamma * G, feasible, geo, reg=com)
        tau = 2.0 * (t + 2) / ((t + 1) * (t + 4))
        v = tau * u + (1.0 - tau) * z
        a_t = 0.5 * (t + 2)
        g = a_t * oracle.grad_fn(v)
        if not np.all(np.isfinite(g)):
            raise ArithmeticError(
                f"non-finite gradient at inner iteration t={t}")
        com_w = (gamma * a_t * lam, 1.0, center) if lam > 0.0 else None
        w = bregman_prox(u, gamma * g, feasible, geo, reg=com_w)
        z = tau * w + (1.0 - tau) * z
        G += g
        weight_sum += a_t
        if counters is not None:
            counters.proj += 2
    return z


def bregman_restart_fgm(z0, feasible: FeasibleSet, geo: DgfGeometry,
                        L: float, lam: float, eps: float,
                        oracle: InexactOracle, R: Optional[float] = None,
                        counters: Optional[CallCounters] = None) -> Array:
    """Restarted accelerated solve of f + lam * D(., z0) to accuracy eps.

    Epoch length scales with the square root of the geometry's range
    constant times (L + lam)/lam; the epoch count is logarithmic in the
    initial radius. The final point satisfies the distance, gap, and
    dual-norm gradient bounds of the strongly convex restart analysis with
    eps as the driving accuracy.

    With the Euclidean geometry this delegates to `restart_fgm` on the
    regularizer-augmented oracle and behaves identically to the Euclidean
    restart scheme. `R` bounds the initial distance to the minimizer;
    defaults to twice the set's radius bound and must be given for
    unbounded sets.
    """
    if L <= 0.0 or lam <= 0.0 or eps <= 0.0:
        raise ValueError("L, lam, and eps must all be positive, got "
                         f"({L}, {lam}, {eps})")
    z0 = as_point(z0, dim=geo.dim)
    if not feasible.contains(z0):
        raise ValueError("start point must be feasible")
    if R is None:
        if not feasible.bounded:
            raise ValueError("R is required on an unbounded set")
        R = 2.0 * feasible.radius_bound
    growth = 2.0 * geo.omega_radius_fn(1.0)
    T = max(1, int(math.ceil(math.sqrt(40.0 * growth * (L + lam) / lam))))
    Omega_R = geo.omega_radius_fn(R)
    S = max(1, int(math.ceil(math.log2(3.0 * (L + lam)) +
                             0.5 * math.log2(2.0 * Omega_R) -
                             math.log2(eps))))
    logger.debug("bregman_restart_fgm: T=%d S=%d growth=%.3g", T, S, growth)

    if geo.norm_id == "l2":
        def grad_reg(z: Array) -> Array:
            return oracle.grad_fn(z) + lam * (z - z0)

        reg_oracle = InexactOracle(grad_fn=grad_reg,
                                   smoothness=oracle.smoothness + lam,
                                   delta=oracle.delta)
        return restart_fgm(z0, feasible, 1.0 / (L + lam), T, S, reg_oracle,
                           counters=counters)

    z = z0.copy()
    for s in range(S):
        try:
            z = _bregman_epoch(z, feasible, geo, 1.0 / L, T, oracle, lam,
                               z0, counters)
        except ArithmeticError as exc:
            raise ArithmeticError(f"epoch s={s}: {exc}") from exc
    return z


def bregman_prox_point(x0, feasible: FeasibleSet, geo: DgfGeometry,
                       grad_phi: Callable[[Array], Array], L: float,
                       Delta: float, eps: float,
                       divergence: str = "bregman",
                       counters: Optional[CallCounters] = None
                       ) -> Tuple[Array, List[float]]:
    """Proximal-point descent on a weakly convex objective, to measure eps.

    Iterates x_{t+1} ~ argmin phi(x') + 2L * D(x', x_t). The divergence
    keeps each subproblem strongly convex in the geometry's norm, but the
    outer analysis needs grad omega to be Lipschitz; geometries with
    unbounded smoothness_const (the lp d.g.f. in particular) are rejected.

    divergence="norm-squared" replaces D by half the squared Euclidean
    distance: a steepest-descent workaround that runs in any geometry, with
    progress tracked by the Euclidean strong measure instead (its decrease
    is measured, not guaranteed by the schedule below).

    The iteration count T grows like smoothness^2 * L * Delta / eps^2 so
    the best measure along the way reaches eps up to the subproblem
    tolerance terms. Returns the iterate with the smallest recorded measure
    and the full list of per-iteration measures.
    """
    if L <= 0.0 or Delta <= 0.0 or eps <= 0.0:
        raise ValueError("L, Delta, and eps must all be positive, got "
                         f"({L}, {Delta}, {eps})")
    x = as_point(x0, dim=geo.dim)
    if not feasible.contains(x):
        raise ValueError("start point must be feasible")

    if divergence == "bregman":
        if not math.isfinite(geo.smoothness_const):
            raise UnsupportedGeometryError(
                "proximal-point steps need a gradient-Lipschitz d.g.f.; "
                "this geometry's smoothness constant is unbounded")
        ell = geo.smoothness_const
    elif divergence == "norm-squared":
        ell = 1.0
    else:
        raise ValueError(f"unknown divergence {divergence!r}")

    T = max(1, int(math.ceil(16.0 * ell ** 2 * L * Delta / eps ** 2)))
    eps_sub = eps / 4.0
    if feasible.bounded:
        R_sub = 2.0 * feasible.radius_bound
    else:
        R_sub = 3.0 * math.sqrt(2.0 * Delta / L)
    gap_sub = Delta + 2.0 * L * R_sub ** 2

    measures: List[float] = []
    best_x, best_m = x, math.inf
    for t in range(T):
        if counters is not None:
            counters.grad += 1
        g_here = grad_phi(x)
        if divergence == "bregman":
            m_t = strong_measure_bregman(x, g_here, L, feasible, geo)
        else:
            from .stationarity import strong_measure
            m_t = strong_measure(x, g_here, L, feasible)
        measures.append(m_t)
        if m_t < best_m:
            best_x, best_m = x, m_t
        if m_t <= eps:
            break

        if divergence == "bregman":
            oracle = InexactOracle(grad_fn=grad_phi, smoothness=L)
            x = bregman_restart_fgm(x, feasible, geo, L, 2.0 * L, eps_sub,
                                    oracle, R=R_sub, counters=counters)
        else:
            x = prox_point_via_fgm(x, grad_phi, L, feasible, eps_sub,
                                   gap_sub, counters=counters)
    logger.debug("bregman_prox_point: best measure %.3e after %d steps",
                 best_m, len(measures))
    return best_x, measures
