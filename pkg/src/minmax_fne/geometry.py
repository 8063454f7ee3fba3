"""Feasible sets, Euclidean projections, and the prox-mapping.

Every solver loop in this package reduces its per-iteration work to one or two
projections onto a feasible set. The sets supported here are exactly the ones
with cheap exact projections: boxes, Euclidean balls, the probability simplex
(scaled), l1-balls, and the whole space. Projections are tolerance-free and
deterministic; degenerate sets (zero radius, lo == hi) are legal and project
to the unique member.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

Array = np.ndarray

_KINDS = ("whole-space", "box", "euclidean-ball", "simplex", "l1-ball")


def as_point(z, dim: Optional[int] = None) -> Array:
    """Validate and return a point as a finite float64 1-D array.

    Parameters
    ----------
    z : array_like
        Candidate point.
    dim : int, optional
        Required dimension; checked when given.
    """
    arr = np.asarray(z, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"points must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point has non-finite coordinates")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {arr.shape[0]}")
    return arr


@dataclass(frozen=True)
class FeasibleSet:
    """Projection-friendly convex set with radius metadata.

    Use the constructors (`box`, `ball`, `simplex`, `l1_ball`, `whole_space`)
    rather than filling fields by hand.

    Attributes
    ----------
    kind : str
        One of {"whole-space", "box", "euclidean-ball", "simplex", "l1-ball"}.
    dim : int
        Ambient dimension.
    lo, hi : ndarray or None
        Box bounds (coordinatewise), box only.
    center : ndarray or None
        Ball / l1-ball center; midpoint for boxes; barycenter for simplices;
        origin for the whole space.
    radius : float or None
        Ball / l1-ball radius; simplex scale.
    radius_bound : float or None
        Euclidean radius of a ball around `center` containing the set; None
        means unbounded (whole space only). Operations requiring boundedness
        must reject None.
    """

    kind: str
    dim: int
    lo: Optional[Array] = None
    hi: Optional[Array] = None
    center: Optional[Array] = field(default=None)
    radius: Optional[float] = None
    radius_bound: Optional[float] = None

    # ----------------- constructors -----------------

    @staticmethod
    def whole_space(dim: int) -> "FeasibleSet":
        if dim < 1:
            raise ValueError("dimension must be at least 1")
        return FeasibleSet(kind="whole-space", dim=int(dim),
                           center=np.zeros(int(dim)), radius_bound=None)

    @staticmethod
    def box(lo, hi) -> "FeasibleSet":
        lo = as_point(lo)
        hi = as_point(hi, dim=lo.shape[0])
        if not np.all(lo <= hi):
            raise ValueError("box requires lo <= hi coordinatewise")
        center = 0.5 * (lo + hi)
        half_diag = 0.5 * float(np.linalg.norm(hi - lo))
        return FeasibleSet(kind="box", dim=lo.shape[0], lo=lo, hi=hi,
                           center=center, radius_bound=half_diag)

    @staticmethod
    def ball(center, radius: float) -> "FeasibleSet":
        center = as_point(center)
        radius = float(radius)
        if radius < 0.0:
            raise ValueError("ball radius must be nonnegative")
        return FeasibleSet(kind="euclidean-ball", dim=center.shape[0],
                           center=center, radius=radius, radius_bound=radius)

    @staticmethod
    def simplex(dim: int, scale: float = 1.0) -> "FeasibleSet":
        if dim < 1:
            raise ValueError("dimension must be at least 1")
        scale = float(scale)
        if scale <= 0.0:
            raise ValueError("simplex scale must be positive")
        center = np.full(int(dim), scale / dim)
        # farthest member from the barycenter is a vertex scale*e_i
        rb = scale * np.sqrt(max(1.0 - 1.0 / dim, 0.0))
        return FeasibleSet(kind="simplex", dim=int(dim), center=center,
                           radius=scale, radius_bound=float(rb))

    @staticmethod
    def l1_ball(center, radius: float) -> "FeasibleSet":
        center = as_point(center)
        radius = float(radius)
        if radius < 0.0:
            raise ValueError("l1-ball radius must be nonnegative")
        # ||z - c||_2 <= ||z - c||_1 <= radius
        return FeasibleSet(kind="l1-ball", dim=center.shape[0], center=center,
                           radius=radius, radius_bound=radius)

    # ----------------- queries -----------------

    @property
    def bounded(self) -> bool:
        return self.radius_bound is not None

    def contains(self, z: Array, tol: float = 1e-9) -> bool:
        """Membership check with absolute slack `tol`."""
        z = as_point(z, dim=self.dim)
        if self.kind == "whole-space":
            return True
        if self.kind == "box":
            return bool(np.all(z >= self.lo - tol) and np.all(z <= self.hi + tol))
        if self.kind == "euclidean-ball":
            return float(np.linalg.norm(z - self.center)) <= self.radius + tol
        if self.kind == "simplex":
            return bool(np.all(z >= -tol)
                        and abs(float(np.sum(z)) - self.radius) <= tol * self.dim)
        if self.kind == "l1-ball":
            return float(np.sum(np.abs(z - self.center))) <= self.radius + tol
        raise ValueError(f"unknown set kind {self.kind!r}")


# ----------------- projections -----------------

def _project_simplex(v: Array, scale: float) -> Array:
    # Sort-and-threshold projection onto {p >= 0, sum p = scale}, O(d log d).
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - scale
    ind = np.arange(1, v.shape[0] + 1)
    cond = u - css / ind > 0
    # cond[0] always holds: u[0] - (u[0] - scale) = scale > 0
    rho = int(ind[cond][-1])
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def _project_l1_ball(v: Array, radius: float) -> Array:
    if float(np.sum(np.abs(v))) <= radius:
        return v.copy()
    if radius == 0.0:
        return np.zeros_like(v)
    w = _project_simplex(np.abs(v), radius)
    return np.sign(v) * w


def project(feasible: FeasibleSet, z: Array) -> Array:
    """Euclidean projection of `z` onto `feasible`.

    Parameters
    ----------
    feasible : FeasibleSet
    z : ndarray
        Point to project; dimension must match the set.

    Returns
    -------
    ndarray
        The unique minimizer of ||z' - z|| over the set. Idempotent; members
        are returned unchanged.
    """
    z = as_point(z, dim=feasible.dim)
    kind = feasible.kind
    if kind == "whole-space":
        return z.copy()
    if kind == "box":
        return np.clip(z, feasible.lo, feasible.hi)
    if kind == "euclidean-ball":
        d = z - feasible.center
        nrm = float(np.linalg.norm(d))
        if nrm <= feasible.radius:
            return z.copy()
        return feasible.center + d * (feasible.radius / nrm)
    if kind == "simplex":
        # exact members pass through untouched; the sort-and-threshold path
        # would otherwise shift every coordinate by a roundoff-sized theta
        if np.all(z >= 0.0) and float(np.sum(z)) == feasible.radius:
            return z.copy()
        return _project_simplex(z, feasible.radius)
    if kind == "l1-ball":
        return feasible.center + _project_l1_ball(z - feasible.center,
                                                  feasible.radius)
    raise ValueError(f"unknown set kind {kind!r}")


def prox_map(z: Array, zeta: Array, feasible: FeasibleSet) -> Array:
    """Euclidean prox-mapping: argmin_{z' in set} <zeta, z'> + 0.5||z' - z||^2.

    Equals project(feasible, z - zeta); in the whole-space case this is the
    plain gradient-style step z - zeta.
    """
    z = as_point(z, dim=feasible.dim)
    zeta = as_point(zeta, dim=feasible.dim)
    return project(feasible, z - zeta)


def set_center(feasible: FeasibleSet) -> Array:
    """A canonical interior-ish member: box midpoint, ball/l1 center, simplex
    barycenter, origin for the whole space."""
    return feasible.center.copy()
