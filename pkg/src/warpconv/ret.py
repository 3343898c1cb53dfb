"""Mixed euclidean/taxi distance with a stretched fiber direction.

For a stretch ratio R >= 1, the cost of moving (ds, dsigma) in base and
fiber is the cheapest split of the fiber displacement into a euclidean part
(where the fiber direction counts R times its arc length) and a flat taxi
tail:

    d = min over T in [0, dsigma] of sqrt(ds^2 + R^2 T^2) + (dsigma - T).

The minimizer is T0 = ds / (R sqrt(R^2 - 1)) when that lies inside the
interval, giving the closed form

    d = sqrt(ds^2 + R^2 dsigma^2)                 if dsigma <= T0,
    d = ds sqrt(R^2 - 1) / R + dsigma             otherwise.

Both branches agree at the threshold.  The distance is homogeneous of
degree one in (ds, dsigma) and is an inf-convolution of two norms, hence a
norm itself; triangle inequality is exact.

A quadratic-stretch space (R = 2) has euclidean-branch ball boundaries on
the ellipse ds^2 + 4 dsigma^2 = r^2.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .core import BaseSpace, FiberSpace, InvalidDescriptor, SurfacePoint

__all__ = [
    "mix_threshold",
    "ret_distance",
    "ret_distance_brute",
    "ret_point_distance",
    "RETSpace",
    "ball_boundary",
]


def _check_stretch(stretch: float) -> None:
    if not (stretch >= 1.0):
        raise InvalidDescriptor("stretch ratio must be >= 1")


def mix_threshold(ds, stretch: float):
    """Fiber displacement below which the pure euclidean mix is optimal.

    Infinite when stretch == 1 (the euclidean branch always wins).
    Vectorized over ds.
    """
    _check_stretch(stretch)
    ds = np.asarray(ds, dtype=float)
    if stretch == 1.0:
        out = np.full_like(ds, np.inf)
        return out if out.ndim else float(out)
    out = ds / (stretch * math.sqrt(stretch * stretch - 1.0))
    return out if out.ndim else float(out)


def ret_distance(ds, dsigma, stretch: float):
    """Closed-form mixed distance for displacement (ds, dsigma), both >= 0.

    Vectorized over ds/dsigma (broadcast together).
    """
    _check_stretch(stretch)
    ds = np.asarray(ds, dtype=float)
    dsigma = np.asarray(dsigma, dtype=float)
    if np.any(ds < 0) or np.any(dsigma < 0):
        raise ValueError("displacements must be nonnegative")
    R = stretch
    if R == 1.0:
        out = np.hypot(ds, dsigma)
        return out if out.ndim else float(out)
    root = math.sqrt(R * R - 1.0)
    thresh = ds / (R * root)
    euclid = np.sqrt(ds * ds + (R * dsigma) ** 2)
    taxi = ds * root / R + dsigma
    out = np.where(dsigma <= thresh, euclid, taxi)
    return out if out.ndim else float(out)


def ret_distance_brute(ds, dsigma, stretch: float,
                       n_grid: int = 1000, newton_iters: int = 12):
    """Independent evaluation by direct minimization over the fiber split.

    Searches a uniform grid of candidate splits T in [0, dsigma], then
    polishes the best grid point with a few Newton steps on the smooth
    objective.  Vectorized over ds/dsigma.
    """
    _check_stretch(stretch)
    ds = np.atleast_1d(np.asarray(ds, dtype=float))
    dsigma = np.atleast_1d(np.asarray(dsigma, dtype=float))
    ds, dsigma = np.broadcast_arrays(ds, dsigma)
    R = stretch

    ts = np.linspace(0.0, 1.0, n_grid)  # scaled by dsigma per query
    T = dsigma[..., None] * ts
    vals = np.sqrt(ds[..., None] ** 2 + (R * T) ** 2) + (dsigma[..., None] - T)
    best_idx = np.argmin(vals, axis=-1)
    Tb = np.take_along_axis(T, best_idx[..., None], axis=-1)[..., 0]

    # Newton polish on phi(T) = sqrt(ds^2 + R^2 T^2) + dsigma - T,
    # clamped into the feasible interval
    for _ in range(newton_iters):
        rad = np.sqrt(ds * ds + (R * Tb) ** 2)
        with np.errstate(invalid="ignore", divide="ignore"):
            d1 = (R * R) * Tb / rad - 1.0
            d2 = (R * R) * (1.0 - (R * R) * Tb * Tb / (rad * rad)) / rad
            step = np.where(d2 > 0, d1 / np.where(d2 > 0, d2, 1.0), 0.0)
        Tb = np.clip(Tb - np.where(np.isfinite(step), step, 0.0),
                     0.0, dsigma)
    out = np.sqrt(ds * ds + (R * Tb) ** 2) + (dsigma - Tb)
    # endpoints of the interval are candidates too
    out = np.minimum(out, np.hypot(ds, R * dsigma))
    out = np.minimum(out, ds + dsigma)
    return out if out.shape != (1,) else float(out[0])


def ret_point_distance(p: SurfacePoint, q: SurfacePoint, stretch: float,
                       base: Optional[BaseSpace] = None,
                       fiber: Optional[FiberSpace] = None) -> float:
    """Mixed distance between two surface points.

    Base displacement is |p.r - q.r| (or the base geodesic arc when a base
    space is given); fiber displacement is |p.theta - q.theta| (or the minor
    arc when a fiber is given).
    """
    ds = base.distance(p.r, q.r) if base is not None else abs(p.r - q.r)
    dsig = (fiber.distance(p.theta, q.theta) if fiber is not None
            else abs(p.theta - q.theta))
    return float(ret_distance(ds, dsig, stretch))


@dataclass(frozen=True)
class RETSpace:
    """Product of a base space and fiber circle carrying the mixed metric."""

    base: BaseSpace
    fiber: FiberSpace
    stretch: float

    def __post_init__(self):
        _check_stretch(self.stretch)

    def distance(self, p: SurfacePoint, q: SurfacePoint) -> float:
        return ret_point_distance(p, q, self.stretch, self.base, self.fiber)

    def diameter_upper_bound(self) -> float:
        ds = self.base.length / 2.0 if self.base.is_circle else self.base.length
        return float(ret_distance(ds, self.fiber.diameter, self.stretch))


def ball_boundary(stretch: float, radius: float,
                  n_angles: int = 256) -> np.ndarray:
    """Boundary of the metric ball of the given radius around the origin.

    Returns an (n_angles, 2) array of (ds, dsigma) points in the closed
    first quadrant, located by bisection along each direction ray (the
    distance is monotone along rays).
    """
    _check_stretch(stretch)
    if radius <= 0:
        raise ValueError("radius must be positive")
    angles = np.linspace(0.0, math.pi / 2.0, n_angles)
    pts = np.empty((n_angles, 2))
    for i, phi in enumerate(angles):
        ux, uy = math.cos(phi), math.sin(phi)
        lo, hi = 0.0, radius * max(1.0, stretch)  # d(unit ray) >= 1/stretch
        while float(ret_distance(hi * ux, hi * uy, stretch)) < radius:
            hi *= 2.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if float(ret_distance(mid * ux, mid * uy, stretch)) < radius:
                lo = mid
            else:
                hi = mid
        t = 0.5 * (lo + hi)
        pts[i] = (t * ux, t * uy)
    return pts
