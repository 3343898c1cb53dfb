"""Warped-product surfaces: warping profiles, spaces, curves, and metric bounds.

A warped-product surface is a base segment or circle crossed with a fiber
circle, carrying the metric  dr^2 + f(r)^2 dtheta^2  for a positive warping
profile f.  This module holds the profile families, the space/curve types,
length and energy functionals, L^p profile distances, and the closed-form
diameter / bi-Lipschitz bounds used throughout the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

TAU = 2.0 * math.pi

# Max number of bump supports a quadrature interval will be refined at.
# Beyond this the bumps are narrower than anything a length integral can
# resolve and their total measure is negligible; see BumpLatticeProfile.
_BREAKPOINT_CAP = 4096


class DomainError(ValueError):
    """A coordinate fell outside the base domain."""


class HypothesisError(ValueError):
    """An operation's mathematical hypothesis is not satisfied."""


class InvalidDescriptor(ValueError):
    """A JSON profile/scenario descriptor failed validation."""


# ---------------------------------------------------------------------------
# Fiber and base
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiberSpace:
    """Circle fiber with arc-length distance."""

    circumference: float = TAU

    def __post_init__(self):
        if not (self.circumference > 0):
            raise InvalidDescriptor("fiber circumference must be positive")

    @property
    def diameter(self) -> float:
        return 0.5 * self.circumference

    def wrap(self, theta: float) -> float:
        return theta % self.circumference

    def distance(self, a: float, b: float) -> float:
        """Arc distance on the fiber (never exceeds half the circumference)."""
        d = abs(a - b) % self.circumference
        return min(d, self.circumference - d)

    def signed_minor(self, a: float, b: float) -> float:
        """Signed displacement a->b along the minor arc."""
        d = (b - a) % self.circumference
        if d > 0.5 * self.circumference:
            d -= self.circumference
        return d


@dataclass(frozen=True)
class BaseSpace:
    """Base of the warped product: an interval or a circle of length 2*pi.

    Interval bases use |r1 - r2|; circle bases use arc distance with the
    coordinate wrapped into [-pi, pi).
    """

    kind: str = "interval"
    r_min: float = -math.pi
    r_max: float = math.pi

    def __post_init__(self):
        if self.kind not in ("interval", "circle"):
            raise InvalidDescriptor(f"unknown base kind {self.kind!r}")
        if self.kind == "circle":
            object.__setattr__(self, "r_min", -math.pi)
            object.__setattr__(self, "r_max", math.pi)
        if not (self.r_max > self.r_min):
            raise InvalidDescriptor("base requires r_max > r_min")

    @property
    def is_circle(self) -> bool:
        return self.kind == "circle"

    @property
    def length(self) -> float:
        return self.r_max - self.r_min

    def contains(self, r: float) -> bool:
        if self.is_circle:
            return True
        return self.r_min - 1e-12 <= r <= self.r_max + 1e-12

    def wrap(self, r):
        """Map a coordinate into the fundamental domain (no-op for intervals)."""
        if self.is_circle:
            return (np.asarray(r) - self.r_min) % self.length + self.r_min
        return r

    def distance(self, a: float, b: float) -> float:
        if self.is_circle:
            d = abs(a - b) % self.length
            return min(d, self.length - d)
        return abs(a - b)

    def signed_minor(self, a: float, b: float) -> float:
        if not self.is_circle:
            return b - a
        d = (b - a) % self.length
        if d > 0.5 * self.length:
            d -= self.length
        return d


def interval_base(r_min: float = -math.pi, r_max: float = math.pi) -> BaseSpace:
    return BaseSpace("interval", r_min, r_max)


def circle_base() -> BaseSpace:
    return BaseSpace("circle")


# ---------------------------------------------------------------------------
# Warping profiles
# ---------------------------------------------------------------------------


def _bump_shape(t):
    """Canonical cosine bump: 1 at t=0, 0 for |t|>=1, C^1 at the edges."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    out[inside] = 0.5 * (1.0 + np.cos(math.pi * t[inside]))
    return out


def _bump_shape_integral(t0: float, t1: float) -> float:
    """Integral of the canonical bump shape over [t0, t1] (clipped to [-1,1])."""
    a = max(-1.0, min(1.0, t0))
    b = max(-1.0, min(1.0, t1))
    if b <= a:
        return 0.0

    def anti(t):
        return 0.5 * (t + math.sin(math.pi * t) / math.pi)

    return anti(b) - anti(a)


class WarpingProfile:
    """Base class for warping profiles f(r) > 0."""

    level: float

    def __call__(self, r):
        raise NotImplementedError

    def breakpoints_in(self, lo: float, hi: float) -> np.ndarray:
        """Interior points of [lo, hi] where the profile changes analytic piece.

        May omit bump supports when more than a resolution cap of them fall in
        the interval (only possible for lattice profiles whose bumps are far
        below quadrature resolution).
        """
        raise NotImplementedError

    def _extremum_candidates(self, lo: float, hi: float) -> np.ndarray:
        inner = self.breakpoints_in(lo, hi)
        return np.concatenate(([lo], inner, [hi]))

    def min_on(self, lo: float, hi: float) -> float:
        cands = self._extremum_candidates(lo, hi)
        return float(np.min(self(cands)))

    def max_on(self, lo: float, hi: float) -> float:
        cands = self._extremum_candidates(lo, hi)
        return float(np.max(self(cands)))

    def integral_on(self, lo: float, hi: float) -> float:
        raise NotImplementedError

    def lp_from_level(self, level: float, p: float, base: "BaseSpace") -> float:
        """L^p norm of (profile - level) over the base domain."""
        return lp_profile_distance(self, ConstantProfile(level), p, base)

    def to_descriptor(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantProfile(WarpingProfile):
    level: float = 1.0

    def __post_init__(self):
        if not (self.level > 0):
            raise InvalidDescriptor("constant profile must be positive")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.full_like(r, self.level)

    def breakpoints_in(self, lo, hi):
        return np.empty(0)

    def min_on(self, lo, hi):
        return self.level

    def max_on(self, lo, hi):
        return self.level

    def integral_on(self, lo, hi):
        return self.level * (hi - lo)

    def to_descriptor(self):
        return {"family": "constant", "params": {"level": self.level}}


@dataclass(frozen=True)
class BumpProfile(WarpingProfile):
    """Constant level with one cosine bump: a cinch (peak < level),
    a ridge (peak > level), or a dip from a higher level.
    """

    level: float
    peak: float
    center: float
    half_width: float

    def __post_init__(self):
        if not (self.level > 0 and self.peak > 0):
            raise InvalidDescriptor("profile values must stay positive")
        if not (self.half_width > 0):
            raise InvalidDescriptor("half_width must be positive")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        t = (r - self.center) / self.half_width
        return self.level + (self.peak - self.level) * _bump_shape(t)

    def breakpoints_in(self, lo, hi):
        pts = [self.center - self.half_width, self.center, self.center + self.half_width]
        return np.array([p for p in pts if lo < p < hi])

    def integral_on(self, lo, hi):
        t0 = (lo - self.center) / self.half_width
        t1 = (hi - self.center) / self.half_width
        bump = (self.peak - self.level) * self.half_width * _bump_shape_integral(t0, t1)
        return self.level * (hi - lo) + bump

    def to_descriptor(self):
        if self.level == 1.0 and self.peak < 1.0:
            return {"family": "cinch_bump",
                    "params": {"h0": self.peak, "center": self.center,
                               "half_width": self.half_width}}
        if self.level == 1.0 and self.peak > 1.0:
            return {"family": "ridge_bump",
                    "params": {"h0": self.peak, "center": self.center,
                               "half_width": self.half_width}}
        return {"family": "sum_of_bumps",
                "params": {"level": self.level,
                           "bumps": [{"peak": self.peak, "center": self.center,
                                      "half_width": self.half_width}]}}


def cinch_bump(h0: float, center: float = 0.0, half_width: float = 1.0) -> BumpProfile:
    """Level-1 profile dipping to h0 at the center; h0 in (0, 1]."""
    if not (0.0 < h0 <= 1.0):
        raise InvalidDescriptor("cinch depth h0 must lie in (0, 1]")
    return BumpProfile(1.0, h0, center, half_width)


def ridge_bump(h0: float, center: float = 0.0, half_width: float = 1.0) -> BumpProfile:
    """Level-1 profile rising to h0 at the center; h0 in (1, 2]."""
    if not (1.0 < h0 <= 2.0):
        raise InvalidDescriptor("ridge height h0 must lie in (1, 2]")
    return BumpProfile(1.0, h0, center, half_width)


@dataclass(frozen=True)
class SumOfBumpsProfile(WarpingProfile):
    """Constant level plus a finite list of cosine bumps.

    Bumps are (peak, center, half_width) triples.  Supports are expected to be
    disjoint (overlaps superpose deviations, which none of the stock families
    use).
    """

    level: float
    bumps: Tuple[Tuple[float, float, float], ...]

    def __post_init__(self):
        if not (self.level > 0):
            raise InvalidDescriptor("level must be positive")
        for peak, _c, hw in self.bumps:
            if not (peak > 0 and hw > 0):
                raise InvalidDescriptor("bumps need positive peak and half_width")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.full_like(r, self.level)
        for peak, center, hw in self.bumps:
            out += (peak - self.level) * _bump_shape((r - center) / hw)
        return out

    def breakpoints_in(self, lo, hi):
        pts = []
        for _peak, center, hw in self.bumps:
            for p in (center - hw, center, center + hw):
                if lo < p < hi:
                    pts.append(p)
        return np.array(sorted(pts))

    def integral_on(self, lo, hi):
        total = self.level * (hi - lo)
        for peak, center, hw in self.bumps:
            t0 = (lo - center) / hw
            t1 = (hi - center) / hw
            total += (peak - self.level) * hw * _bump_shape_integral(t0, t1)
        return total

    def to_descriptor(self):
        return {"family": "sum_of_bumps",
                "params": {"level": self.level,
                           "bumps": [{"peak": p, "center": c, "half_width": w}
                                     for p, c, w in self.bumps]}}


@dataclass(frozen=True)
class BumpLatticeProfile(WarpingProfile):
    """Identical bumps at the interior lattice points -pi + 2*pi*i/cells.

    Evaluation is O(1) via nearest-lattice-point lookup, so the profile scales
    to billions of bumps.  Only the interior points i = 1 .. cells-1 carry a
    bump (the seam at +-pi stays at the base level).
    """

    level: float
    peak: float
    cells: int
    half_width: float

    def __post_init__(self):
        if not (self.level > 0 and self.peak > 0):
            raise InvalidDescriptor("profile values must stay positive")
        if self.cells < 2:
            raise InvalidDescriptor("lattice needs at least 2 cells")
        spacing = TAU / self.cells
        if not (0 < self.half_width <= 0.5 * spacing):
            raise InvalidDescriptor("bump half_width must not exceed half the lattice spacing")

    @property
    def spacing(self) -> float:
        return TAU / self.cells

    def _nearest_center_index(self, r):
        return np.rint((np.asarray(r, dtype=float) + math.pi) / self.spacing)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        i = self._nearest_center_index(r)
        center = -math.pi + i * self.spacing
        t = (r - center) / self.half_width
        val = self.level + (self.peak - self.level) * _bump_shape(t)
        # the seam lattice point (i = 0 or i = cells) carries no bump
        interior = (i >= 1) & (i <= self.cells - 1)
        return np.where(interior, val, self.level)

    def _center_indices_in(self, lo, hi):
        i0 = max(1, int(math.ceil((lo + math.pi) / self.spacing - 1e-12)))
        i1 = min(self.cells - 1, int(math.floor((hi + math.pi) / self.spacing + 1e-12)))
        return i0, i1

    def breakpoints_in(self, lo, hi):
        i0, i1 = self._center_indices_in(lo - self.half_width, hi + self.half_width)
        count = max(0, i1 - i0 + 1)
        if count == 0 or 3 * count > _BREAKPOINT_CAP:
            # Bumps too numerous to refine: at that density their half-width
            # is far below quadrature resolution and total measure is
            # negligible, so the integrand is treated as the base level.
            return np.empty(0)
        centers = -math.pi + np.arange(i0, i1 + 1) * self.spacing
        pts = np.concatenate([centers - self.half_width, centers,
                              centers + self.half_width])
        pts = pts[(pts > lo) & (pts < hi)]
        return np.sort(pts)

    def min_on(self, lo, hi):
        i0, i1 = self._center_indices_in(lo, hi)
        vals = [float(self(np.array([lo]))[0]), float(self(np.array([hi]))[0])]
        if i1 >= i0:
            vals.append(min(self.level, self.peak))
        if i1 - i0 + 1 < self.cells - 1 or hi - lo > self.spacing:
            vals.append(self.level)
        return min(vals)

    def max_on(self, lo, hi):
        i0, i1 = self._center_indices_in(lo, hi)
        vals = [float(self(np.array([lo]))[0]), float(self(np.array([hi]))[0])]
        if i1 >= i0:
            vals.append(max(self.level, self.peak))
        if i1 - i0 + 1 < self.cells - 1 or hi - lo > self.spacing:
            vals.append(self.level)
        return max(vals)

    def integral_on(self, lo, hi):
        total = self.level * (hi - lo)
        i0, i1 = self._center_indices_in(lo - self.half_width, hi + self.half_width)
        if i1 < i0:
            return total
        # bumps fully inside contribute (peak-level)*half_width each
        amp = (self.peak - self.level) * self.half_width
        full_i0 = i0 + 1
        full_i1 = i1 - 1
        if full_i1 >= full_i0:
            total += amp * (full_i1 - full_i0 + 1)
        for i in {i0, i1} if i1 > i0 else {i0}:
            if full_i0 <= i <= full_i1:
                continue
            center = -math.pi + i * self.spacing
            t0 = (lo - center) / self.half_width
            t1 = (hi - center) / self.half_width
            total += (self.peak - self.level) * self.half_width * _bump_shape_integral(t0, t1)
        return total

    def lp_from_level(self, level, p, base):
        # Closed form: the lattice's bumps are far below quadrature resolution
        # at high cell counts, so integrate one bump shape and scale.
        if abs(level - self.level) > 1e-15:
            return super().lp_from_level(level, p, base)
        count = self.cells - 1
        amp = abs(self.peak - self.level)
        if p == 1.0:
            shape = 1.0  # integral of the bump shape over its support / half_width
        elif p == 2.0:
            shape = 0.75
        else:
            ts = np.linspace(-1.0, 1.0, 4097)
            simpson = _bump_shape(ts) ** p
            shape = float(np.sum((simpson[:-1] + simpson[1:]) * 0.5 * np.diff(ts)))
        return (count * amp ** p * self.half_width * shape) ** (1.0 / p)

    def to_descriptor(self):
        return {"family": "bump_lattice",
                "params": {"level": self.level, "peak": self.peak,
                           "cells": self.cells, "half_width": self.half_width}}


@dataclass(frozen=True)
class TabulatedProfile(WarpingProfile):
    """Piecewise-linear profile through (r, f) sample knots."""

    r_knots: Tuple[float, ...]
    f_knots: Tuple[float, ...]

    def __post_init__(self):
        r = np.asarray(self.r_knots, dtype=float)
        f = np.asarray(self.f_knots, dtype=float)
        if r.ndim != 1 or r.size < 2 or r.size != f.size:
            raise InvalidDescriptor("tabulated profile needs matching r/f arrays, length >= 2")
        if np.any(np.diff(r) <= 0):
            raise InvalidDescriptor("tabulated r knots must be strictly increasing")
        if np.any(f <= 0):
            raise InvalidDescriptor("tabulated profile values must be positive")
        object.__setattr__(self, "level", float(f[0]))

    def __call__(self, r):
        return np.interp(np.asarray(r, dtype=float), self.r_knots, self.f_knots)

    def breakpoints_in(self, lo, hi):
        r = np.asarray(self.r_knots)
        return r[(r > lo) & (r < hi)]

    def integral_on(self, lo, hi):
        r = np.asarray(self.r_knots, dtype=float)
        pts = np.unique(np.concatenate(([lo, hi], r[(r > lo) & (r < hi)])))
        vals = self(pts)
        trapezoid = getattr(np, "trapezoid", np.trapz)
        return float(trapezoid(vals, pts))

    def to_descriptor(self):
        return {"family": "tabulated",
                "params": {"r": list(self.r_knots), "f": list(self.f_knots)}}


_PROFILE_FAMILIES = {
    "constant", "cinch_bump", "ridge_bump", "sum_of_bumps", "bump_lattice",
    "tabulated",
}


def profile_from_descriptor(desc: dict) -> WarpingProfile:
    """Build a profile from a JSON descriptor {"family": ..., "params": {...}}.

    Unknown families, unknown parameter fields, and invalid values raise
    InvalidDescriptor.
    """
    if not isinstance(desc, dict):
        raise InvalidDescriptor("profile descriptor must be an object")
    extra = set(desc) - {"family", "params"}
    if extra:
        raise InvalidDescriptor(f"unknown descriptor fields: {sorted(extra)}")
    family = desc.get("family")
    params = desc.get("params", {})
    if family not in _PROFILE_FAMILIES:
        raise InvalidDescriptor(f"unknown profile family {family!r}")
    if not isinstance(params, dict):
        raise InvalidDescriptor("params must be an object")

    def need(keys):
        extra = set(params) - set(keys)
        if extra:
            raise InvalidDescriptor(f"unknown params for {family}: {sorted(extra)}")
        missing = [k for k in keys if k not in params and k not in _PARAM_DEFAULTS]
        if missing:
            raise InvalidDescriptor(f"missing params for {family}: {missing}")

    _PARAM_DEFAULTS = {"center", "half_width"}
    try:
        if family == "constant":
            # "c" is the conventional symbol for the constant level
            extra_keys = set(params) - {"level", "c"}
            if extra_keys:
                raise InvalidDescriptor(
                    f"unknown params for constant: {sorted(extra_keys)}")
            if ("level" in params) == ("c" in params):
                raise InvalidDescriptor(
                    "constant takes exactly one of 'level' or 'c'")
            value = params["level"] if "level" in params else params["c"]
            return ConstantProfile(float(value))
        if family == "cinch_bump":
            need(["h0", "center", "half_width"])
            return cinch_bump(float(params["h0"]), float(params.get("center", 0.0)),
                              float(params.get("half_width", 1.0)))
        if family == "ridge_bump":
            need(["h0", "center", "half_width"])
            return ridge_bump(float(params["h0"]), float(params.get("center", 0.0)),
                              float(params.get("half_width", 1.0)))
        if family == "sum_of_bumps":
            need(["level", "bumps"])
            bumps = []
            for b in params["bumps"]:
                bextra = set(b) - {"peak", "center", "half_width"}
                if bextra:
                    raise InvalidDescriptor(f"unknown bump fields: {sorted(bextra)}")
                bumps.append((float(b["peak"]), float(b["center"]),
                              float(b["half_width"])))
            return SumOfBumpsProfile(float(params["level"]), tuple(bumps))
        if family == "bump_lattice":
            need(["level", "peak", "cells", "half_width"])
            return BumpLatticeProfile(float(params["level"]), float(params["peak"]),
                                      int(params["cells"]), float(params["half_width"]))
        if family == "tabulated":
            need(["r", "f"])
            return TabulatedProfile(tuple(map(float, params["r"])),
                                    tuple(map(float, params["f"])))
    except InvalidDescriptor:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise InvalidDescriptor(str(exc)) from exc
    raise InvalidDescriptor(f"unhandled family {family!r}")


# ---------------------------------------------------------------------------
# Warped space
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WarpedSpace:
    """Base x fiber with metric dr^2 + f(r)^2 dtheta^2."""

    base: BaseSpace
    fiber: FiberSpace
    profile: WarpingProfile

    def warp_at(self, r):
        """Profile value at a (possibly unwrapped) base coordinate."""
        return self.profile(self.base.wrap(r))

    def profile_min(self) -> float:
        return self.profile.min_on(self.base.r_min, self.base.r_max)

    def profile_max(self) -> float:
        return self.profile.max_on(self.base.r_min, self.base.r_max)

    def breakpoints_unwrapped(self, lo: float, hi: float) -> np.ndarray:
        """Profile breakpoints over an unwrapped coordinate interval.

        For circle bases the fundamental-domain breakpoints are repeated with
        period 2*pi so that seam-crossing segments are still refined.
        """
        if not self.base.is_circle:
            lo_c = max(lo, self.base.r_min)
            hi_c = min(hi, self.base.r_max)
            if hi_c <= lo_c:
                return np.empty(0)
            return self.profile.breakpoints_in(lo_c, hi_c)
        period = self.base.length
        k0 = math.floor((lo - self.base.r_min) / period)
        k1 = math.floor((hi - self.base.r_min) / period)
        pts = []
        for k in range(int(k0), int(k1) + 1):
            shift = k * period
            local = self.profile.breakpoints_in(lo - shift, hi - shift)
            if local.size:
                pts.append(local + shift)
        if not pts:
            return np.empty(0)
        out = np.concatenate(pts)
        return np.sort(out[(out > lo) & (out < hi)])

    def warp_min_on(self, lo: float, hi: float) -> float:
        """Min of the profile over an unwrapped coordinate interval."""
        if hi < lo:
            lo, hi = hi, lo
        cands = np.concatenate(([lo], self.breakpoints_unwrapped(lo, hi), [hi]))
        return float(np.min(self.warp_at(cands)))

    def warp_max_on(self, lo: float, hi: float) -> float:
        if hi < lo:
            lo, hi = hi, lo
        cands = np.concatenate(([lo], self.breakpoints_unwrapped(lo, hi), [hi]))
        return float(np.max(self.warp_at(cands)))

    def mass(self) -> float:
        """Riemannian area: fiber circumference times the profile integral."""
        return self.fiber.circumference * self.profile.integral_on(
            self.base.r_min, self.base.r_max)


class SurfacePoint(NamedTuple):
    r: float
    theta: float


# ---------------------------------------------------------------------------
# Curves and length
# ---------------------------------------------------------------------------


@dataclass
class PolylineCurve:
    """Piecewise-straight curve in (r, theta) parameter space.

    theta is stored in [0, circumference); each segment carries an integer
    wrap count so that displacements through the fiber seam (and, on circle
    bases, the base seam) are unambiguous.  Segment i runs from points[i] to
    points[i+1] with fiber displacement

        dtheta_i = (theta_{i+1} - theta_i) + circumference * theta_wraps[i]

    and similarly for r on circle bases.
    """

    points: List[SurfacePoint]
    theta_wraps: Optional[List[int]] = None
    r_wraps: Optional[List[int]] = None

    def __post_init__(self):
        n_seg = len(self.points) - 1
        if n_seg < 0:
            raise ValueError("curve needs at least one point")
        if self.theta_wraps is None:
            self.theta_wraps = [0] * n_seg
        if self.r_wraps is None:
            self.r_wraps = [0] * n_seg
        if len(self.theta_wraps) != n_seg or len(self.r_wraps) != n_seg:
            raise ValueError("wrap lists must have one entry per segment")

    def segments(self, space: WarpedSpace):
        """Yield (r_start, theta_start, dr, dtheta) per segment, unwrapped."""
        C = space.fiber.circumference
        L = space.base.length
        for i in range(len(self.points) - 1):
            p, q = self.points[i], self.points[i + 1]
            dtheta = (q.theta - p.theta) + C * self.theta_wraps[i]
            dr = q.r - p.r
            if space.base.is_circle:
                dr += L * self.r_wraps[i]
            yield p.r, p.theta, dr, dtheta


def segment_length(space: WarpedSpace, r0: float, dr: float, dtheta: float,
                   points_per_piece: int = 4) -> float:
    """Length of the straight parameter-space segment from (r0, .) with
    displacement (dr, dtheta), by composite midpoint quadrature.

    The parameter range is split at every profile breakpoint the segment
    crosses, so narrow bumps are never stepped over unsampled.  Pure-r and
    pure-theta segments are evaluated in closed form.
    """
    if dtheta == 0.0:
        return abs(dr)
    if dr == 0.0:
        return float(space.warp_at(r0)) * abs(dtheta)
    lo, hi = (r0, r0 + dr) if dr > 0 else (r0 + dr, r0)
    bps = space.breakpoints_unwrapped(lo, hi)
    # convert breakpoints to parameter values t in (0,1)
    ts = np.sort((bps - r0) / dr) if bps.size else np.empty(0)
    edges = np.concatenate(([0.0], ts[(ts > 1e-15) & (ts < 1 - 1e-15)], [1.0]))
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        width = b - a
        if width <= 0:
            continue
        m = np.arange(points_per_piece)
        t_mid = a + (2 * m + 1) * width / (2 * points_per_piece)
        f = space.warp_at(r0 + t_mid * dr)
        total += np.sum(np.sqrt(dr * dr + (f * dtheta) ** 2)) * width / points_per_piece
    return float(total)


def curve_length(space: WarpedSpace, curve: PolylineCurve,
                 points_per_piece: int = 32) -> float:
    """Length of a polyline curve under the warped metric.

    Exact on pure-r, pure-theta, and constant-profile segments; otherwise
    composite midpoint quadrature with forced breakpoints at bump supports.
    """
    total = 0.0
    for r0, _th0, dr, dtheta in curve.segments(space):
        if not space.base.is_circle:
            for rr in (r0, r0 + dr):
                if not space.base.contains(rr):
                    raise DomainError(f"curve leaves the base interval at r={rr}")
        total += segment_length(space, r0, dr, dtheta, points_per_piece)
    return total


def theta_energy(space: WarpedSpace, curve: PolylineCurve) -> float:
    """Fiber-speed energy (integral of |theta'(r)|^2 dr)^(1/2) of a curve
    that is monotone in r.

    Raises HypothesisError for curves that are not strictly monotone in r
    (a vertical-in-theta segment has unbounded theta'(r)).
    """
    total = 0.0
    sign = 0
    for _r0, _th0, dr, dtheta in curve.segments(space):
        if dr == 0.0:
            if dtheta == 0.0:
                continue
            raise HypothesisError("curve has a pure-fiber segment; theta'(r) undefined")
        s = 1 if dr > 0 else -1
        if sign == 0:
            sign = s
        elif s != sign:
            raise HypothesisError("curve is not monotone in r")
        total += dtheta * dtheta / abs(dr)
    return math.sqrt(total)


# ---------------------------------------------------------------------------
# Profile L^p distance
# ---------------------------------------------------------------------------


def lp_profile_distance(a: WarpingProfile, b: WarpingProfile, p: float,
                        base: BaseSpace, subdiv: int = 16) -> float:
    """L^p distance between two profiles over the base domain.

    Composite Gauss-Legendre quadrature on the pieces cut by both profiles'
    breakpoints (so cosine-bump boundaries are never straddled).
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    lo, hi = base.r_min, base.r_max
    cuts = np.unique(np.concatenate((
        [lo, hi], a.breakpoints_in(lo, hi), b.breakpoints_in(lo, hi))))
    nodes, weights = np.polynomial.legendre.leggauss(8)
    total = 0.0
    for x0, x1 in zip(cuts[:-1], cuts[1:]):
        if x1 <= x0:
            continue
        sub = np.linspace(x0, x1, subdiv + 1)
        for s0, s1 in zip(sub[:-1], sub[1:]):
            mid = 0.5 * (s0 + s1)
            half = 0.5 * (s1 - s0)
            xs = mid + half * nodes
            diff = np.abs(np.asarray(a(xs), dtype=float) - np.asarray(b(xs), dtype=float))
            total += half * np.sum(weights * diff ** p)
    return float(total ** (1.0 / p))


# ---------------------------------------------------------------------------
# Closed-form bounds
# ---------------------------------------------------------------------------


class DiameterBound(NamedTuple):
    value: float
    base_term: float
    fiber_term: float
    circle_base: bool


def diameter_upper_bound(space: WarpedSpace, delta_l2: float = 0.0) -> DiameterBound:
    """Diameter bound for any warped space whose profile is within delta_l2
    (in L^2 over the base) of this space's profile.

    base term + (sup profile + delta_l2 / sqrt(base length)) * fiber diameter,
    where the base term is twice the interval length (or the full 2*pi for a
    circle base, flagged in the result).
    """
    if delta_l2 < 0:
        raise ValueError("delta_l2 must be nonnegative")
    L = space.base.length
    base_term = TAU if space.base.is_circle else 2.0 * L
    sup = space.profile_max()
    fiber_term = (sup + delta_l2 / math.sqrt(L)) * space.fiber.diameter
    return DiameterBound(base_term + fiber_term, base_term, fiber_term,
                         space.base.is_circle)


def sandwich_bounds(space: WarpedSpace) -> Tuple[float, float]:
    """(lo, hi) with lo * d_unit <= d_space <= hi * d_unit, where d_unit is
    the distance of the same base x fiber with profile identically 1."""
    a = space.profile_min()
    b = space.profile_max()
    if not (a > 0):
        raise ValueError("profile must be positive")
    return min(a, 1.0), max(1.0, b)


def bilipschitz_lambda(space: WarpedSpace) -> float:
    """Bi-Lipschitz constant against the product metric with profile 1:
    max(1/min(a,1), max(1,b)) for profile range [a, b]."""
    lo, hi = sandwich_bounds(space)
    return max(1.0 / lo, hi)
