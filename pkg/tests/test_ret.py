"""Tests for the mixed euclidean/taxi metric.

The closed form is pinned by three hand-worked displacements and verified
against the brute-force split minimizer on large random batches.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from warpconv import FiberSpace, InvalidDescriptor, SurfacePoint, circle_base
from warpconv.ret import (
    RETSpace,
    ball_boundary,
    mix_threshold,
    ret_distance,
    ret_distance_brute,
    ret_point_distance,
)


# hand-worked values: (stretch, ds, dsigma, expected)
WORKED = [
    # threshold exactly at dsigma: euclidean branch, 4 on the nose
    (2.0, 2.0 * math.sqrt(3.0), 1.0, 4.0),
    # deep taxi branch
    (5.0, math.pi, math.pi, math.pi * (math.sqrt(24.0) / 5.0 + 1.0)),
    # long taxi tail
    (2.0, 1.0, 10.0, math.sqrt(3.0) / 2.0 + 10.0),
    # stretch 1 collapses to plain euclidean
    (1.0, 3.0, 4.0, 5.0),
]


@pytest.mark.parametrize("stretch,ds,dsig,expect", WORKED)
def test_worked_examples(stretch, ds, dsig, expect):
    assert ret_distance(ds, dsig, stretch) == pytest.approx(expect, rel=1e-14)


def test_threshold_value():
    assert mix_threshold(2.0 * math.sqrt(3.0), 2.0) == pytest.approx(1.0, rel=1e-14)
    assert mix_threshold(1.0, 1.0) == math.inf


def test_branch_agreement_at_threshold():
    rng = np.random.default_rng(0)
    for _ in range(500):
        R = rng.uniform(1.01, 20.0)
        ds = rng.uniform(1e-3, 50.0)
        t0 = mix_threshold(ds, R)
        root = math.sqrt(R * R - 1.0)
        euclid = math.hypot(ds, R * t0)
        taxi = ds * root / R + t0
        assert abs(euclid - taxi) <= 1e-12 * max(1.0, euclid)


def test_brute_force_agrees_with_closed_form():
    rng = np.random.default_rng(1)
    n = 10_000
    ds = rng.uniform(0.0, 20.0, n)
    dsig = rng.uniform(0.0, 20.0, n)
    for R in (1.0, 1.5, 2.0, 5.0):
        closed = ret_distance(ds, dsig, R)
        brute = ret_distance_brute(ds, dsig, R)
        assert np.max(np.abs(closed - brute)) < 1e-9


def test_rejects_bad_arguments():
    with pytest.raises(InvalidDescriptor):
        ret_distance(1.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        ret_distance(-1.0, 1.0, 2.0)


@given(
    ds=st.floats(0.0, 100.0),
    dsig=st.floats(0.0, 100.0),
    stretch=st.floats(1.0, 50.0),
)
@settings(max_examples=200, deadline=None)
def test_sandwiched_between_euclidean_and_stretched(ds, dsig, stretch):
    d = float(ret_distance(ds, dsig, stretch))
    assert d >= math.hypot(ds, dsig) - 1e-9 * (1 + d)
    assert d <= math.hypot(ds, stretch * dsig) + 1e-9 * (1 + d)
    # the taxi expression is the unconstrained minimum of the split
    # function, hence a lower bound on the constrained distance
    taxi = ds * math.sqrt(max(stretch**2 - 1.0, 0.0)) / stretch + dsig
    assert d >= taxi - 1e-9 * (1 + d)


@given(
    s=st.tuples(st.floats(-50, 50), st.floats(-50, 50)),
    t=st.tuples(st.floats(-50, 50), st.floats(-50, 50)),
    u=st.tuples(st.floats(-50, 50), st.floats(-50, 50)),
    stretch=st.floats(1.0, 20.0),
)
@settings(max_examples=300, deadline=None)
def test_triangle_inequality_in_the_plane(s, t, u, stretch):
    def d(a, b):
        return float(ret_distance(abs(a[0] - b[0]), abs(a[1] - b[1]), stretch))

    assert d(s, u) <= d(s, t) + d(t, u) + 1e-10


def test_triangle_inequality_on_product_space():
    space = RETSpace(circle_base(), FiberSpace(), 5.0)
    rng = np.random.default_rng(2)
    pts = [
        SurfacePoint(rng.uniform(-math.pi, math.pi), rng.uniform(0, 2 * math.pi))
        for _ in range(60)
    ]
    for a in pts[:20]:
        for b in pts[20:40]:
            for c in pts[40:]:
                lhs = space.distance(a, c)
                rhs = space.distance(a, b) + space.distance(b, c)
                assert lhs <= rhs + 1e-10


def test_point_distance_uses_minor_arcs():
    space = RETSpace(circle_base(), FiberSpace(), 2.0)
    p = SurfacePoint(-math.pi + 0.05, 0.1)
    q = SurfacePoint(math.pi - 0.05, 2.0 * math.pi - 0.1)
    assert space.distance(p, q) == pytest.approx(
        float(ret_distance(0.1, 0.2, 2.0)), rel=1e-12
    )
    # without spaces, displacements are raw absolute differences
    assert ret_point_distance(p, q, 2.0) == pytest.approx(
        float(ret_distance(2 * math.pi - 0.1, 2 * math.pi - 0.2, 2.0)), rel=1e-12
    )


def test_ball_boundary_hits_radius_and_ellipse():
    R, radius = 2.0, 1.0
    pts = ball_boundary(R, radius, n_angles=128)
    for ds, dsig in pts:
        assert float(ret_distance(ds, dsig, R)) == pytest.approx(radius, abs=1e-9)
    # euclidean-branch points lie on the ellipse ds^2 + 4 dsigma^2 = r^2
    on_euclid = [
        (ds, dsig) for ds, dsig in pts if dsig <= float(mix_threshold(ds, R)) - 1e-9
    ]
    assert len(on_euclid) > 10
    for ds, dsig in on_euclid:
        assert ds * ds + 4.0 * dsig * dsig == pytest.approx(radius * radius, abs=1e-8)


def test_ball_boundary_scales_homogeneously():
    pts1 = ball_boundary(3.0, 1.0, n_angles=32)
    pts2 = ball_boundary(3.0, 2.5, n_angles=32)
    assert np.allclose(2.5 * pts1, pts2, atol=1e-8)


def test_diameter_upper_bound():
    space = RETSpace(circle_base(), FiberSpace(), 5.0)
    d = space.diameter_upper_bound()
    assert d == pytest.approx(math.pi * (math.sqrt(24.0) / 5.0 + 1.0), rel=1e-12)
