import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial import cKDTree

from ccpp.offset_path import build_offset_loop, flag_clearance, offset_points, thin, wrap_angle
from ccpp.topology import Loop, radial_angles

from conftest import ring_points


def _loop(xy, center=None, z=0.0):
    xy = np.asarray(xy, dtype=float)
    c = xy.mean(axis=0) if center is None else np.asarray(center, dtype=float)
    pts = np.column_stack([xy, np.full(len(xy), z)])
    return Loop(0, pts, c, radial_angles(xy, c))


def square_outline(side=2.0, pitch=0.05):
    n = int(round(side / pitch))
    t = np.arange(n) * pitch - side / 2
    h = side / 2
    return np.vstack([
        np.column_stack([t, np.full(n, -h)]),
        np.column_stack([np.full(n, h), t]),
        np.column_stack([-t, np.full(n, h)]),
        np.column_stack([np.full(n, -h), -t]),
    ])


def test_single_point_offset():
    out, theta = offset_points(np.array([[1.0, 0.0]]), (0.0, 0.0), 0.5)
    np.testing.assert_allclose(out[0], [1.5, 0.0], atol=1e-15)
    assert wrap_angle(theta[0] + math.pi) == pytest.approx(math.pi)


def test_unit_ring():
    ol = build_offset_loop(_loop(ring_points(72)[:, :2], (0.0, 0.0)), 0.5)
    p = ol.positions
    np.testing.assert_allclose(np.hypot(p[:, 0], p[:, 1]), 1.5, atol=1e-9)
    for w in ol.waypoints:
        to_center = math.atan2(-w.position[1], -w.position[0])
        assert abs(wrap_angle(w.yaw - to_center)) < 1e-9


def test_square_offset_distance_and_clearance():
    pitch = 0.1  # default sample pitch; radial offsets cut in to ~0.403 near corners
    sq = square_outline(2.0, pitch)
    ol = build_offset_loop(_loop(sq, (0.0, 0.0)), 0.5)
    for w in ol.waypoints:
        assert math.dist(w.position[:2], w.source[:2]) == pytest.approx(0.5, abs=1e-9)
    # brute force nearest-surface distance over a fine outline
    fine = square_outline(2.0, 0.001)
    d = np.min(np.linalg.norm(ol.positions[:, None, :2] - fine[None], axis=2), axis=1)
    assert d.min() >= 0.5 - pitch
    d_sampled = cKDTree(sq).query(ol.positions[:, :2])[0]
    assert d_sampled.min() >= 0.5 - pitch


def test_sorted_by_radial_angle_and_yaw_inward():
    rng = np.random.default_rng(2)
    xy = ring_points(90, 2.0)[:, :2] + rng.normal(scale=0.01, size=(90, 2))
    ol = build_offset_loop(_loop(xy), 0.4)
    th = np.array([w.radial_angle for w in ol.waypoints])
    assert np.all(np.diff(th) > 0)
    for w in ol.waypoints:
        assert w.yaw == pytest.approx(wrap_angle(w.radial_angle + math.pi), abs=1e-12)
        assert -math.pi < w.yaw <= math.pi


def test_center_point_skipped():
    xy = np.vstack([ring_points(20)[:, :2], [[0.0, 0.0]]])
    ol = build_offset_loop(_loop(xy, (0.0, 0.0)), 0.5)
    assert ol.skipped == 1
    assert len(ol) == 20


def test_preconditions():
    with pytest.raises(ValueError):
        build_offset_loop(_loop(ring_points(10)[:, :2]), 0.0)
    with pytest.raises(ValueError):
        build_offset_loop(_loop(ring_points(2)[:, :2]), 0.5)


def test_thinning_pitch():
    ol = build_offset_loop(_loop(ring_points(400, 2.0)[:, :2]), 0.5, waypoint_pitch=0.5)
    d = np.linalg.norm(np.diff(ol.positions[:, :2], axis=0), axis=1)
    assert d.min() >= 0.5 - 1e-12
    assert d.max() < 0.5 + 2 * (2 * math.pi * 2.5 / 400) + 1e-9


@given(st.integers(0, 10_000), st.floats(0.1, 2.0))
def test_offset_distance_is_omega(seed, omega):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 120))
    a = np.sort(rng.uniform(-math.pi, math.pi, n))
    r = rng.uniform(0.5, 3.0, n)
    xy = np.column_stack([r * np.cos(a), r * np.sin(a)]) + rng.uniform(-5, 5, 2)
    ol = build_offset_loop(_loop(xy), omega, clearance_slack=1e9)
    for w in ol.waypoints:
        assert abs(math.dist(w.position[:2], w.source[:2]) - omega) < 1e-9


def test_interior_candidates_discarded():
    # a horizontal face inside the outline: its points are shadowed by the rim
    rim = square_outline(2.0, 0.05)
    g = np.linspace(-0.6, 0.6, 7)
    face = np.array([[x, y] for x in g for y in g if (x, y) != (0.0, 0.0)])
    ol = build_offset_loop(_loop(np.vstack([rim, face]), (0.0, 0.0)), 0.5)
    assert ol.discarded >= len(face)
    assert all(np.max(np.abs(w.source[:2])) == pytest.approx(1.0, abs=1e-9) for w in ol.waypoints)


def test_flag_clearance_on_concave_section():
    # L-shaped outline: offsets from the inner corner region come too close
    arm = np.linspace(0, 3, 61)
    xy = np.vstack([
        np.column_stack([arm, np.zeros_like(arm)]),
        np.column_stack([np.zeros_like(arm[1:]), arm[1:]]),
        np.column_stack([arm[1:], np.full(60, 0.4)]),
        np.column_stack([np.full(60, 0.4), arm[1:]]),
    ])
    ol = flag_clearance(build_offset_loop(_loop(xy), 0.5), xy, 0.5)
    d = cKDTree(xy).query(ol.positions[:, :2])[0]
    for w, dist in zip(ol.waypoints, d):
        assert w.flagged == (dist < 0.5 * 0.75 - 1e-12)


def test_thin_keeps_first_and_respects_pitch():
    pts = np.column_stack([np.linspace(0, 1, 11), np.zeros(11)])
    keep = thin(pts, 0.25)
    assert keep[0]
    np.testing.assert_allclose(np.diff(pts[keep, 0]), 0.3, atol=1e-12)
