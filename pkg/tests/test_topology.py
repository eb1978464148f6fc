import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist, squareform

from ccpp.slicer import Slice, slice_model
from ccpp.topology import (
    cluster_loops, component_labels, count_loops, detect_loops, kmeans, merge_near_points, spectral_count,
)

from conftest import ring_points


def _slice(pts, index=0):
    pts = np.asarray(pts, dtype=float)
    if pts.shape[1] == 2:
        pts = np.column_stack([pts, np.zeros(len(pts))])
    return Slice(index, float(pts[0, 2]), pts, np.arange(len(pts)))


def two_rings():
    return _slice(np.vstack([ring_points(50), ring_points(50, center=(10.0, 0.0))]))


def test_two_rings_k2():
    assert count_loops(two_rings(), 0.5) == 2


def test_single_ring_k1():
    assert count_loops(_slice(ring_points(60)), 0.5) == 1


def test_two_rings_clusters_match_rings():
    ls = cluster_loops(two_rings(), 2, seed=0, d_min=0.5)
    assert ls.k == 2
    for lp in ls.loops:
        near = np.round(lp.center[0] / 10.0)
        assert np.all(np.abs(lp.points[:, 0] - 10.0 * near) <= 1.0 + 1e-12)
        assert len(lp) == 50


def test_k1_center_is_centroid():
    rng = np.random.default_rng(1)
    s = _slice(rng.normal(size=(40, 2)))
    lp = cluster_loops(s, 1, seed=0).loops[0]
    np.testing.assert_allclose(lp.center, s.xy.mean(axis=0), atol=1e-12)
    assert np.all(lp.radial_angles > -np.pi) and np.all(lp.radial_angles <= np.pi)


def test_k_exceeds_points():
    with pytest.raises(ValueError):
        kmeans(np.zeros((2, 2)), 3, 0)


@given(st.integers(0, 2**31 - 1), st.sampled_from([round(0.1 * i, 1) for i in range(1, 21)]))
def test_spectral_equals_union_find(seed, d_min):
    rng = np.random.default_rng(seed)
    xy = rng.uniform(0, 10, size=(200, 2))
    uf = int(component_labels(xy, d_min).max()) + 1
    assert spectral_count(xy, d_min) == uf
    # independent oracle
    adj = squareform(pdist(xy)) < d_min
    assert connected_components(adj, directed=False)[0] == uf


def test_merge_pair_to_midpoint():
    s = _slice([[0.0, 0.0], [0.01, 0.0]])
    m = merge_near_points(s, 0.5)
    assert len(m) == 1
    np.testing.assert_allclose(m.xy[0], [0.005, 0.0], atol=1e-15)


def test_merge_leaves_half_d_min_spacing():
    xy = np.column_stack([np.arange(10) * 0.25, np.zeros(10)])
    m = merge_near_points(_slice(xy), 0.5)
    np.testing.assert_array_equal(m.xy, xy)


def test_merge_dense_ring_with_duplicates():
    pts = ring_points(1000, radius=5.0)
    pts = np.vstack([pts, pts[::3]])
    m = merge_near_points(_slice(pts), 0.5)
    d = pdist(m.xy)
    assert d.min() >= 0.5 / 4 - 1e-12
    r = np.hypot(m.xy[:, 0], m.xy[:, 1])
    assert np.all(np.abs(r - 5.0) < 0.5)


def test_three_pillars_one_loop_each(three_pillars_model):
    s = slice_model(three_pillars_model, 0.433)[3]
    ls = detect_loops(s, 0.2, seed=0)
    assert ls.k == 3
    comp = component_labels(s.xy, 0.2)
    assert comp.max() + 1 == 3
    for lp in ls.loops:
        r = np.hypot(lp.points[:, 0] - lp.center[0], lp.points[:, 1] - lp.center[1])
        assert np.all(np.abs(r - 0.5) < 0.1)


@given(st.integers(0, 10_000), st.floats(-50, 50), st.floats(-50, 50))
def test_partition_purity_and_translation(seed, dx, dy):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-20, 20, size=(3, 2))
    centers[1] = centers[0] + [6.0, 0.0]
    centers[2] = centers[0] + [0.0, 6.0]
    xy = np.vstack([ring_points(40, 1.0 + 0.5 * i, c)[:, :2] for i, c in enumerate(centers)])
    s = _slice(xy)
    ls = cluster_loops(s, 3, seed, d_min=0.5)
    comp = component_labels(xy, 0.5)
    # partition: every point in exactly one loop, each loop within one component
    total = sum(len(lp) for lp in ls.loops)
    assert total == len(xy)
    lookup = {tuple(p): c for p, c in zip(xy.tolist(), comp.tolist())}
    for lp in ls.loops:
        assert len({lookup[tuple(p)] for p in lp.points[:, :2].tolist()}) == 1
        np.testing.assert_allclose(lp.center, lp.points[:, :2].mean(axis=0), atol=1e-9)
    moved = cluster_loops(_slice(xy + [dx, dy]), 3, seed, d_min=0.5)
    for a, b in zip(ls.loops, moved.loops):
        np.testing.assert_allclose(b.center, a.center + [dx, dy], atol=1e-9)
        np.testing.assert_allclose(np.exp(1j * b.radial_angles), np.exp(1j * a.radial_angles), atol=1e-9)


def test_detect_loops_deterministic(twin_pillars_model):
    s = slice_model(twin_pillars_model, 0.433)[2]
    a, b = detect_loops(s, 0.2, 5), detect_loops(s, 0.2, 5)
    assert a.k == b.k == 2
    for la, lb in zip(a.loops, b.loops):
        np.testing.assert_array_equal(la.points, lb.points)
