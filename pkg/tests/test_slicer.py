import numpy as np
import pytest
from hypothesis import given, strategies as st

from ccpp.errors import NoSlicesError
from ccpp.model_io import StructureModel
from ccpp.slicer import slice_heights, slice_model

from oracles import SLICE_HEIGHTS_Z0_5_DL0433


def test_slice_heights_oracle():
    lam = slice_heights(0.0, 5.0, 0.433)
    np.testing.assert_allclose(lam, SLICE_HEIGHTS_Z0_5_DL0433, atol=1e-12)


def test_flat_plate_has_no_slices():
    pts = np.column_stack([np.random.default_rng(0).random((20, 2)), np.zeros(20)])
    with pytest.raises(NoSlicesError):
        slice_model(StructureModel(pts), 0.433)


def test_extent_shorter_than_two_spacings():
    with pytest.raises(NoSlicesError):
        slice_heights(0.0, 0.8, 0.433)


def test_ring_slice_radius(small_cylinder):
    for s in slice_model(small_cylinder, 0.433):
        r = np.hypot(s.points[:, 0], s.points[:, 1])
        assert np.all(np.abs(r - 1.0) < 0.1)
        assert np.all(s.points[:, 2] == s.lam)


@given(st.floats(0.1, 2.0), st.integers(0, 10_000))
def test_bands_are_disjoint_and_cover_interior(dl, seed):
    rng = np.random.default_rng(seed)
    z = rng.uniform(0, 10, 400)
    pts = np.column_stack([rng.random(400), rng.random(400), z])
    pts[0, 2], pts[1, 2] = 0.0, 10.0
    try:
        slices = slice_model(StructureModel(pts), dl)
    except NoSlicesError:
        assert 10.0 < 2 * dl + 1e-9
        return
    ids = np.concatenate([s.source_ids for s in slices])
    assert len(ids) == len(np.unique(ids))
    for s in slices:
        zs = pts[s.source_ids, 2]
        assert np.all(zs >= s.lam - dl / 2 - 1e-9) and np.all(zs < s.lam + dl / 2 + 1e-9)
    lo, hi = slices[0].lam - dl / 2, slices[-1].lam + dl / 2
    z = pts[:, 2]
    inside = (z >= lo + 1e-9) & (z < hi - 1e-9)
    assert set(np.flatnonzero(inside)) <= set(ids.tolist())


def test_heights_strictly_increasing_and_spaced():
    lam = slice_heights(-3.0, 7.0, 0.37)
    np.testing.assert_allclose(np.diff(lam), 0.37, atol=1e-12)
    assert lam[-1] <= 7.0 - 0.37 + 1e-9
