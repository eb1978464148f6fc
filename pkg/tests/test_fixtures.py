import numpy as np
import pytest

from ccpp import fixtures
from ccpp.errors import ValidationError
from ccpp.model_io import load_model
from ccpp.slicer import slice_model
from ccpp.topology import component_labels


@pytest.mark.parametrize("name", sorted(fixtures.PRESETS))
def test_points_on_declared_surfaces(name):
    spec = fixtures.preset(name)
    m = fixtures.generate(spec)
    assert fixtures.on_surface_distance(spec, m.points).max() < 1e-9


def test_fountain_cylinder_radius():
    m = fixtures.generate(fixtures.preset("cylinder"))
    r = np.hypot(m.points[:, 0], m.points[:, 1])
    assert np.all(np.abs(r - 2.8) < 1e-9)
    assert m.bounds.max_z == pytest.approx(10.1)


def test_boxes_bounds():
    m = fixtures.generate(fixtures.preset("boxes"))
    np.testing.assert_allclose(m.bounds.min, [-0.57, -0.2, 0.0], atol=1e-12)
    np.testing.assert_allclose(m.bounds.max, [0.57, 0.2, 0.9], atol=1e-12)


def test_turbine_three_branches_above_hub():
    spec = fixtures.preset("turbine")
    m = fixtures.generate(spec)
    hub = fixtures.hub_point(spec.resolved())[2]
    slices = slice_model(m, 0.52)
    above = [s for s in slices if s.lam > hub + 1.5 and len(s) > 0]
    assert above
    for s in above:
        assert component_labels(s.xy, 0.2).max() + 1 == 3


def test_deterministic():
    a = fixtures.generate(fixtures.preset("turbine"))
    b = fixtures.generate(fixtures.preset("turbine"))
    np.testing.assert_array_equal(a.points, b.points)


@pytest.mark.parametrize("kind, dims", [
    ("cylinder", {"radius": 0.0}),
    ("pillars", {"height": -1.0}),
    ("boxes", {"box_x": float("nan")}),
    ("turbine", {"blade_length": 0.0}),
    ("cylinder", {"colour": 1.0}),
])
def test_invalid_dimensions(kind, dims):
    with pytest.raises(ValidationError):
        fixtures.generate(fixtures.FixtureSpec(kind, dims))


def test_unknown_preset():
    with pytest.raises(ValidationError):
        fixtures.preset("castle")


def test_export_round_trip(tmp_path):
    spec = fixtures.preset("twin-pillars", sample_pitch=0.2)
    p = fixtures.export(spec, tmp_path / "p.xyz")
    np.testing.assert_array_equal(load_model(p, 0.1).points, fixtures.generate(spec).points)
