import numpy as np
import pytest
from hypothesis import given, strategies as st

from ccpp.errors import EmptyInputError, ParseError
from ccpp.model_io import (
    StructureModel, load_model, parse_mesh, parse_point_set, sample_triangle, write_point_set,
)

CUBE_STL = """solid cube
{facets}
endsolid cube
"""


def _facet(a, b, c):
    v = "\n".join(f"      vertex {p[0]} {p[1]} {p[2]}" for p in (a, b, c))
    return f"  facet normal 0 0 0\n    outer loop\n{v}\n    endloop\n  endfacet"


def unit_cube_stl():
    c = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]], float)
    quads = [(0, 1, 2, 3), (4, 5, 6, 7), (0, 1, 5, 4), (1, 2, 6, 5), (2, 3, 7, 6), (3, 0, 4, 7)]
    facets = []
    for a, b, cc, d in quads:
        facets.append(_facet(c[a], c[b], c[cc]))
        facets.append(_facet(c[a], c[cc], c[d]))
    return CUBE_STL.format(facets="\n".join(facets))


def test_three_line_point_set():
    m = parse_point_set("0 0 0\n1,2,3\n# comment\n4 5 6  # trailing\n")
    assert len(m) == 3
    np.testing.assert_array_equal(m.bounds.min, [0, 0, 0])
    np.testing.assert_array_equal(m.bounds.max, [4, 5, 6])


def test_empty_point_set_rejected():
    with pytest.raises(EmptyInputError):
        parse_point_set("# only a comment\n\n")


def test_bad_row_reports_line():
    with pytest.raises(ParseError) as e:
        parse_point_set("0 0 0\n1 2\n", path="pts.xyz")
    assert e.value.line == 2
    assert "pts.xyz:2" in str(e.value)


def test_non_finite_rejected():
    with pytest.raises(ParseError):
        parse_point_set("0 0 inf\n")


def test_triangle_sampling_pitch():
    m = parse_mesh(
        "solid t\n" + _facet((0, 0, 0), (1, 0, 0), (0, 1, 0)) + "\nendsolid t\n", "stl", 0.5)
    assert len(m) >= 6
    np.testing.assert_array_equal(m.points[:, 2], 0.0)
    assert np.all(m.points[:, 0] + m.points[:, 1] <= 1 + 1e-12)


@given(st.floats(0.05, 1.0))
def test_triangle_grid_spacing_bounded_by_pitch(pitch):
    pts = sample_triangle((0, 0, 0), (1, 0, 0), (0, 1, 0), pitch)
    # grid step along each edge direction is 1/n <= pitch
    n = int(round(1 / np.min(pts[pts[:, 0] > 0, 0])))
    assert 1 / n <= pitch + 1e-12


def test_degenerate_triangle_counted():
    text = "solid t\n" + _facet((0, 0, 0), (1, 0, 0), (0, 1, 0)) + "\n" + _facet((0, 0, 0), (1, 1, 1), (2, 2, 2)) + "\nendsolid t\n"
    m = parse_mesh(text, "stl", 0.5)
    assert m.degenerate_faces == 1


def test_unit_cube_points_on_faces():
    m = parse_mesh(unit_cube_stl(), "stl", 0.1)
    p = m.points
    on_face = np.any(np.isclose(p, 0.0, atol=1e-12) | np.isclose(p, 1.0, atol=1e-12), axis=1)
    assert on_face.all()
    assert np.all((p >= -1e-12) & (p <= 1 + 1e-12))
    # no exact duplicates along shared edges
    assert len(np.unique(p, axis=0)) == len(p)


def test_point_set_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(50, 3)) * 1e3
    f = tmp_path / "p.xyz"
    write_point_set(pts, f)
    back = load_model(f, 0.1)
    np.testing.assert_array_equal(back.points, pts)


def test_obj_quads_and_negative_indices(tmp_path):
    f = tmp_path / "q.obj"
    f.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2 3 4\nf -4 -3 -2\n")
    m = load_model(f, 0.25)
    assert m.source == "mesh"
    assert np.all(m.points[:, 2] == 0.0)
    assert m.bounds.max[0] == 1.0 and m.bounds.max[1] == 1.0


def test_obj_polygon_rejected():
    with pytest.raises(ParseError, match="non-triangular"):
        parse_mesh("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 2 0\nf 1 2 3 4 5\n", "obj", 0.1)


def test_obj_index_out_of_range():
    with pytest.raises(ParseError, match="out of range"):
        parse_mesh("v 0 0 0\nv 1 0 0\nf 1 2 3\n", "obj", 0.1)


def test_stl_malformed():
    with pytest.raises(ParseError):
        parse_mesh("solid x\n  facet normal 0 0 1\n    outer loop\n      vertex 0 0\n", "stl", 0.1)


def test_model_points_read_only():
    m = StructureModel(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        m.points[0, 0] = 1.0
