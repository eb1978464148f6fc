"""Structure model loading: ASCII point sets, ASCII STL / OBJ meshes.

Meshes are densified into point sets by sampling every triangle on a
barycentric grid, so the rest of the pipeline only ever sees points.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyInputError, IOFailure, ParseError

log = logging.getLogger(__name__)

POINT_SET = "point_set"
MESH = "mesh"

_SPLIT = re.compile(r"[,\s]+")


@dataclass(frozen=True)
class Bounds:
    min: np.ndarray
    max: np.ndarray

    @property
    def min_z(self) -> float:
        return float(self.min[2])

    @property
    def max_z(self) -> float:
        return float(self.max[2])

    @classmethod
    def of(cls, points: np.ndarray) -> "Bounds":
        return cls(points.min(axis=0), points.max(axis=0))


@dataclass(frozen=True)
class StructureModel:
    points: np.ndarray  # (N, 3) float64
    source: str = POINT_SET
    degenerate_faces: int = 0
    bounds: Bounds = field(init=False)

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError("points must have shape (N, 3)")
        if len(pts) == 0:
            raise EmptyInputError("structure model has no points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("structure model has non-finite coordinates")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "bounds", Bounds.of(pts))

    def __len__(self):
        return len(self.points)

    @property
    def has_vertical_extent(self) -> bool:
        return self.bounds.min_z < self.bounds.max_z


def _read_text(path: Path) -> str:
    try:
        return path.read_text()
    except OSError as exc:
        raise IOFailure(f"{path}: {exc.strerror}") from exc


def parse_point_set(text: str, path=None) -> StructureModel:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = [f for f in _SPLIT.split(line) if f]
        if len(fields) != 3:
            raise ParseError(f"expected 3 coordinates, got {len(fields)}", path, lineno)
        try:
            xyz = [float(f) for f in fields]
        except ValueError:
            raise ParseError(f"non-numeric coordinate in {line!r}", path, lineno) from None
        if not all(np.isfinite(xyz)):
            raise ParseError("non-finite coordinate", path, lineno)
        rows.append(xyz)
    if not rows:
        raise EmptyInputError("no points in input", path)
    return StructureModel(np.array(rows, dtype=np.float64), POINT_SET)


def load_point_set(path) -> StructureModel:
    """Load ``x y z`` rows (whitespace or comma separated, ``#`` comments)."""
    path = Path(path)
    return parse_point_set(_read_text(path), path)


def format_points(points, header: str | None = None) -> str:
    out = []
    if header:
        out.append(f"# {header}")
    # repr round-trips float64 exactly
    out.extend(f"{x!r} {y!r} {z!r}" for x, y, z in np.asarray(points, dtype=float).tolist())
    return "\n".join(out) + "\n"


def write_point_set(model_or_points, path, header: str | None = None) -> None:
    pts = model_or_points.points if isinstance(model_or_points, StructureModel) else model_or_points
    try:
        Path(path).write_text(format_points(pts, header))
    except OSError as exc:
        raise IOFailure(f"{path}: {exc.strerror}") from exc


# --- meshes -----------------------------------------------------------------


def sample_triangle(a, b, c, pitch: float) -> np.ndarray:
    """Barycentric grid on triangle ``abc`` with edge spacing <= ``pitch``.

    Includes the three vertices and points along every edge. Coordinates
    are built as ``a + u*(b-a) + v*(c-a)`` so a coordinate shared by all
    three vertices is reproduced exactly.
    """
    a, b, c = (np.asarray(p, dtype=np.float64) for p in (a, b, c))
    longest = max(np.linalg.norm(b - a), np.linalg.norm(c - b), np.linalg.norm(a - c))
    n = max(1, int(np.ceil(longest / pitch - 1e-12)))
    i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    keep = (i + j) <= n
    u = (i[keep] / n)[:, None]
    v = (j[keep] / n)[:, None]
    return a + u * (b - a) + v * (c - a)


def _triangle_area(a, b, c) -> float:
    return 0.5 * float(np.linalg.norm(np.cross(b - a, c - a)))


def densify(triangles: np.ndarray, pitch: float, area_eps: float = 1e-15):
    """Sample a (T, 3, 3) triangle array. Returns (points, degenerate_count)."""
    if pitch <= 0:
        raise ValueError("sample_pitch must be > 0")
    chunks = []
    degenerate = 0
    for a, b, c in triangles:
        if _triangle_area(a, b, c) <= area_eps:
            degenerate += 1
            continue
        chunks.append(sample_triangle(a, b, c, pitch))
    if degenerate:
        log.warning("skipped %d degenerate triangle(s)", degenerate)
    if not chunks:
        raise EmptyInputError("mesh has no non-degenerate triangles")
    pts = np.concatenate(chunks)
    # drop exact duplicates along shared edges, keeping first occurrence order
    _, first = np.unique(pts, axis=0, return_index=True)
    return pts[np.sort(first)], degenerate


def _parse_stl(text: str, path) -> np.ndarray:
    tris = []
    verts: list[list[float]] = []
    in_facet = False
    in_loop = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tok = raw.split()
        if not tok:
            continue
        kw = tok[0].lower()
        if kw in ("solid", "endsolid"):
            continue
        if kw == "facet":
            if in_facet:
                raise ParseError("nested facet", path, lineno)
            if len(tok) != 5 or tok[1].lower() != "normal":
                raise ParseError("malformed facet record", path, lineno)
            in_facet, verts = True, []
        elif kw == "outer":
            if not in_facet or in_loop or len(tok) != 2 or tok[1].lower() != "loop":
                raise ParseError("malformed 'outer loop' record", path, lineno)
            in_loop = True
        elif kw == "vertex":
            if not in_loop or len(tok) != 4:
                raise ParseError("malformed vertex record", path, lineno)
            try:
                verts.append([float(t) for t in tok[1:]])
            except ValueError:
                raise ParseError("non-numeric vertex coordinate", path, lineno) from None
        elif kw == "endloop":
            if not in_loop:
                raise ParseError("endloop without outer loop", path, lineno)
            in_loop = False
        elif kw == "endfacet":
            if not in_facet or in_loop:
                raise ParseError("endfacet outside facet", path, lineno)
            if len(verts) != 3:
                raise ParseError(f"facet has {len(verts)} vertices, expected 3", path, lineno)
            tris.append(verts)
            in_facet = False
        else:
            raise ParseError(f"unexpected STL keyword {tok[0]!r}", path, lineno)
    if in_facet:
        raise ParseError("unterminated facet", path)
    return np.array(tris, dtype=np.float64).reshape(-1, 3, 3)


def _parse_obj(text: str, path) -> np.ndarray:
    vertices: list[list[float]] = []
    faces: list[tuple[int, list[int]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] == "v":
            if len(tok) not in (4, 5):
                raise ParseError("malformed vertex record", path, lineno)
            try:
                vertices.append([float(t) for t in tok[1:4]])
            except ValueError:
                raise ParseError("non-numeric vertex coordinate", path, lineno) from None
        elif tok[0] == "f":
            idx = []
            for t in tok[1:]:
                head = t.split("/", 1)[0]
                try:
                    idx.append(int(head))
                except ValueError:
                    raise ParseError(f"malformed face index {t!r}", path, lineno) from None
            if len(idx) < 3:
                raise ParseError("face needs at least 3 vertices", path, lineno)
            if len(idx) > 4:
                raise ParseError(f"non-triangular face with {len(idx)} vertices", path, lineno)
            faces.append((lineno, idx))
        # other record types (vn, vt, o, g, s, usemtl, mtllib) carry no geometry
    nv = len(vertices)
    tris = []
    for lineno, idx in faces:
        resolved = []
        for i in idx:
            k = i - 1 if i > 0 else nv + i
            if i == 0 or not 0 <= k < nv:
                raise ParseError(f"face index {i} out of range", path, lineno)
            resolved.append(vertices[k])
        if len(resolved) == 3:
            tris.append(resolved)
        else:
            a, b, c, d = resolved
            tris.append([a, b, c])
            tris.append([a, c, d])
    return np.array(tris, dtype=np.float64).reshape(-1, 3, 3)


def parse_mesh(text: str, fmt: str, sample_pitch: float, path=None) -> StructureModel:
    if fmt == "stl":
        tris = _parse_stl(text, path)
    elif fmt == "obj":
        tris = _parse_obj(text, path)
    else:
        raise ParseError(f"unsupported mesh format {fmt!r}", path)
    if len(tris) == 0:
        raise EmptyInputError("mesh has no faces", path)
    if not np.all(np.isfinite(tris)):
        raise ParseError("non-finite vertex coordinate", path)
    pts, degenerate = densify(tris, sample_pitch)
    return StructureModel(pts, MESH, degenerate_faces=degenerate)


def load_mesh(path, sample_pitch: float) -> StructureModel:
    path = Path(path)
    fmt = path.suffix.lower().lstrip(".")
    return parse_mesh(_read_text(path), fmt, sample_pitch, path)


def load_model(path, sample_pitch: float) -> StructureModel:
    """Dispatch on extension: ``.stl``/``.obj`` are meshes, anything else a point set."""
    if Path(path).suffix.lower() in (".stl", ".obj"):
        return load_mesh(path, sample_pitch)
    return load_point_set(path)
