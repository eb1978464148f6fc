"""Deterministic analytic test structures sampled on their surfaces.

Every generated point lies on one of the declared primitive surfaces.
Where primitives overlap, points buried inside the union are dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .model_io import StructureModel, write_point_set

KINDS = ("cylinder", "pillars", "boxes", "turbine")
_PROBE = 1e-6


# --- primitives -------------------------------------------------------------------


@dataclass(frozen=True)
class Cylinder:
    """Circular cylinder of radius ``r`` around the segment ``base -> base + length*axis``."""

    base: tuple
    axis: tuple
    r: float
    length: float
    caps: tuple = (False, False)  # (start, end)

    def _frame(self):
        a = np.asarray(self.axis, dtype=float)
        a = a / np.linalg.norm(a)
        helper = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        u = np.cross(a, helper)
        u /= np.linalg.norm(u)
        v = np.cross(a, u)
        return a, u, v

    def sample(self, pitch: float) -> np.ndarray:
        base = np.asarray(self.base, dtype=float)
        a, u, v = self._frame()
        n_ang = max(8, math.ceil(2 * math.pi * self.r / pitch))
        n_ax = max(1, math.ceil(self.length / pitch))
        phi = 2 * math.pi * np.arange(n_ang) / n_ang
        s = self.length * np.arange(n_ax + 1) / n_ax
        P, S = np.meshgrid(phi, s, indexing="ij")
        P, S = P.ravel(), S.ravel()
        ring = self.r * (np.cos(P)[:, None] * u + np.sin(P)[:, None] * v)
        pts = [base + S[:, None] * a + ring]
        for end, on in zip((0.0, self.length), self.caps):
            if on:
                pts.append(base + end * a + _disk(self.r, pitch, u, v))
        return np.vstack(pts)

    def contains(self, p: np.ndarray, eps: float = 0.0) -> np.ndarray:
        base = np.asarray(self.base, dtype=float)
        a, _, _ = self._frame()
        q = p - base
        s = q @ a
        radial = np.linalg.norm(q - s[:, None] * a, axis=1)
        return (s > eps) & (s < self.length - eps) & (radial < self.r - eps)


def _disk(r: float, pitch: float, u, v) -> np.ndarray:
    out = [np.zeros(3)]
    n_r = max(1, math.ceil(r / pitch))
    for i in range(1, n_r + 1):
        rho = r * i / n_r
        n = max(6, math.ceil(2 * math.pi * rho / pitch))
        phi = 2 * math.pi * np.arange(n) / n
        out.append(rho * (np.cos(phi)[:, None] * u + np.sin(phi)[:, None] * v))
    return np.vstack(out)


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def sample(self, pitch: float) -> np.ndarray:
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        grids = [lo[k] + (hi[k] - lo[k]) * np.arange(n + 1) / n
                 for k, n in enumerate(max(1, math.ceil((hi[k] - lo[k]) / pitch)) for k in range(3))]
        faces = []
        for k in range(3):
            i, j = [d for d in range(3) if d != k]
            A, B = np.meshgrid(grids[i], grids[j], indexing="ij")
            for val in (lo[k], hi[k]):
                f = np.empty((A.size, 3))
                f[:, k] = val
                f[:, i] = A.ravel()
                f[:, j] = B.ravel()
                faces.append(f)
        return np.vstack(faces)

    def contains(self, p: np.ndarray, eps: float = 0.0) -> np.ndarray:
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        return np.all((p > lo + eps) & (p < hi - eps), axis=1)


def _inside_union(points: np.ndarray, solids, eps: float = _PROBE) -> np.ndarray:
    """True where every axis probe ``p +- eps*e_k`` lies in the closed union.

    Closed containment catches faces glued onto another solid's end plane
    (e.g. the nacelle floor over the tower top).
    """
    buried = np.ones(len(points), dtype=bool)
    for k in range(3):
        for sign in (-1.0, 1.0):
            q = points.copy()
            q[:, k] += sign * eps
            inside = np.zeros(len(points), dtype=bool)
            for s in solids:
                inside |= s.contains(q, eps=-1e-12)
            buried &= inside
    return buried


def _union_surface(solids, pitch: float) -> np.ndarray:
    chunks = []
    for i, s in enumerate(solids):
        pts = s.sample(pitch)
        others = [o for j, o in enumerate(solids) if j != i]
        if others:
            strictly = np.zeros(len(pts), dtype=bool)
            for o in others:
                strictly |= o.contains(pts, eps=_PROBE)
            pts = pts[~strictly]
        chunks.append(pts)
    pts = np.vstack(chunks)
    pts = pts[~_inside_union(pts, solids)]
    _, first = np.unique(pts, axis=0, return_index=True)
    return pts[np.sort(first)]


# --- fixture specs ----------------------------------------------------------------


DEFAULTS = {
    "cylinder": {"radius": 2.8, "height": 10.1, "caps": 0},
    "pillars": {"radius": 0.5, "height": 6.0, "spacing": 4.0, "count": 2},
    "boxes": {"box_x": 0.57, "box_y": 0.40, "box_z": 0.30, "columns": 2, "layers": 3},
    "turbine": {
        "tower_radius": 0.6, "tower_height": 8.0,
        "nacelle_x": 2.0, "nacelle_y": 1.2, "nacelle_z": 1.0,
        "blade_radius": 0.2, "blade_length": 7.0, "blade_elevation_deg": 35.0,
    },
}


@dataclass(frozen=True)
class FixtureSpec:
    kind: str
    dims: dict = field(default_factory=dict)
    sample_pitch: float = 0.1
    seed: int = 0  # generators are analytic; kept so specs round-trip through manifests

    def resolved(self) -> dict:
        if self.kind not in KINDS:
            raise ValidationError(f"unknown fixture kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        d = dict(DEFAULTS[self.kind])
        unknown = set(self.dims) - set(d)
        if unknown:
            raise ValidationError(f"{self.kind}: unknown dimension(s) {', '.join(sorted(unknown))}")
        d.update(self.dims)
        return d


def _positive(kind: str, dims: dict, names) -> None:
    for k in names:
        v = dims[k]
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            raise ValidationError(f"{kind}: {k} must be a positive number, got {v!r}")


def cylinder_solids(d):
    cap = bool(d["caps"])
    return [Cylinder((0.0, 0.0, 0.0), (0.0, 0.0, 1.0), d["radius"], d["height"], (cap, cap))]


def pillar_solids(d):
    n = int(d["count"])
    if n < 1:
        raise ValidationError("pillars: count must be >= 1")
    # evenly spread on a line (2) or on an equilateral triangle (3+ on a circle)
    if n == 2:
        centers = [(-d["spacing"] / 2, 0.0), (d["spacing"] / 2, 0.0)]
    elif n == 1:
        centers = [(0.0, 0.0)]
    else:
        rc = d["spacing"] / (2 * math.sin(math.pi / n))
        centers = [(rc * math.cos(2 * math.pi * i / n), rc * math.sin(2 * math.pi * i / n)) for i in range(n)]
    if n > 1 and d["spacing"] <= 2 * d["radius"]:
        raise ValidationError("pillars: spacing must exceed the pillar diameter")
    return [Cylinder((cx, cy, 0.0), (0.0, 0.0, 1.0), d["radius"], d["height"]) for cx, cy in centers]


def box_solids(d):
    bx, by, bz = d["box_x"], d["box_y"], d["box_z"]
    cols, layers = int(d["columns"]), int(d["layers"])
    x0 = -cols * bx / 2
    return [
        Box((x0 + c * bx, -by / 2, l * bz), (x0 + (c + 1) * bx, by / 2, (l + 1) * bz))
        for l in range(layers) for c in range(cols)
    ]


def hub_point(d) -> np.ndarray:
    return np.array([0.0, 0.0, d["tower_height"] + d["nacelle_z"]])


def blade_axes(d) -> list[np.ndarray]:
    """Unit blade directions: 120 deg apart in azimuth, tilted up by the elevation."""
    el = math.radians(d["blade_elevation_deg"])
    out = []
    for az_deg in (90.0, 210.0, 330.0):
        az = math.radians(az_deg)
        out.append(np.array([math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)]))
    return out


def turbine_solids(d):
    th = d["tower_height"]
    nx, ny, nz = d["nacelle_x"], d["nacelle_y"], d["nacelle_z"]
    if nx / 2 < d["tower_radius"] or ny / 2 < d["tower_radius"]:
        raise ValidationError("turbine: nacelle must be at least as wide as the tower")
    solids = [
        Cylinder((0.0, 0.0, 0.0), (0.0, 0.0, 1.0), d["tower_radius"], th),
        Box((-nx / 2, -ny / 2, th), (nx / 2, ny / 2, th + nz)),
    ]
    hub = tuple(hub_point(d))
    for a in blade_axes(d):
        solids.append(Cylinder(hub, tuple(a), d["blade_radius"], d["blade_length"], (False, True)))
    return solids


_SOLIDS = {"cylinder": cylinder_solids, "pillars": pillar_solids, "boxes": box_solids, "turbine": turbine_solids}
_POSITIVE = {
    "cylinder": ("radius", "height"),
    "pillars": ("radius", "height", "spacing"),
    "boxes": ("box_x", "box_y", "box_z", "columns", "layers"),
    "turbine": tuple(k for k in DEFAULTS["turbine"]),
}


def solids(spec: FixtureSpec):
    d = spec.resolved()
    _positive(spec.kind, d, _POSITIVE[spec.kind])
    return _SOLIDS[spec.kind](d)


def generate(spec: FixtureSpec) -> StructureModel:
    if not (math.isfinite(spec.sample_pitch) and spec.sample_pitch > 0):
        raise ValidationError("sample_pitch must be > 0")
    return StructureModel(_union_surface(solids(spec), spec.sample_pitch))


def on_surface_distance(spec: FixtureSpec, points: np.ndarray) -> np.ndarray:
    """Distance of each point to the nearest declared primitive surface."""
    best = np.full(len(points), np.inf)
    for s in solids(spec):
        if isinstance(s, Cylinder):
            base = np.asarray(s.base, dtype=float)
            a, _, _ = s._frame()
            q = points - base
            t = q @ a
            radial = np.linalg.norm(q - t[:, None] * a, axis=1)
            tc = np.clip(t, 0.0, s.length)
            lateral = np.hypot(np.abs(radial - s.r), t - tc)
            d = lateral
            for end, on in zip((0.0, s.length), s.caps):
                if on:
                    over = np.maximum(radial - s.r, 0.0)
                    d = np.minimum(d, np.hypot(t - end, over))
        else:
            lo = np.asarray(s.lo, dtype=float)
            hi = np.asarray(s.hi, dtype=float)
            outside = np.linalg.norm(np.maximum(np.maximum(lo - points, points - hi), 0.0), axis=1)
            inside_gap = np.min(np.minimum(points - lo, hi - points), axis=1)
            d = np.where(outside > 0, outside, np.abs(inside_gap))
        best = np.minimum(best, d)
    return best


# named presets used by tests, acceptance and the CLI
PRESETS = {
    "cylinder": FixtureSpec("cylinder"),
    # the two end strips a horizontal camera cannot see cost ~0.29*omega each,
    # so the coverage target needs a tall tube (139 slices at omega = 0.5)
    "coverage-cylinder": FixtureSpec("cylinder", {"radius": 1.0, "height": 60.2}),
    "twin-pillars": FixtureSpec("pillars", {"count": 2}),
    "three-pillars": FixtureSpec("pillars", {"count": 3, "spacing": 8.0}),
    "boxes": FixtureSpec("boxes", sample_pitch=0.05),
    "turbine": FixtureSpec("turbine"),
}


def preset(name: str, **overrides) -> FixtureSpec:
    try:
        base = PRESETS[name]
    except KeyError:
        raise ValidationError(f"unknown fixture preset {name!r}; expected one of {', '.join(PRESETS)}") from None
    dims = dict(base.dims)
    dims.update(overrides.pop("dims", {}))
    return FixtureSpec(base.kind, dims, overrides.get("sample_pitch", base.sample_pitch), overrides.get("seed", base.seed))


def export(spec: FixtureSpec, path) -> Path:
    model = generate(spec)
    path = Path(path)
    write_point_set(model, path, header=f"fixture {spec.kind} pitch {spec.sample_pitch!r} dims {spec.resolved()}")
    return path
