"""Offset inspection loops around each detected loop.

Every surface point is pushed out by ``omega`` along its radial direction
from the loop center; the camera yaw looks back along that direction.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .topology import Loop

log = logging.getLogger(__name__)

CLEARANCE_SLACK = 0.25
_CENTER_EPS = 1e-12
_ANGLE_EPS = 1e-12


def wrap_angle(a):
    """Map angles to (-pi, pi]."""
    w = np.mod(np.asarray(a, dtype=float) + np.pi, 2 * np.pi) - np.pi
    w = np.where(w <= -np.pi, np.pi, w)
    return float(w) if np.ndim(w) == 0 else w


@dataclass(frozen=True)
class Waypoint:
    position: np.ndarray  # (3,)
    yaw: float
    radial_angle: float
    source: np.ndarray  # surface point the waypoint was offset from
    loop_id: int
    slice_index: int
    flagged: bool = False

    @property
    def key(self):
        return (self.slice_index, self.loop_id, round(self.radial_angle, 12))


@dataclass(frozen=True)
class OffsetLoop:
    slice_index: int
    loop_id: int
    center: np.ndarray
    waypoints: list[Waypoint]
    skipped: int = 0  # source points coincident with the center
    discarded: int = 0  # candidates dropped for sitting inside the loop
    track: int = field(default=-1, compare=False)

    def __len__(self):
        return len(self.waypoints)

    @property
    def positions(self) -> np.ndarray:
        if not self.waypoints:
            return np.empty((0, 3))
        return np.array([w.position for w in self.waypoints])

    @property
    def perimeter(self) -> float:
        """Closed polygon length through the waypoints."""
        p = self.positions[:, :2]
        if len(p) < 2:
            return 0.0
        return float(np.linalg.norm(np.diff(np.vstack([p, p[:1]]), axis=0), axis=1).sum())

    @property
    def flagged(self) -> list[Waypoint]:
        return [w for w in self.waypoints if w.flagged]


def offset_points(xy: np.ndarray, center, omega: float):
    """Radial offset of planar points. Returns (offset_xy, theta)."""
    theta = np.arctan2(xy[:, 1] - center[1], xy[:, 0] - center[0])
    theta[theta <= -np.pi] = np.pi
    out = np.column_stack([xy[:, 0] + omega * np.cos(theta), xy[:, 1] + omega * np.sin(theta)])
    return out, theta


def thin(xy: np.ndarray, pitch: float) -> np.ndarray:
    """Greedy keep-mask: a point survives if it is >= pitch from the last kept one."""
    keep = np.zeros(len(xy), dtype=bool)
    if len(xy) == 0:
        return keep
    keep[0] = True
    last = xy[0]
    for i in range(1, len(xy)):
        if math.dist(xy[i], last) >= pitch:
            keep[i] = True
            last = xy[i]
    return keep


def shadowed(xy: np.ndarray, center, margin: float) -> np.ndarray:
    """True for points with another loop point further out along the same ray.

    A point q shadows p when q lies within half a point spacing of the ray
    from the center through p and more than ``margin`` beyond p. Shadowed
    points sit inside the outline (e.g. a horizontal face caught in the
    slice band).
    """
    n = len(xy)
    out = np.zeros(n, dtype=bool)
    if n < 3:
        return out
    rel = xy - np.asarray(center, dtype=float)
    r = np.hypot(rel[:, 0], rel[:, 1])
    spacing = float(np.median(cKDTree(xy).query(xy, k=2)[0][:, 1]))
    half = 0.5 * spacing
    for i in range(n):
        if r[i] == 0.0:
            continue
        u = rel[i] / r[i]
        along = rel @ u
        lateral = np.abs(rel[:, 0] * u[1] - rel[:, 1] * u[0])
        out[i] = bool(np.any((lateral < half) & (along > r[i] + margin)))
    return out


def build_offset_loop(
    loop: Loop,
    omega: float,
    waypoint_pitch: float | None = None,
    slice_index: int = -1,
    clearance_slack: float = CLEARANCE_SLACK,
) -> OffsetLoop:
    """Offset, drop shadowed candidates, sort counter-clockwise and thin.

    Candidates from points lying inside the loop outline (another point
    further out along the same ray by more than ``omega * clearance_slack``)
    are dropped, unless that would drop every candidate.
    """
    if omega <= 0:
        raise ValueError("omega must be > 0")
    if len(loop) < 3:
        raise ValueError(f"loop {loop.loop_id} has {len(loop)} points; need >= 3")
    xy = loop.points[:, :2]
    lam = float(loop.points[0, 2])
    r = np.hypot(xy[:, 0] - loop.center[0], xy[:, 1] - loop.center[1])
    at_center = r < _CENTER_EPS
    skipped = int(at_center.sum())
    if skipped:
        log.warning("loop %d: %d point(s) at the loop center skipped", loop.loop_id, skipped)
    src = xy[~at_center]
    off, theta = offset_points(src, loop.center, omega)

    inside = shadowed(src, loop.center, omega * clearance_slack)
    discarded = 0
    if inside.any() and not inside.all():
        discarded = int(inside.sum())
        src, off, theta = src[~inside], off[~inside], theta[~inside]

    order = np.argsort(theta, kind="stable")
    src, off, theta = src[order], off[order], theta[order]
    distinct = np.ones(len(theta), dtype=bool)
    distinct[1:] = np.diff(theta) > _ANGLE_EPS
    src, off, theta = src[distinct], off[distinct], theta[distinct]
    if waypoint_pitch:
        keep = thin(off, waypoint_pitch)
        src, off, theta = src[keep], off[keep], theta[keep]

    yaw = wrap_angle(theta + np.pi)
    wps = [
        Waypoint(
            position=np.array([off[i, 0], off[i, 1], lam]),
            yaw=float(yaw[i]),
            radial_angle=float(theta[i]),
            source=np.array([src[i, 0], src[i, 1], lam]),
            loop_id=loop.loop_id,
            slice_index=slice_index,
        )
        for i in range(len(theta))
    ]
    return OffsetLoop(slice_index, loop.loop_id, np.asarray(loop.center, dtype=float), wps, skipped, discarded)


def flag_clearance(oloop: OffsetLoop, surface_xy: np.ndarray, omega: float,
                   clearance_slack: float = CLEARANCE_SLACK) -> OffsetLoop:
    """Flag waypoints closer than ``omega * (1 - slack)`` to any surface point."""
    if not oloop.waypoints or len(surface_xy) == 0:
        return oloop
    d = cKDTree(surface_xy).query(oloop.positions[:, :2])[0]
    bad = d < omega * (1.0 - clearance_slack) - 1e-12
    wps = [replace(w, flagged=bool(b)) for w, b in zip(oloop.waypoints, bad)]
    return replace(oloop, waypoints=wps)


def dump_offset_loop(oloop: OffsetLoop, out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    p = out_dir / f"offset_{oloop.slice_index}_{oloop.loop_id}.txt"
    rows = ["# x y z yaw"]
    rows.extend(f"{w.position[0]!r} {w.position[1]!r} {w.position[2]!r} {w.yaw!r}" for w in oloop.waypoints)
    p.write_text("\n".join(rows) + "\n")
    return p
