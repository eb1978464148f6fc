"""Post-hoc checks on planned trajectories: separation, clearance, FOV coverage."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .errors import IOFailure
from .mission import Trajectory, mission_duration
from .model_io import StructureModel, format_points

SEPARATION = "separation"
CLEARANCE = "clearance"
PROXIMITY = "proximity"


@dataclass(frozen=True)
class Violation:
    t: float
    agents: tuple
    kind: str
    value: float


@dataclass
class CoverageReport:
    covered_fraction: float
    uncovered_points: np.ndarray
    min_inter_agent_distance: float = math.inf
    min_structure_clearance: float = math.inf
    per_agent_duration: dict = field(default_factory=dict)
    violations: list[Violation] = field(default_factory=list)
    warnings: list[Violation] = field(default_factory=list)
    min_unsynchronized_distance: float = math.inf
    covered: np.ndarray | None = None

    def as_dict(self) -> dict:
        counts: dict = {}
        for v in self.violations:
            counts[v.kind] = counts.get(v.kind, 0) + 1
        return {
            "covered_fraction": self.covered_fraction,
            "uncovered_count": int(len(self.uncovered_points)),
            "min_inter_agent_distance": self.min_inter_agent_distance,
            "min_structure_clearance": self.min_structure_clearance,
            "duration_s": {str(k): v for k, v in sorted(self.per_agent_duration.items())},
            "violation_count": len(self.violations),
            "violations_by_kind": counts,
            "min_unsynchronized_distance": self.min_unsynchronized_distance,
            "warning_count": len(self.warnings),
        }


# --- separation -------------------------------------------------------------------


def _pair_mask(a: Trajectory, b: Trajectory, n: int) -> np.ndarray:
    """Synchronized steps: both samples carry the same branch label.

    Trajectories without labels (e.g. read from bare CSV files) are
    compared at every step.
    """
    if a.branch is None or b.branch is None:
        return np.ones(n, dtype=bool)
    return np.array([la is not None and la == lb for la, lb in zip(a.branch[:n], b.branch[:n])], dtype=bool)


def _pairwise(trajectories, d_s: float, select, kind: str):
    best = math.inf
    found: list[Violation] = []
    trs = list(trajectories)
    for i in range(len(trs)):
        for j in range(i + 1, len(trs)):
            a, b = trs[i], trs[j]
            n = min(len(a), len(b))
            if n == 0:
                continue
            d = np.hypot(a.position[:n, 0] - b.position[:n, 0], a.position[:n, 1] - b.position[:n, 1])
            d = np.where(select(a, b, n), d, math.inf)
            best = min(best, float(d.min()))
            pair = tuple(sorted((a.agent_id, b.agent_id)))
            for k in np.flatnonzero(d < d_s):
                found.append(Violation(float(a.t[k]), pair, kind, float(d[k])))
    found.sort(key=lambda v: (v.t, v.agents))
    return best, found


def check_safety(trajectories: Sequence[Trajectory], d_s: float):
    """Minimum planar distance between agents at synchronized steps.

    A step is synchronized for a pair when both agents fly the same loop
    of the same slice at that time index. Returns (min_distance,
    violations); with fewer than two agents the distance is ``inf``.
    """
    return _pairwise(trajectories, d_s, _pair_mask, SEPARATION)


def check_proximity(trajectories: Sequence[Trajectory], d_s: float):
    """Planar approaches below ``d_s`` outside synchronized steps.

    Covers transfers and agents on different branches. These are reported
    as warnings: the planner does not time-deconflict transfers.
    """
    def others(a, b, n):
        return ~_pair_mask(a, b, n)

    return _pairwise(trajectories, d_s, others, PROXIMITY)


def check_clearance(model: StructureModel, trajectories: Sequence[Trajectory], threshold: float):
    """Minimum 3D distance from any sample to the structure points."""
    tree = cKDTree(model.points)
    best = math.inf
    violations: list[Violation] = []
    for tr in trajectories:
        if len(tr) == 0:
            continue
        d = tree.query(tr.position)[0]
        best = min(best, float(d.min()))
        for k in np.flatnonzero(d < threshold):
            violations.append(Violation(float(tr.t[k]), (tr.agent_id,), CLEARANCE, float(d[k])))
    return best, violations


# --- coverage ---------------------------------------------------------------------


def camera_axes(yaw: np.ndarray, tilt: float = 0.0) -> np.ndarray:
    """Unit camera axes; ``tilt`` > 0 points the camera down."""
    c = math.cos(tilt)
    return np.column_stack([c * np.cos(yaw), c * np.sin(yaw), np.full(len(yaw), -math.sin(tilt))])


def _stack_samples(trajectories):
    trs = [t for t in trajectories if len(t)]
    if not trs:
        return np.empty((0, 3)), np.empty(0)
    return np.vstack([t.position for t in trs]), np.concatenate([t.yaw for t in trs])


def fov_candidates(points: np.ndarray, samples: np.ndarray, yaw: np.ndarray,
                   alpha: float, r_max: float, tilt: float = 0.0):
    """CSR lists of samples that have each point inside range and aperture, nearest first."""
    n = len(points)
    indptr = np.zeros(n + 1, dtype=np.int64)
    if len(samples) == 0:
        return indptr, np.empty(0, dtype=np.int64)
    lists = cKDTree(samples).query_ball_point(points, r_max)
    counts = np.fromiter((len(l) for l in lists), dtype=np.int64, count=n)
    if counts.sum() == 0:
        return indptr, np.empty(0, dtype=np.int64)
    owner = np.repeat(np.arange(n), counts)
    cand = np.concatenate([np.asarray(l, dtype=np.int64) for l in lists if len(l)])
    v = points[owner] - samples[cand]
    dist = np.linalg.norm(v, axis=1)
    axes = camera_axes(yaw, tilt)[cand]
    cos_half = math.cos(alpha / 2.0)
    ok = (dist > 0) & (dist <= r_max) & (np.einsum("ij,ij->i", v, axes) >= dist * cos_half - 1e-12)
    owner, cand, dist = owner[ok], cand[ok], dist[ok]
    order = np.lexsort((cand, dist, owner))
    owner, cand = owner[order], cand[order]
    indptr[1:] = np.cumsum(np.bincount(owner, minlength=n))
    return indptr, np.ascontiguousarray(cand)


def occluder_grid(points: np.ndarray, r_occ: float):
    """Bucket points into cubic cells of side ``1.5 * r_occ``."""
    cell = 1.5 * r_occ
    origin = points.min(axis=0) - cell
    dims = np.ceil((points.max(axis=0) - origin) / cell).astype(np.int64) + 2
    nx, ny, nz = (int(d) for d in dims)
    ijk = np.floor((points - origin) / cell).astype(np.int64)
    flat = (ijk[:, 0] * ny + ijk[:, 1]) * nz + ijk[:, 2]
    order = np.argsort(flat, kind="stable")
    cell_start = np.zeros(nx * ny * nz + 1, dtype=np.int64)
    cell_start[1:] = np.cumsum(np.bincount(flat, minlength=nx * ny * nz))
    return (np.ascontiguousarray(points[order]), order.astype(np.int64), cell_start,
            np.ascontiguousarray(origin), float(cell), nx, ny, nz)


def coverage_mask(model: StructureModel, trajectories: Sequence[Trajectory], alpha: float, r_max: float,
                  occlusion_radius: float, tilt: float = 0.0, impl=None) -> np.ndarray:
    """Per surface point: seen by some sample within range, aperture and line of sight."""
    points = np.ascontiguousarray(model.points)
    samples, yaw = _stack_samples(trajectories)
    if len(samples) == 0:
        return np.zeros(len(points), dtype=bool)
    indptr, cand = fov_candidates(points, samples, yaw, alpha, r_max, tilt)
    occ_points, occ_ids, cell_start, origin, cell, nx, ny, nz = occluder_grid(points, occlusion_radius)
    covered = kernels.visible_any(
        points, np.ascontiguousarray(samples), indptr, cand,
        occ_points, occ_ids, cell_start, origin, cell, nx, ny, nz, float(occlusion_radius), impl=impl,
    )
    return np.asarray(covered, dtype=bool)


def check_coverage(model: StructureModel, trajectories: Sequence[Trajectory], alpha: float, r_max: float,
                   occlusion_radius: float, tilt: float = 0.0, impl=None) -> CoverageReport:
    covered = coverage_mask(model, trajectories, alpha, r_max, occlusion_radius, tilt, impl)
    return CoverageReport(
        covered_fraction=float(covered.mean()),
        uncovered_points=model.points[~covered],
        covered=covered,
    )


def verify_mission(model: StructureModel, trajectories: Sequence[Trajectory], alpha: float, r_max: float,
                   d_s: float, t_s: float, occlusion_radius: float, clearance_threshold: float | None = None,
                   tilt: float = 0.0, impl=None) -> CoverageReport:
    """Coverage plus separation and clearance checks in one report."""
    report = check_coverage(model, trajectories, alpha, r_max, occlusion_radius, tilt, impl)
    sep, sep_v = check_safety(trajectories, d_s)
    thr = d_s if clearance_threshold is None else clearance_threshold
    clr, clr_v = check_clearance(model, trajectories, thr)
    report.min_inter_agent_distance = sep
    report.min_unsynchronized_distance, report.warnings = check_proximity(trajectories, d_s)
    report.min_structure_clearance = clr
    report.violations = sorted(sep_v + clr_v, key=lambda v: (v.t, v.kind, v.agents))
    if trajectories:
        report.per_agent_duration = mission_duration(trajectories, t_s)[0]
    return report


# --- metrics and export ------------------------------------------------------------


def yaw_reversal_rate(tr: Trajectory, tol: float = 1e-9) -> float:
    """Reversals of yaw rotation direction per minute of flight."""
    if len(tr) < 3 or tr.duration <= 0:
        return 0.0
    d = np.angle(np.exp(1j * np.diff(tr.yaw)))
    s = np.sign(d[np.abs(d) > tol])
    flips = int(np.count_nonzero(s[1:] != s[:-1])) if len(s) > 1 else 0
    return flips / (tr.duration / 60.0)


def export_plot_data(report: CoverageReport | None, trajectories: Sequence[Trajectory], out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        for tr in trajectories:
            p = out_dir / f"path_{tr.agent_id}.txt"
            p.write_text(format_points(tr.position, header="x y z"))
            written.append(p)
            q = out_dir / f"yaw_{tr.agent_id}.txt"
            rows = ["# t yaw"] + [f"{t!r} {y!r}" for t, y in zip(tr.t.tolist(), tr.yaw.tolist())]
            q.write_text("\n".join(rows) + "\n")
            written.append(q)
        u = out_dir / "uncovered.txt"
        pts = np.empty((0, 3)) if report is None else report.uncovered_points
        u.write_text(format_points(pts, header="x y z"))
        written.append(u)
    except OSError as exc:
        raise IOFailure(f"{out_dir}: {exc.strerror}") from exc
    return written
