"""Loop (branch) detection inside a slice.

The loop count is the number of connected components of the graph that
joins points closer than ``d_min`` in the plane. It is computed twice, from
the zero eigenvalues of the graph Laplacian and with a union-find, and the
two must agree. Points are then split into loops with seeded k-means++,
repaired so every loop is exactly one component.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .errors import TopologyConsistencyError
from .slicer import Slice

EIG_ZERO_TOL = 1e-8


@dataclass(frozen=True)
class Loop:
    loop_id: int
    points: np.ndarray  # (N, 3)
    center: np.ndarray  # (2,)
    radial_angles: np.ndarray  # (N,), in (-pi, pi]

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class SliceLoopSet:
    slice_index: int
    lam: float
    loops: list[Loop]

    @property
    def k(self) -> int:
        return len(self.loops)


def radial_angles(xy: np.ndarray, center) -> np.ndarray:
    a = np.arctan2(xy[:, 1] - center[1], xy[:, 0] - center[0])
    a[a <= -np.pi] = np.pi
    return a


def adjacency_pairs(xy: np.ndarray, d_min: float) -> np.ndarray:
    """(M, 2) index pairs i < j with planar distance strictly below d_min."""
    if len(xy) < 2:
        return np.empty((0, 2), dtype=np.int64)
    pairs = cKDTree(xy).query_pairs(d_min, output_type="ndarray").astype(np.int64)
    if len(pairs):
        d = np.linalg.norm(xy[pairs[:, 0]] - xy[pairs[:, 1]], axis=1)
        pairs = pairs[d < d_min]
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    return pairs


def component_labels(xy: np.ndarray, d_min: float) -> np.ndarray:
    pairs = adjacency_pairs(xy, d_min)
    return kernels.component_labels(len(xy), pairs[:, 0].copy(), pairs[:, 1].copy())


def laplacian(xy: np.ndarray, d_min: float) -> np.ndarray:
    n = len(xy)
    pairs = adjacency_pairs(xy, d_min)
    A = np.zeros((n, n))
    A[pairs[:, 0], pairs[:, 1]] = 1.0
    A[pairs[:, 1], pairs[:, 0]] = 1.0
    return np.diag(A.sum(axis=1)) - A


def spectral_count(xy: np.ndarray, d_min: float, tol: float = EIG_ZERO_TOL) -> int:
    eig = np.linalg.eigvalsh(laplacian(xy, d_min))
    return int(np.count_nonzero(np.abs(eig) < tol))


def count_loops(slice_: Slice, d_min: float) -> int:
    if slice_.empty:
        raise ValueError(f"slice {slice_.index} is empty")
    if d_min <= 0:
        raise ValueError("d_min must be > 0")
    xy = slice_.xy
    spectral = spectral_count(xy, d_min)
    uf = int(component_labels(xy, d_min).max()) + 1
    if spectral != uf:
        raise TopologyConsistencyError(
            f"slice {slice_.index}: Laplacian gives {spectral} components, union-find gives {uf}"
        )
    return spectral


def merge_near_points(slice_: Slice, d_min: float) -> Slice:
    """Replace points closer than ``d_min / 4`` by cluster centroids.

    Leader clustering bounds each cluster's radius, so dense rings shrink to
    rings rather than collapsing. Repeats until no pair is closer than the
    merge pitch.
    """
    pitch = d_min / 4.0
    if len(slice_) < 2:
        return slice_
    xy = slice_.xy.astype(np.float64, copy=True)
    weight = np.ones(len(xy))
    while len(xy) > 1:
        tree = cKDTree(xy)
        close = adjacency_pairs(xy, pitch)
        if len(close) == 0:
            break
        nbrs = tree.query_ball_point(xy, pitch, return_sorted=True)
        indptr = np.zeros(len(xy) + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(n) for n in nbrs])
        flat = np.fromiter((q for n in nbrs for q in n), dtype=np.int64, count=indptr[-1])
        labels = kernels.leader_labels(np.ascontiguousarray(xy), pitch, indptr, flat)
        k = int(labels.max()) + 1
        w = np.bincount(labels, weights=weight, minlength=k)
        cx = np.bincount(labels, weights=weight * xy[:, 0], minlength=k) / w
        cy = np.bincount(labels, weights=weight * xy[:, 1], minlength=k) / w
        if k == len(xy):
            # leader pass made no merge (pairs sit exactly at the radius); stop
            break
        xy = np.column_stack([cx, cy])
        weight = w
    pts = np.column_stack([xy, np.full(len(xy), slice_.lam)])
    return Slice(slice_.index, slice_.lam, pts, np.arange(len(pts)))


def kmeans_pp_init(xy: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(xy)
    centers = [xy[rng.integers(n)]]
    d2 = np.sum((xy - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers.append(xy[idx])
        d2 = np.minimum(d2, np.sum((xy - xy[idx]) ** 2, axis=1))
    return np.array(centers)


def kmeans(xy: np.ndarray, k: int, seed: int, max_iter: int = 300):
    """Lloyd iterations from k-means++ seeds until assignments stop changing.

    Returns (labels, centers). Ties go to the lowest cluster index.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(xy):
        raise ValueError(f"k={k} exceeds number of points ({len(xy)})")
    rng = np.random.default_rng(seed)
    centers = kmeans_pp_init(xy, k, rng)
    labels = None
    for _ in range(max_iter):
        d2 = ((xy[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = np.argmin(d2, axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            members = xy[labels == c]
            if len(members):
                centers[c] = members.mean(axis=0)
            else:
                # re-seed an empty cluster at the point farthest from its center
                far = int(np.argmax(d2[np.arange(len(xy)), labels]))
                centers[c] = xy[far]
    return labels, centers


def repair_components(labels: np.ndarray, comp: np.ndarray, k: int) -> np.ndarray:
    """Make clusters coincide with connected components.

    Each component goes wholesale to the cluster holding most of its points
    (lowest cluster id on ties). Clusters that end up with several
    components keep the largest and hand the rest to empty cluster ids.
    """
    ncomp = int(comp.max()) + 1
    counts = np.zeros((ncomp, k), dtype=np.int64)
    np.add.at(counts, (comp, labels), 1)
    owner = np.argmax(counts, axis=1)
    sizes = np.bincount(comp, minlength=ncomp)
    free = [c for c in range(k) if c not in set(owner.tolist())]
    for c in range(k):
        held = [g for g in range(ncomp) if owner[g] == c]
        if len(held) > 1:
            held.sort(key=lambda g: (-sizes[g], g))
            for g in held[1:]:
                if not free:
                    raise TopologyConsistencyError("more components than clusters")
                owner[g] = free.pop(0)
    return owner[comp]


def cluster_loops(slice_: Slice, k: int, seed: int, d_min: float | None = None) -> SliceLoopSet:
    """Partition a slice into ``k`` loops with centers and radial angles.

    With ``d_min`` given, the clusters are repaired to match the
    ``d_min``-adjacency components.
    """
    if slice_.empty:
        raise ValueError(f"slice {slice_.index} is empty")
    xy = slice_.xy
    labels, _ = kmeans(xy, k, seed)
    if d_min is not None and k > 1:
        labels = repair_components(labels, component_labels(xy, d_min), k)
    loops = []
    for c in range(k):
        members = np.flatnonzero(labels == c)
        if len(members) == 0:
            continue
        pts = slice_.points[members]
        center = pts[:, :2].mean(axis=0)
        loops.append(Loop(len(loops), pts, center, radial_angles(pts[:, :2], center)))
    return SliceLoopSet(slice_.index, slice_.lam, loops)


def detect_loops(slice_: Slice, d_min: float, seed: int) -> SliceLoopSet:
    """merge -> count -> cluster for one slice; empty slices give no loops."""
    if slice_.empty:
        return SliceLoopSet(slice_.index, slice_.lam, [])
    merged = merge_near_points(slice_, d_min)
    k = count_loops(merged, d_min)
    return cluster_loops(merged, k, seed, d_min=d_min)


def dump_loops(loopset: SliceLoopSet, out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    p = out_dir / f"loops_{loopset.slice_index}.txt"
    lines = [f"# slice {loopset.slice_index} lambda {loopset.lam!r} k {loopset.k}"]
    for lp in loopset.loops:
        lines.append(f"loop {lp.loop_id} center {lp.center[0]!r} {lp.center[1]!r} n {len(lp)}")
        lines.extend(f"{x!r} {y!r} {z!r}" for x, y, z in lp.points.tolist())
    p.write_text("\n".join(lines) + "\n")
    return p
