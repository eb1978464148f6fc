"""Horizontal slicing of a structure point set.

Plane heights run from ``min_z + dl`` up to the largest ``min_z + k*dl``
not exceeding ``max_z - dl``. Each plane owns the half-open band
``[lambda - dl/2, lambda + dl/2)``; points in the band are projected onto
the plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NoSlicesError
from .model_io import StructureModel, write_point_set

_EPS = 1e-9


@dataclass(frozen=True)
class Slice:
    index: int
    lam: float
    points: np.ndarray  # (N, 3), z == lam
    source_ids: np.ndarray  # indices into the model points

    @property
    def empty(self) -> bool:
        return len(self.points) == 0

    @property
    def xy(self) -> np.ndarray:
        return self.points[:, :2]

    def __len__(self):
        return len(self.points)


def slice_heights(min_z: float, max_z: float, delta_lambda: float) -> np.ndarray:
    if not (delta_lambda > 0 and math.isfinite(delta_lambda)):
        raise ValueError("delta_lambda must be a positive finite number")
    extent = max_z - min_z
    count = math.floor((extent - delta_lambda) / delta_lambda + _EPS)
    if extent <= 0 or count < 1:
        raise NoSlicesError(
            f"no slices: delta_lambda={delta_lambda:g} leaves no plane inside vertical extent {extent:g}"
        )
    k = np.arange(1, count + 1, dtype=np.float64)
    return min_z + k * delta_lambda


def band_index(z: np.ndarray, min_z: float, delta_lambda: float) -> np.ndarray:
    """Plane ordinal k (1-based) whose band contains each z."""
    return np.floor((z - min_z) / delta_lambda + 0.5).astype(np.int64)


def slice_model(model: StructureModel, delta_lambda: float) -> list[Slice]:
    min_z, max_z = model.bounds.min_z, model.bounds.max_z
    lams = slice_heights(min_z, max_z, delta_lambda)
    pts = model.points
    k = band_index(pts[:, 2], min_z, delta_lambda)
    order = np.argsort(k, kind="stable")
    ks = k[order]
    slices = []
    for i, lam in enumerate(lams):
        lo, hi = np.searchsorted(ks, [i + 1, i + 2])
        ids = order[lo:hi]
        sp = pts[ids].copy()
        sp[:, 2] = lam
        slices.append(Slice(i, float(lam), sp, ids))
    return slices


def dump_slices(slices, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for s in slices:
        p = out_dir / f"slice_{s.index}_{s.lam:.6f}.txt"
        if s.empty:
            p.write_text("# empty slice\n")
        else:
            write_point_set(s.points, p, header=f"slice {s.index} lambda {s.lam!r}")
        paths.append(p)
    return paths
