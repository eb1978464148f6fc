"""Compare the compiled and pure-Python kernels on realistic inputs.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from ccpp import fixtures, kernels, verify
from ccpp.config import PlannerConfig
from ccpp.pipeline import plan_mission
from ccpp.slicer import slice_model
from ccpp.topology import adjacency_pairs


def _best(fn, repeat):
    best = math.inf
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    try:
        cy = kernels.backend("cython")
    except ImportError:
        print("compiled extension not built; nothing to compare")
        return
    py = kernels.backend("python")

    model = fixtures.generate(fixtures.preset("cylinder", dims={"radius": 1.0, "height": 6.0}))
    cfg = PlannerConfig(alpha=math.radians(60), r_max=3.0, omega=0.5, d_min=0.2, d_s=0.4,
                        n_agents=2, v_d=0.5, t_s=1.0, sample_pitch=0.1)
    result = plan_mission(model, cfg)
    pts = np.ascontiguousarray(model.points)
    samples, yaw = verify._stack_samples(result.trajectories)
    indptr, cand = verify.fov_candidates(pts, samples, yaw, cfg.alpha, cfg.r_max)
    grid = verify.occluder_grid(pts, cfg.sample_pitch)
    vis_args = (pts, np.ascontiguousarray(samples), indptr, cand, *grid, cfg.sample_pitch)

    s = max(slice_model(model, cfg.delta_lambda), key=len)
    pairs = adjacency_pairs(s.xy, cfg.d_min)
    ii, jj = pairs[:, 0].copy(), pairs[:, 1].copy()

    rows = []
    for name, call in [
        ("visible_any", lambda impl: impl.visible_any(*vis_args)),
        ("component_labels", lambda impl: impl.component_labels(len(s), ii, jj)),
    ]:
        t_py, r_py = _best(lambda: call(py), args.repeat)
        t_cy, r_cy = _best(lambda: call(cy), args.repeat)
        same = bool(np.array_equal(np.asarray(r_py), np.asarray(r_cy)))
        rows.append((name, t_py, t_cy, t_py / t_cy if t_cy > 0 else math.inf, same))

    print(f"model points: {len(model)}, trajectory samples: {len(samples)}, candidates: {len(cand)}")
    print(f"{'kernel':<18}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}  identical")
    for name, tp, tc, sp, same in rows:
        print(f"{name:<18}{tp:>12.4f}{tc:>12.4f}{sp:>10.1f}  {same}")


if __name__ == "__main__":
    main()
