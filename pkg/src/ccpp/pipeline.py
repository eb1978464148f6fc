"""End-to-end planning: slice -> loops -> offsets -> assignment -> trajectories."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import mission
from .config import PlannerConfig
from .model_io import StructureModel
from .offset_path import OffsetLoop, build_offset_loop, flag_clearance
from .slicer import Slice, slice_model
from .topology import SliceLoopSet, detect_loops

log = logging.getLogger(__name__)

MIN_LOOP_POINTS = 3


@dataclass
class MissionResult:
    config: PlannerConfig
    slices: list[Slice]
    loopsets: list[SliceLoopSet]
    offset_loops: list[list[OffsetLoop]]
    plans: list[mission.AgentPlan]
    trajectories: list[mission.Trajectory]
    timings_ms: dict = field(default_factory=dict)

    @property
    def waypoints(self):
        return [w for loops in self.offset_loops for lp in loops for w in lp.waypoints]

    @property
    def flagged(self):
        return [w for w in self.waypoints if w.flagged]

    def durations(self):
        return mission.mission_duration(self.trajectories, self.config.t_s)

    def summary(self) -> dict:
        per_agent, total = self.durations()
        agents = []
        for plan, tr in zip(self.plans, self.trajectories):
            wps = plan.coverage_waypoints
            agents.append({
                "agent_id": plan.agent_id,
                "duration_s": per_agent[plan.agent_id],
                "path_length_m": plan.total_path_length,
                "waypoints": len(wps),
                "flagged_waypoints": sum(w.flagged for w in wps),
                "samples": len(tr),
            })
        return {
            "n_agents": len(self.plans),
            "n_slices": len(self.slices),
            "loops_per_slice": [ls.k for ls in self.loopsets],
            "total_waypoints": len(self.waypoints),
            "flagged_waypoints": len(self.flagged),
            "mission_duration_s": total,
            "agents": agents,
        }


class _Timer:
    def __init__(self, sink: dict, name: str):
        self.sink, self.name = sink, name

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, *exc):
        self.sink[self.name] = round((time.perf_counter() - self.t0) * 1000.0, 3)


def offset_slice(slice_: Slice, loopset: SliceLoopSet, cfg: PlannerConfig) -> list[OffsetLoop]:
    out = []
    for lp in loopset.loops:
        if len(lp) < MIN_LOOP_POINTS:
            log.warning("slice %d loop %d: only %d point(s), no offset loop", slice_.index, lp.loop_id, len(lp))
            continue
        ol = build_offset_loop(lp, cfg.omega, waypoint_pitch=cfg.step, slice_index=slice_.index)
        out.append(flag_clearance(ol, slice_.xy, cfg.omega))
    return out


def build_loops(model: StructureModel, cfg: PlannerConfig, timings: dict | None = None):
    """Slices, loop sets and offset loops for a model."""
    timings = {} if timings is None else timings
    with _Timer(timings, "slice"):
        slices = slice_model(model, cfg.delta_lambda)
    with _Timer(timings, "topology"):
        loopsets = [detect_loops(s, cfg.d_min, cfg.seed) for s in slices]
    with _Timer(timings, "offset"):
        offsets = [offset_slice(s, ls, cfg) for s, ls in zip(slices, loopsets)]
    return slices, loopsets, offsets


def plan_mission(model: StructureModel, cfg: PlannerConfig, schedule_mode: str = "phase",
                 strict: bool = False) -> MissionResult:
    timings: dict = {}
    slices, loopsets, offsets = build_loops(model, cfg, timings)
    with _Timer(timings, "mission"):
        plans = mission.assign_agents(offsets, cfg.n_agents, strict=strict)
        plans = mission.schedule_deconflicted(plans, cfg.d_s, mode=schedule_mode)
        plans = mission.attach_transfers(plans, model.points, cfg.d_s, cfg.step, cfg.omega)
    with _Timer(timings, "trajectory"):
        trajectories = [mission.generate_trajectory(p, cfg.v_d, cfg.t_s) for p in plans]
    log.info("planned %d agent(s), %d waypoints, duration %.1f s",
             len(plans), sum(len(p.coverage_waypoints) for p in plans),
             max(len(t) - 1 for t in trajectories) * cfg.t_s)
    return MissionResult(cfg, slices, loopsets, offsets, plans, trajectories, timings)


def all_offset_waypoints(result: MissionResult) -> np.ndarray:
    return np.array([w.position for w in result.waypoints]).reshape(-1, 3)
