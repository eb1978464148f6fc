"""Agent assignment, deconflicted sequencing, branch transfers and trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import AssignmentError, SchedulingInfeasibleError, TransferInfeasibleError
from .offset_path import OffsetLoop, Waypoint, wrap_angle

MAX_PUSH_ITERATIONS = 100
PUSH_FRACTION = 0.1  # push increment as a fraction of omega

COVERAGE = "coverage"
TRANSFER = "transfer"


@dataclass
class Task:
    """One agent's share of one loop at one slice."""

    slice_index: int
    loop_id: int
    track: int
    rank: int
    sharers: int
    direction: int
    center: np.ndarray
    waypoints: list[Waypoint]


@dataclass
class Segment:
    kind: str
    waypoints: list[Waypoint] = field(default_factory=list)
    points: np.ndarray | None = None  # transfer polyline, endpoints included

    def positions(self) -> np.ndarray:
        if self.kind == COVERAGE:
            return np.array([w.position for w in self.waypoints]).reshape(-1, 3)
        return self.points


@dataclass
class AgentPlan:
    agent_id: int
    tasks: list[Task] = field(default_factory=list)
    segments: list[Segment] = field(default_factory=list)

    @property
    def coverage_waypoints(self) -> list[Waypoint]:
        if self.segments:
            return [w for s in self.segments if s.kind == COVERAGE for w in s.waypoints]
        return [w for t in self.tasks for w in t.waypoints]

    @property
    def total_path_length(self) -> float:
        pts = polyline(self)
        if len(pts) < 2:
            return 0.0
        return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())


def polyline(plan: AgentPlan) -> np.ndarray:
    """All positions the agent passes through, consecutive duplicates removed."""
    if plan.segments:
        chunks = [s.positions() for s in plan.segments]
    else:
        chunks = [np.array([w.position for w in t.waypoints]).reshape(-1, 3) for t in plan.tasks]
    chunks = [c for c in chunks if len(c)]
    if not chunks:
        return np.empty((0, 3))
    pts = np.vstack(chunks)
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
    return pts[keep]


# --- branch tracking ----------------------------------------------------------


def track_branches(loops_by_slice: Sequence[Sequence[OffsetLoop]]) -> list[list[OffsetLoop]]:
    """Label loops with branch track ids, matching centers between slices.

    Greedy nearest-center matching against the previous non-empty slice;
    unmatched loops open new tracks.
    """
    out = []
    prev: list[OffsetLoop] = []
    next_track = 0
    for loops in loops_by_slice:
        loops = list(loops)
        labelled: list[OffsetLoop | None] = [None] * len(loops)
        if prev and loops:
            d = np.array([[math.dist(a.center, b.center) for b in prev] for a in loops])
            used_prev, used_cur = set(), set()
            for flat in np.argsort(d, axis=None, kind="stable"):
                i, j = divmod(int(flat), len(prev))
                if i in used_cur or j in used_prev:
                    continue
                labelled[i] = replace(loops[i], track=prev[j].track)
                used_cur.add(i)
                used_prev.add(j)
        for i, lp in enumerate(loops):
            if labelled[i] is None:
                labelled[i] = replace(lp, track=next_track)
                next_track += 1
            else:
                next_track = max(next_track, labelled[i].track + 1)
        out.append(labelled)
        if labelled:
            prev = labelled
    return out


# --- assignment -----------------------------------------------------------------


def apportion(n_agents: int, weights: Sequence[float]) -> list[int]:
    """Split ``n_agents`` over branches, one each plus largest-remainder extras."""
    m = len(weights)
    if n_agents < m:
        raise AssignmentError(f"{n_agents} agents cannot cover {m} branches one each")
    extra = n_agents - m
    w = np.asarray(weights, dtype=float)
    w = np.ones(m) if w.sum() <= 0 else w
    quota = extra * w / w.sum()
    counts = np.floor(quota).astype(int)
    rest = extra - int(counts.sum())
    frac = quota - counts
    for i in sorted(range(m), key=lambda i: (-frac[i], i))[:rest]:
        counts[i] += 1
    return [int(c) + 1 for c in counts]


def _sweep(waypoints: list[Waypoint], direction: int) -> list[Waypoint]:
    return list(waypoints) if direction > 0 else list(reversed(waypoints))


def _rotate_to(waypoints: list[Waypoint], pos, direction: int) -> list[Waypoint]:
    seq = _sweep(waypoints, direction)
    if pos is None or not seq:
        return seq
    d = [math.dist(w.position[:2], pos) for w in seq]
    k = int(np.argmin(d))
    return seq[k:] + seq[:k]


def sector_sizes(n_points: int, clocks: Sequence[float]) -> list[int]:
    """Equal waypoint counts; the remainder goes to the agents with the least work so far."""
    c = len(clocks)
    base, extra = divmod(n_points, c)
    sizes = [base] * c
    for r in sorted(range(c), key=lambda r: (clocks[r], r))[:extra]:
        sizes[r] += 1
    return sizes


def _split_sectors(waypoints: list[Waypoint], sizes: Sequence[int]) -> list[list[Waypoint]]:
    edges = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    return [waypoints[edges[r]:edges[r + 1]] for r in range(len(sizes))]


def _path_length(start, wps: list[Waypoint]) -> float:
    pts = [w.position for w in wps]
    if start is not None:
        pts = [start] + pts
    if len(pts) < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(np.array(pts), axis=0), axis=1).sum())


def _dist_or_zero(pos, center) -> float:
    return 0.0 if pos is None else math.dist(pos, center)


def _distribute(loops, counts, agents, prev_tracks, pos):
    slots = list(counts)
    groups: list[list[int]] = [[] for _ in loops]
    free = list(agents)
    for li, lp in enumerate(loops):
        for a in list(free):
            if slots[li] and lp.track in prev_tracks[a]:
                groups[li].append(a)
                slots[li] -= 1
                free.remove(a)
    for a in free:
        open_ = [li for li in range(len(loops)) if slots[li]]
        li = min(open_, key=lambda i: (_dist_or_zero(pos[a], loops[i].center), i))
        groups[li].append(a)
        slots[li] -= 1
    return [sorted(g) for g in groups]


def _bundle(loops, n_agents, prev_tracks, pos):
    owned: list[list[int]] = [[] for _ in range(n_agents)]
    load = [0.0] * n_agents
    unclaimed = list(range(len(loops)))
    for a in range(n_agents):
        mine = [li for li in unclaimed if loops[li].track in prev_tracks[a]]
        if mine:
            li = min(mine, key=lambda i: (-loops[i].perimeter, i))
            owned[a].append(li)
            load[a] += loops[li].perimeter
            unclaimed.remove(li)
    for li in sorted(unclaimed, key=lambda i: (-loops[i].perimeter, i)):
        idle = [a for a in range(n_agents) if not owned[a]]
        pool = idle or range(n_agents)
        a = min(pool, key=lambda a: (load[a], _dist_or_zero(pos[a], loops[li].center), a))
        owned[a].append(li)
        load[a] += loops[li].perimeter
    return owned


def assign_agents(
    loops_by_slice: Sequence[Sequence[OffsetLoop]],
    n_agents: int,
    strict: bool = False,
) -> list[AgentPlan]:
    """Give every agent an ordered list of tasks, slice by slice, bottom-up.

    Per slice with m loops:

    * m == 1: the loop is cut into ``n`` contiguous angular sectors of equal
      waypoint count (start angles 2*pi/n apart), one per agent.
    * 1 < m <= n: agents spread over loops by largest-remainder apportionment
      of loop perimeter; agents stay on the branch they were on.
    * m > n: agents take several loops each, balanced by perimeter. With
      ``strict=True`` this raises instead.

    Sweep direction alternates with slice parity so an agent ends one slice
    where it starts the next.
    """
    if n_agents < 1:
        raise AssignmentError("n_agents must be >= 1")
    tracked = track_branches(loops_by_slice)
    plans = [AgentPlan(a) for a in range(n_agents)]
    prev_tracks: list[set] = [set() for _ in range(n_agents)]
    pos: list = [None] * n_agents
    last3d: list = [None] * n_agents
    clock = [0.0] * n_agents  # path length flown so far, used to even out remainders
    agents = list(range(n_agents))

    def record(a, task):
        plans[a].tasks.append(task)
        new_tracks[a].add(task.track)
        if task.waypoints:
            clock[a] += _path_length(last3d[a], task.waypoints)
            last3d[a] = task.waypoints[-1].position
            pos[a] = last3d[a][:2]

    for loops in tracked:
        loops = [lp for lp in loops if lp.waypoints]
        if not loops:
            continue
        sidx = loops[0].slice_index
        direction = 1 if sidx % 2 == 0 else -1
        m = len(loops)
        new_tracks: list[set] = [set() for _ in range(n_agents)]
        if m <= n_agents:
            counts = [n_agents] if m == 1 else apportion(n_agents, [lp.perimeter for lp in loops])
            groups = _distribute(loops, counts, agents, prev_tracks, pos)
            for lp, group in zip(loops, groups):
                c = len(group)
                if c == 1:
                    a = group[0]
                    seq = _rotate_to(lp.waypoints, pos[a], direction)
                    sectors = [seq]
                else:
                    sizes = sector_sizes(len(lp.waypoints), [clock[a] for a in group])
                    sectors = [_sweep(s, direction) for s in _split_sectors(lp.waypoints, sizes)]
                for rank, (a, wps) in enumerate(zip(group, sectors)):
                    record(a, Task(sidx, lp.loop_id, lp.track, rank, c, direction, lp.center, wps))
        else:
            if strict:
                raise AssignmentError(f"slice {sidx}: {n_agents} agent(s) for {m} branches")
            owned = _bundle(loops, n_agents, prev_tracks, pos)
            for a in agents:
                todo = list(owned[a])
                while todo:
                    li = min(todo, key=lambda i: (_dist_or_zero(pos[a], loops[i].center), i))
                    todo.remove(li)
                    lp = loops[li]
                    wps = _rotate_to(lp.waypoints, pos[a], direction)
                    record(a, Task(sidx, lp.loop_id, lp.track, 0, 1, direction, lp.center, wps))
        prev_tracks = new_tracks
    return plans


# --- deconfliction --------------------------------------------------------------


def planar_distance(a: Waypoint, b: Waypoint) -> float:
    return math.hypot(a.position[0] - b.position[0], a.position[1] - b.position[1])


def max_distance_pick(remaining: Sequence[Waypoint], ref: Waypoint, placed: Sequence[Waypoint], d_s: float):
    """Exhaustive search for the waypoint farthest from ``ref`` with D > d_s.

    Every already-placed waypoint of this step must also be farther than
    ``d_s``. Ties go to the smallest radial angle. Returns None if nothing
    qualifies.
    """
    best = None
    best_key = None
    for w in remaining:
        if any(planar_distance(w, p) <= d_s for p in placed):
            continue
        d = planar_distance(w, ref)
        if d <= d_s:
            continue
        key = (-d, w.radial_angle)
        if best_key is None or key < best_key:
            best, best_key = w, key
    return best


def schedule_group(tasks: Sequence[Task], d_s: float, mode: str = "phase") -> list[list[Waypoint]]:
    """Lockstep order for the agents sharing one loop, by rank.

    The lowest rank follows its sweep. Each following rank picks, per step,
    relative to the rank before it. In ``"phase"`` mode the nominal pick is
    the next sweep waypoint, falling back to the max-distance search when
    that waypoint is within ``d_s`` of an agent already placed this step.
    In ``"greedy"`` mode every pick is the max-distance search.
    """
    if mode not in ("phase", "greedy"):
        raise ValueError(f"unknown schedule mode {mode!r}")
    tasks = sorted(tasks, key=lambda t: t.rank)
    remaining = [list(t.waypoints) for t in tasks]
    order: list[list[Waypoint]] = [[] for _ in tasks]
    current: list[Waypoint | None] = [None] * len(tasks)
    step = 0
    while any(remaining):
        placed: list[Waypoint] = []
        for r, rem in enumerate(remaining):
            if not rem:
                continue
            ref = current[r - 1] if r > 0 else None
            if ref is None:
                pick = rem[0]
            else:
                pick = None
                if mode == "phase" and all(planar_distance(rem[0], p) > d_s for p in placed):
                    pick = rem[0]
                if pick is None:
                    pick = max_distance_pick(rem, ref, placed, d_s)
                if pick is None:
                    raise SchedulingInfeasibleError(
                        f"slice {tasks[r].slice_index} loop {tasks[r].loop_id}: step {step}: no waypoint "
                        f"for rank {r} farther than d_s={d_s:g} from the other agents",
                        step=step,
                        agents=(r - 1, r),
                    )
            # by identity: Waypoint equality would compare arrays
            del rem[next(i for i, w in enumerate(rem) if w is pick)]
            order[r].append(pick)
            current[r] = pick
            placed.append(pick)
        step += 1
    return order


def schedule_deconflicted(plans: list[AgentPlan], d_s: float, mode: str = "phase") -> list[AgentPlan]:
    groups: dict[tuple[int, int], list[Task]] = {}
    for plan in plans:
        for t in plan.tasks:
            groups.setdefault((t.slice_index, t.loop_id), []).append(t)
    new_wps: dict[int, list[Waypoint]] = {}
    for key in sorted(groups):
        tasks = groups[key]
        if len(tasks) < 2:
            continue
        ordered = sorted(tasks, key=lambda t: t.rank)
        for t, wps in zip(ordered, schedule_group(ordered, d_s, mode)):
            new_wps[id(t)] = wps
    out = []
    for plan in plans:
        tasks = [replace(t, waypoints=new_wps.get(id(t), list(t.waypoints))) for t in plan.tasks]
        out.append(AgentPlan(plan.agent_id, tasks))
    return out


def sync_steps(plans: Sequence[AgentPlan]):
    """Yield (slice, loop, [waypoint per rank or None]) for every lockstep step."""
    groups: dict[tuple[int, int], list[Task]] = {}
    for plan in plans:
        for t in plan.tasks:
            groups.setdefault((t.slice_index, t.loop_id), []).append(t)
    for key in sorted(groups):
        tasks = sorted(groups[key], key=lambda t: t.rank)
        n = max(len(t.waypoints) for t in tasks)
        for i in range(n):
            yield key[0], key[1], [t.waypoints[i] if i < len(t.waypoints) else None for t in tasks]


# --- transfers ------------------------------------------------------------------


def build_transfer(frm, to, model_points, d_s: float, loop_center, pitch: float, omega: float,
                   tree: cKDTree | None = None,
                   max_push_iterations: int = MAX_PUSH_ITERATIONS) -> np.ndarray:
    """Straight line ``frm -> to`` sampled at ``pitch``, repaired for clearance.

    Interior samples closer than ``d_s`` to the model are pushed radially
    away from ``loop_center`` (or the nearest of several centers) in steps
    of ``0.1 * omega``. Endpoints are kept as given.
    """
    frm = np.asarray(frm, dtype=float)
    to = np.asarray(to, dtype=float)
    length = float(np.linalg.norm(to - frm))
    if length == 0.0:
        return frm[None, :].copy()
    if tree is None:
        tree = cKDTree(np.asarray(model_points, dtype=float))
    centers = np.atleast_2d(np.asarray(loop_center, dtype=float))[:, :2]
    n = max(1, math.ceil(length / pitch - 1e-12))
    t = np.linspace(0.0, 1.0, n + 1)
    pts = frm + t[:, None] * (to - frm)
    step = PUSH_FRACTION * omega
    for i in range(1, n):
        p = pts[i]
        for it in range(max_push_iterations + 1):
            if tree.query(p)[0] >= d_s:
                break
            if it == max_push_iterations:
                raise TransferInfeasibleError(
                    f"transfer sample {i} still within d_s={d_s:g} of the structure after "
                    f"{max_push_iterations} pushes"
                )
            c = centers[np.argmin(np.linalg.norm(centers - p[:2], axis=1))]
            v = p[:2] - c
            norm = float(np.hypot(v[0], v[1]))
            v = np.array([1.0, 0.0]) if norm == 0.0 else v / norm
            p[:2] = p[:2] + step * v
    return pts


def attach_transfers(plans: list[AgentPlan], model_points, d_s: float, pitch: float, omega: float) -> list[AgentPlan]:
    """Turn task lists into coverage/transfer segment lists."""
    tree = cKDTree(np.asarray(model_points, dtype=float))
    out = []
    for plan in plans:
        segs: list[Segment] = []
        last: Waypoint | None = None
        last_center = None
        for task in plan.tasks:
            if not task.waypoints:
                continue
            first = task.waypoints[0]
            if last is not None and np.any(last.position != first.position):
                centers = np.vstack([task.center, last_center])
                pts = build_transfer(last.position, first.position, None, d_s, centers, pitch, omega, tree=tree)
                segs.append(Segment(TRANSFER, points=pts))
            segs.append(Segment(COVERAGE, waypoints=list(task.waypoints)))
            last = task.waypoints[-1]
            last_center = task.center
        out.append(AgentPlan(plan.agent_id, plan.tasks, segs))
    return out


# --- trajectories ---------------------------------------------------------------


@dataclass
class Trajectory:
    agent_id: int
    t: np.ndarray
    position: np.ndarray
    velocity: np.ndarray
    yaw: np.ndarray
    node: np.ndarray  # True where a sample sits on a polyline node
    branch: list | None = None  # per-sample (slice, loop) or None on transfers

    def __len__(self):
        return len(self.t)

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0]) if len(self.t) else 0.0


def _nodes(plan: AgentPlan):
    """(positions, yaws, labels) along the plan; transfer yaws interpolated."""
    pos, yaw, lab = [], [], []
    for seg in plan.segments:
        if seg.kind == COVERAGE:
            for w in seg.waypoints:
                pos.append(w.position)
                yaw.append(w.yaw)
                lab.append((w.slice_index, w.loop_id))
        else:
            for p in seg.points[1:-1]:
                pos.append(p)
                yaw.append(None)
                lab.append(None)
    pos = np.array(pos, dtype=float).reshape(-1, 3)
    # fill transfer yaws along the shortest arc, by arc length
    i = 0
    n = len(yaw)
    while i < n:
        if yaw[i] is not None:
            i += 1
            continue
        j = i
        while j < n and yaw[j] is None:
            j += 1
        y0 = yaw[i - 1] if i > 0 else (yaw[j] if j < n else 0.0)
        y1 = yaw[j] if j < n else y0
        a = i - 1 if i > 0 else i
        b = j if j < n else j - 1
        seg = pos[a:b + 1]
        cum = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(seg, axis=0), axis=1))])
        total = cum[-1]
        dy = wrap_angle(y1 - y0)
        for k in range(i, j):
            f = cum[k - a] / total if total > 0 else 0.0
            yaw[k] = wrap_angle(y0 + dy * f)
        i = j
    return pos, np.array(yaw, dtype=float), lab


def generate_trajectory(plan: AgentPlan, v_d: float, t_s: float) -> Trajectory:
    """Sample the plan at arc-length step ``h = t_s * v_d``.

    Inside each polyline segment samples are exactly ``h`` apart; the last
    step of a segment may be shorter. Yaw follows the shortest arc.
    """
    if v_d <= 0 or t_s <= 0:
        raise ValueError("v_d and t_s must be > 0")
    h = v_d * t_s
    pos, yaw, lab = _nodes(plan)
    keep = np.ones(len(pos), dtype=bool)
    keep[1:] = np.any(pos[1:] != pos[:-1], axis=1)
    pos, yaw = pos[keep], yaw[keep]
    lab = [l for l, k in zip(lab, keep) if k]
    if len(pos) < 2:
        raise ValueError(f"agent {plan.agent_id}: plan needs at least 2 distinct points")
    P, V, Y, N, B = [], [], [], [], []
    for i in range(len(pos) - 1):
        a, b = pos[i], pos[i + 1]
        delta = b - a
        length = float(np.linalg.norm(delta))
        d = delta / length
        k = max(1, math.ceil(length / h - 1e-9))
        dy = wrap_angle(yaw[i + 1] - yaw[i])
        label = lab[i] if lab[i] is not None and lab[i] == lab[i + 1] else None
        for j in range(k):
            s = j * h
            P.append(a + s * d)
            V.append(v_d * d)
            Y.append(wrap_angle(yaw[i] + dy * s / length))
            N.append(j == 0)
            B.append(label)
    P.append(pos[-1])
    V.append(np.zeros(3))
    Y.append(wrap_angle(yaw[-1]))
    N.append(True)
    B.append(lab[-1])
    n = len(P)
    return Trajectory(
        agent_id=plan.agent_id,
        t=np.arange(n, dtype=float) * t_s,
        position=np.array(P),
        velocity=np.array(V),
        yaw=np.array(Y, dtype=float),
        node=np.array(N, dtype=bool),
        branch=B,
    )


def mission_duration(trajectories: Sequence[Trajectory], t_s: float | None = None):
    """Per-agent durations ``(samples - 1) * t_s`` and their maximum."""
    if not trajectories:
        raise ValueError("no trajectories")
    per_agent = {}
    for tr in trajectories:
        if t_s is None:
            per_agent[tr.agent_id] = tr.duration
        else:
            per_agent[tr.agent_id] = (len(tr) - 1) * t_s
    return per_agent, max(per_agent.values())
