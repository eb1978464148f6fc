"""Trajectory CSV files: ``t,x,y,z,vx,vy,vz,yaw`` with 9 significant digits."""

from __future__ import annotations

import math
import re
from pathlib import Path

import numpy as np

from .errors import IOFailure, TrajectoryParseError as ParseError
from .mission import Trajectory

HEADER = "t,x,y,z,vx,vy,vz,yaw"
_NAME = re.compile(r"^trajectory_(\d+)\.csv$")
BRANCH_HEADER = "# slice loop (- on transfers), one row per trajectory sample"


def format_trajectory(tr: Trajectory) -> str:
    rows = [HEADER]
    data = np.column_stack([tr.t, tr.position, tr.velocity, tr.yaw])
    for r in data:
        rows.append(",".join("%.9g" % (0.0 if v == 0 else v) for v in r))
    return "\n".join(rows) + "\n"


def write_trajectory(tr: Trajectory, out_dir) -> Path:
    p = Path(out_dir) / f"trajectory_{tr.agent_id}.csv"
    try:
        p.write_text(format_trajectory(tr))
    except OSError as exc:
        raise IOFailure(f"{p}: {exc.strerror}") from exc
    return p


def format_branches(tr: Trajectory) -> str:
    rows = [BRANCH_HEADER]
    rows.extend("-" if b is None else f"{b[0]} {b[1]}" for b in tr.branch or [])
    return "\n".join(rows) + "\n"


def write_branches(tr: Trajectory, out_dir) -> Path:
    """Sidecar with each sample's (slice, loop) label, so verification can
    tell synchronized steps from transfers."""
    p = Path(out_dir) / f"branch_{tr.agent_id}.txt"
    try:
        p.write_text(format_branches(tr))
    except OSError as exc:
        raise IOFailure(f"{p}: {exc.strerror}") from exc
    return p


def parse_branches(text: str, n_samples: int, path=None) -> list:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line == "-":
            out.append(None)
            continue
        parts = line.split()
        try:
            if len(parts) != 2:
                raise ValueError
            out.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise ParseError(f"expected 'slice loop' or '-', got {line!r}", path, lineno) from None
    if len(out) != n_samples:
        raise ParseError(f"{len(out)} branch labels for {n_samples} samples", path)
    return out


def parse_trajectory(text: str, agent_id: int = 0, path=None) -> Trajectory:
    lines = text.splitlines()
    if not lines or lines[0].strip().replace(" ", "") != HEADER:
        raise ParseError(f"expected header '{HEADER}'", path, 1)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 8:
            raise ParseError(f"expected 8 comma-separated values, got {len(parts)}", path, lineno)
        try:
            vals = [float(v) for v in parts]
        except ValueError:
            raise ParseError(f"non-numeric value in {line.strip()!r}", path, lineno) from None
        if not all(math.isfinite(v) for v in vals):
            raise ParseError("non-finite value", path, lineno)
        rows.append(vals)
    if not rows:
        raise ParseError("trajectory has no samples", path, len(lines))
    a = np.array(rows)
    return Trajectory(
        agent_id=agent_id,
        t=a[:, 0],
        position=a[:, 1:4],
        velocity=a[:, 4:7],
        yaw=a[:, 7],
        node=np.zeros(len(a), dtype=bool),
        branch=None,
    )


def load_trajectory(path, agent_id: int | None = None) -> Trajectory:
    path = Path(path)
    if agent_id is None:
        m = _NAME.match(path.name)
        agent_id = int(m.group(1)) if m else 0
    try:
        text = path.read_text()
    except OSError as exc:
        raise IOFailure(f"{path}: {exc.strerror}") from exc
    return parse_trajectory(text, agent_id, path)


def load_trajectory_dir(directory) -> list[Trajectory]:
    directory = Path(directory)
    if not directory.is_dir():
        raise IOFailure(f"{directory}: not a directory")
    files = sorted(
        (p for p in directory.iterdir() if _NAME.match(p.name)),
        key=lambda p: int(_NAME.match(p.name).group(1)),
    )
    if not files:
        raise IOFailure(f"{directory}: no trajectory_<id>.csv files")
    out = []
    for p in files:
        tr = load_trajectory(p)
        side = directory / f"branch_{tr.agent_id}.txt"
        if side.exists():
            try:
                text = side.read_text()
            except OSError as exc:
                raise IOFailure(f"{side}: {exc.strerror}") from exc
            tr.branch = parse_branches(text, len(tr), side)
        out.append(tr)
    return out
