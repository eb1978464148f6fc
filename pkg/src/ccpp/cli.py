"""Command-line entry point: plan, verify, inspect-model, fixture."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, fixtures, kernels, verify
from .config import PlannerConfig, format_config, load_config
from .errors import CCPPError, IOFailure, ValidationError
from .model_io import load_model
from .offset_path import dump_offset_loop
from .pipeline import build_loops, plan_mission
from .slicer import dump_slices, slice_model
from .topology import detect_loops, dump_loops
from .trajectory_io import load_trajectory_dir, write_branches, write_trajectory

log = logging.getLogger("ccpp")

EXIT_OK = 0
EXIT_VIOLATIONS = 4
EXIT_IO = 5
DEFAULT_MESH_PITCH = 0.1


def _setup_logging() -> None:
    level = os.environ.get("CCPP_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _digest(path: Path) -> str:
    h = hashlib.sha256()
    try:
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 16), b""):
                h.update(chunk)
    except OSError as exc:
        raise IOFailure(f"{path}: {exc.strerror}") from exc
    return h.hexdigest()


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def _write_json(path: Path, data) -> None:
    try:
        path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n")
    except OSError as exc:
        raise IOFailure(f"{path}: {exc.strerror}") from exc


def _ensure_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IOFailure(f"{path}: {exc.strerror}") from exc
    return path


def _config_with_overrides(args) -> PlannerConfig:
    cfg = load_config(args.config)
    if getattr(args, "agents", None) is not None:
        cfg = cfg.with_agents(args.agents)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


# --- subcommands ---------------------------------------------------------------


def cmd_plan(args) -> int:
    t0 = time.perf_counter()
    cfg = _config_with_overrides(args)
    timings = {}
    t = time.perf_counter()
    model = load_model(args.model, cfg.sample_pitch)
    timings["load"] = round((time.perf_counter() - t) * 1000.0, 3)
    result = plan_mission(model, cfg, schedule_mode=args.schedule, strict=args.strict)
    timings.update(result.timings_ms)

    out = _ensure_dir(Path(args.out))
    t = time.perf_counter()
    files = []
    for tr in result.trajectories:
        files.append(write_trajectory(tr, out).name)
        files.append(write_branches(tr, out).name)
    summary = result.summary()
    summary["config"] = cfg.as_dict()
    _write_json(out / "mission.json", summary)
    if args.dump_debug:
        dbg = _ensure_dir(out / "debug")
        dump_slices(result.slices, dbg / "slices")
        for ls in result.loopsets:
            dump_loops(ls, dbg / "loops")
        for loops in result.offset_loops:
            for ol in loops:
                dump_offset_loop(ol, dbg / "offsets")
    timings["write"] = round((time.perf_counter() - t) * 1000.0, 3)
    timings["total"] = round((time.perf_counter() - t0) * 1000.0, 3)

    manifest = {
        "tool": "ccpp",
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "seed": cfg.seed,
        "config": cfg.as_dict(),
        "inputs": {
            "model": {"path": str(args.model), "sha256": _digest(Path(args.model))},
            "config": {"path": str(args.config), "sha256": _digest(Path(args.config))},
        },
        "overrides": {"agents": args.agents, "seed": args.seed, "schedule": args.schedule},
        "outputs": {name: _digest(out / name) for name in sorted(files + ["mission.json"])},
        "timings_ms": timings,
    }
    _write_json(out / "manifest.json", manifest)
    print(f"planned {len(result.trajectories)} agent(s): mission duration {summary['mission_duration_s']:g} s, "
          f"{summary['total_waypoints']} waypoints ({summary['flagged_waypoints']} flagged) -> {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    model = load_model(args.model, cfg.sample_pitch)
    trajectories = load_trajectory_dir(args.trajectories)
    report = verify.verify_mission(
        model, trajectories, cfg.alpha, cfg.r_max, cfg.d_s, cfg.t_s,
        occlusion_radius=cfg.sample_pitch,
        clearance_threshold=args.clearance,
        tilt=math.radians(args.tilt_deg),
    )
    data = report.as_dict()
    data["clearance_threshold"] = cfg.d_s if args.clearance is None else args.clearance
    rates = {str(t.agent_id): verify.yaw_reversal_rate(t) for t in trajectories}
    data["yaw_reversals_per_min"] = rates
    text = json.dumps(data, indent=2, sort_keys=True, default=_json_default)
    print(text)
    if args.out:
        out = _ensure_dir(Path(args.out))
        _write_json(out / "report.json", data)
        verify.export_plot_data(report, trajectories, out)
    if report.violations:
        print(f"error [verify]: {len(report.violations)} violation(s) "
              f"({', '.join(f'{k}={v}' for k, v in sorted(data['violations_by_kind'].items()))})",
              file=sys.stderr)
        return EXIT_VIOLATIONS
    return EXIT_OK


def cmd_inspect_model(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        dl, d_min, seed, pitch = cfg.delta_lambda, cfg.d_min, cfg.seed, cfg.sample_pitch
    else:
        if args.delta_lambda is None or args.d_min is None:
            raise ValidationError("inspect-model needs --config or both --delta-lambda and --d-min")
        dl, d_min, seed = args.delta_lambda, args.d_min, args.seed or 0
        pitch = args.sample_pitch
        if not (dl > 0 and d_min > 0 and pitch > 0):
            raise ValidationError("--delta-lambda, --d-min and --sample-pitch must be > 0")
    model = load_model(args.model, pitch)
    b = model.bounds
    print(f"points: {len(model)}")
    print(f"bounds min: {b.min[0]:.6g} {b.min[1]:.6g} {b.min[2]:.6g}")
    print(f"bounds max: {b.max[0]:.6g} {b.max[1]:.6g} {b.max[2]:.6g}")
    if model.degenerate_faces:
        print(f"degenerate faces skipped: {model.degenerate_faces}")
    print(f"delta_lambda: {dl:.6g}")
    slices = slice_model(model, dl)
    for s in slices:
        k = detect_loops(s, d_min, seed).k
        print(f"slice {s.index} lambda {s.lam:.6f} points {len(s)} k {k}")
    return EXIT_OK


def _parse_dims(items) -> dict:
    dims = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise ValidationError(f"--dim expects key=value, got {item!r}")
        try:
            dims[key.strip()] = float(val)
        except ValueError:
            raise ValidationError(f"--dim {key}: cannot parse {val!r}") from None
    return dims


def cmd_fixture(args) -> int:
    spec = fixtures.preset(args.name)
    overrides = {"dims": _parse_dims(args.dim)}
    if args.pitch is not None:
        overrides["sample_pitch"] = args.pitch
    spec = fixtures.preset(args.name, **overrides)
    path = fixtures.export(spec, args.out)
    print(f"wrote {spec.kind} fixture to {path}")
    return EXIT_OK


def cmd_config(args) -> int:
    """Print a starting configuration for a fixture family."""
    presets = {
        "outdoor": PlannerConfig(alpha=math.radians(60), r_max=3.0, omega=0.6, d_min=0.2, d_s=0.5,
                                 n_agents=1, v_d=0.5, t_s=1.0, sample_pitch=0.1),
        "cylinder": PlannerConfig(alpha=math.radians(60), r_max=3.0, omega=0.5, d_min=0.2, d_s=0.4,
                                  n_agents=2, v_d=0.5, t_s=1.0, sample_pitch=0.1),
        "indoor": PlannerConfig(alpha=math.radians(60), r_max=1.5, omega=0.2, d_min=0.1, d_s=0.3,
                                n_agents=2, v_d=0.2, t_s=1.0, sample_pitch=0.05),
    }
    sys.stdout.write(format_config(presets[args.preset]))
    return EXIT_OK


# --- argument parsing -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ccpp", description="Cooperative coverage path planning for structure inspection.")
    p.add_argument("--version", action="version", version=f"ccpp {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("plan", help="plan a mission and write trajectories")
    sp.add_argument("--model", required=True, help="point set (.xyz/.txt/.csv) or ASCII mesh (.stl/.obj)")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--agents", type=int, help="override n_agents")
    sp.add_argument("--seed", type=int, help="override seed")
    sp.add_argument("--dump-debug", action="store_true", help="also write slices, loops and offset loops")
    sp.add_argument("--schedule", choices=("phase", "greedy"), default="phase")
    sp.add_argument("--strict", action="store_true", help="fail when a slice has more branches than agents")
    sp.set_defaults(func=cmd_plan)

    sv = sub.add_parser("verify", help="verify previously planned trajectories")
    sv.add_argument("--model", required=True)
    sv.add_argument("--trajectories", required=True, help="directory with trajectory_<id>.csv files")
    sv.add_argument("--config", required=True)
    sv.add_argument("--out", help="directory for report.json and plot data")
    sv.add_argument("--clearance", type=float, help="structure clearance threshold (default d_s)")
    sv.add_argument("--tilt-deg", type=float, default=0.0, help="camera tilt below horizontal")
    sv.set_defaults(func=cmd_verify)

    si = sub.add_parser("inspect-model", help="bounds and per-slice loop counts")
    si.add_argument("--model", required=True)
    si.add_argument("--config")
    si.add_argument("--delta-lambda", type=float)
    si.add_argument("--d-min", type=float)
    si.add_argument("--sample-pitch", type=float, default=DEFAULT_MESH_PITCH)
    si.add_argument("--seed", type=int)
    si.set_defaults(func=cmd_inspect_model)

    sf = sub.add_parser("fixture", help="export an analytic test structure as a point set")
    sf.add_argument("name", choices=sorted(fixtures.PRESETS))
    sf.add_argument("--out", required=True, help="output point-set file")
    sf.add_argument("--pitch", type=float, help="surface sample pitch")
    sf.add_argument("--dim", action="append", metavar="KEY=VALUE", help="override a dimension")
    sf.set_defaults(func=cmd_fixture)

    sc = sub.add_parser("config", help="print a starting configuration")
    sc.add_argument("preset", choices=("outdoor", "cylinder", "indoor"))
    sc.set_defaults(func=cmd_config)
    return p


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CCPPError as exc:
        print(f"error [{exc.stage}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error [io]: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error [input]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
