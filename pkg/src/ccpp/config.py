"""Planner configuration: parsing and validation of ``key = value`` files."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from .errors import IOFailure, ParseError, ValidationError

REQUIRED_KEYS = ("alpha_deg", "r_max", "omega", "d_min", "d_s", "n_agents", "v_d", "t_s")
OPTIONAL_KEYS = ("sample_pitch", "seed")
ALL_KEYS = REQUIRED_KEYS + OPTIONAL_KEYS
_INT_KEYS = {"n_agents", "seed"}


@dataclass(frozen=True)
class PlannerConfig:
    alpha: float  # full aperture angle, radians
    r_max: float
    omega: float
    d_min: float
    d_s: float
    n_agents: int
    v_d: float
    t_s: float
    sample_pitch: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.sample_pitch is None:
            object.__setattr__(self, "sample_pitch", self.d_min / 2.0)
        validate(self)

    @property
    def delta_lambda(self) -> float:
        """Vertical spacing between slicing planes, (omega / 2) * tan(alpha)."""
        return 0.5 * self.omega * math.tan(self.alpha)

    @property
    def step(self) -> float:
        """Trajectory step length h = t_s * v_d."""
        return self.t_s * self.v_d

    @property
    def merge_pitch(self) -> float:
        return self.d_min / 4.0

    def with_agents(self, n_agents: int) -> "PlannerConfig":
        return replace(self, n_agents=n_agents)

    def with_seed(self, seed: int) -> "PlannerConfig":
        return replace(self, seed=seed)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["alpha_deg"] = math.degrees(d.pop("alpha"))
        d["delta_lambda"] = self.delta_lambda
        d["step"] = self.step
        return d


def _finite(name, value):
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")


def validate(cfg: PlannerConfig) -> None:
    for name in ("alpha", "r_max", "omega", "d_min", "d_s", "v_d", "t_s", "sample_pitch"):
        _finite(name, getattr(cfg, name))
    if not 0.0 < cfg.alpha < math.pi:
        raise ValidationError("alpha must be in (0, 180) degrees")
    if cfg.omega <= 0.0:
        raise ValidationError("omega must be > 0")
    if cfg.r_max <= 0.0:
        raise ValidationError("r_max must be > 0")
    if cfg.omega >= cfg.r_max:
        raise ValidationError("omega must be < r_max")
    for name in ("d_min", "d_s", "v_d", "t_s", "sample_pitch"):
        if getattr(cfg, name) <= 0.0:
            raise ValidationError(f"{name} must be > 0")
    if isinstance(cfg.n_agents, bool) or not isinstance(cfg.n_agents, int) or cfg.n_agents < 1:
        raise ValidationError("n_agents must be an integer >= 1")
    if isinstance(cfg.seed, bool) or not isinstance(cfg.seed, int):
        raise ValidationError("seed must be an integer")
    dl = cfg.delta_lambda
    if not (math.isfinite(dl) and dl > 0.0):
        raise ValidationError(f"delta_lambda must be finite and positive, got {dl!r}")


def parse_config(text: str, path=None) -> PlannerConfig:
    values: dict[str, float | int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", path, lineno)
        key, _, val = (s.strip() for s in line.partition("="))
        if key not in ALL_KEYS:
            raise ValidationError(f"unknown config key {key!r} (line {lineno})")
        if key in values:
            raise ValidationError(f"duplicate config key {key!r} (line {lineno})")
        try:
            if key in _INT_KEYS:
                values[key] = int(val)
            else:
                values[key] = float(val)
        except ValueError:
            raise ValidationError(f"{key}: cannot parse {val!r} (line {lineno})") from None
    missing = [k for k in REQUIRED_KEYS if k not in values]
    if missing:
        raise ValidationError(f"missing config key(s): {', '.join(missing)}")
    alpha_deg = values.pop("alpha_deg")
    return PlannerConfig(alpha=math.radians(alpha_deg), **values)


def load_config(path) -> PlannerConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IOFailure(f"{path}: cannot read config: {exc.strerror}") from exc
    return parse_config(text, path)


def format_config(cfg: PlannerConfig) -> str:
    lines = [
        f"alpha_deg = {round(math.degrees(cfg.alpha), 9)!r}",
        f"r_max = {cfg.r_max!r}",
        f"omega = {cfg.omega!r}",
        f"d_min = {cfg.d_min!r}",
        f"d_s = {cfg.d_s!r}",
        f"n_agents = {cfg.n_agents}",
        f"v_d = {cfg.v_d!r}",
        f"t_s = {cfg.t_s!r}",
        f"sample_pitch = {cfg.sample_pitch!r}",
        f"seed = {cfg.seed}",
    ]
    return "\n".join(lines) + "\n"
