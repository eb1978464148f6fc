"""Cooperative coverage path planning for multi-UAV structure inspection."""

from .config import PlannerConfig, load_config, parse_config
from .errors import CCPPError
from .kernels import BACKEND
from .model_io import StructureModel, load_model
from .pipeline import MissionResult, plan_mission

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CCPPError",
    "MissionResult",
    "PlannerConfig",
    "StructureModel",
    "__version__",
    "load_config",
    "load_model",
    "parse_config",
    "plan_mission",
]
