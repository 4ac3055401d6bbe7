"""Distributed estimation of a planar load's inertial parameters by a robot team."""

from .config import ScenarioConfig, from_dict, load_config
from .runner import run

__all__ = ["ScenarioConfig", "from_dict", "load_config", "run"]
__version__ = "0.1.0"
