"""Shared-autonomy collision avoidance: emergency-braking gate, RL-guided
focused dynamic-window search, and distributed SAC training in a
deterministic 2D simulator."""

from .config import SaferConfig, validate_config
from .kinematics import ControlCommand, DynamicWindow, RobotState, Trajectory

__all__ = [
    "SaferConfig",
    "validate_config",
    "ControlCommand",
    "DynamicWindow",
    "RobotState",
    "Trajectory",
]

__version__ = "0.1.0"
