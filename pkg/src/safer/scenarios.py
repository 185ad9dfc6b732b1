"""Scenario files, spawn randomization, and the scripted driving policies.

A scenario references a world file, a success predicate, a step cap and a
driver.  The sinusoidal driver reproduces the unbiased evaluation setup
(full throttle, turn = sin(t)); the chauffeur driver deliberately steers at
the nearest obstacle, standing in for a human trying to crash the robot.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .config import KinematicLimits
from .kinematics import ControlCommand, RobotState
from .world import SensorScan, WorldModel, load_world

SUCCESS_KINDS = (
    "enter-room-no-collision",
    "pass-human-continue-hallway",
    "route-completion",
    "time-boxed-crash-session",
)


@dataclass(frozen=True)
class Scenario:
    name: str
    world_path: str
    success_kind: str
    success_region: tuple[float, float, float, float] | None  # xmin ymin xmax ymax
    success_line_x: float | None
    step_cap: int
    trials: int
    spawn_theta_jitter: float  # radians; actual theta = spawn + jitter * U(-1, 1)
    driver: str = "sinusoidal"

    def load_world(self) -> WorldModel:
        return load_world(self.world_path)


def load_scenario(path: str) -> Scenario:
    with open(path) as fh:
        doc = json.load(fh)
    kind = doc["success"]["kind"]
    if kind not in SUCCESS_KINDS:
        raise ValueError(f"unknown success predicate {kind!r}")
    world_path = doc["world"]
    if not os.path.isabs(world_path):
        world_path = os.path.join(os.path.dirname(os.path.abspath(path)), world_path)
    return Scenario(
        name=doc["name"],
        world_path=world_path,
        success_kind=kind,
        success_region=tuple(doc["success"]["region"]) if "region" in doc["success"] else None,
        success_line_x=doc["success"].get("line_x"),
        step_cap=doc["step_cap"],
        trials=doc.get("trials", 30),
        spawn_theta_jitter=doc.get("spawn_theta_jitter", math.pi / 4),
        driver=doc.get("driver", "sinusoidal"),
    )


def randomized_spawn(world: WorldModel, scenario: Scenario, rng: np.random.Generator) -> RobotState:
    x, y, theta = world.spawn
    theta = theta + scenario.spawn_theta_jitter * rng.uniform(-1.0, 1.0)
    return RobotState(x=x, y=y, theta=theta, v=0.0, omega=0.0)


def success_reached(scenario: Scenario, state: RobotState) -> bool:
    if scenario.success_kind == "enter-room-no-collision":
        xmin, ymin, xmax, ymax = scenario.success_region
        return xmin <= state.x <= xmax and ymin <= state.y <= ymax
    if scenario.success_kind in ("pass-human-continue-hallway", "route-completion"):
        return state.x >= scenario.success_line_x
    return False  # time-boxed sessions succeed by running clean, not by arriving


# -- driving policies ------------------------------------------------------


def sinusoidal_policy(t: float, limits: KinematicLimits) -> ControlCommand:
    """Constant full throttle; turn = sin(t) scaled to the angular limit."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return ControlCommand(
        v=limits.v_max, omega=math.sin(t) * limits.omega_max, kind="upstream-reference"
    )


def chauffeur_policy(scan: SensorScan, limits: KinematicLimits) -> ControlCommand:
    """Adversarial driver: full throttle, steering toward the nearest
    obstacle return.  No obstacle in sight falls back to straight ahead."""
    hits = scan.lidar < scan.max_range
    if not hits.any():
        return ControlCommand(v=limits.v_max, omega=0.0, kind="upstream-reference")
    bearing_deg = float(np.argmin(np.where(hits, scan.lidar, np.inf)))
    bearing = math.radians(bearing_deg if bearing_deg <= 180 else bearing_deg - 360)
    omega = max(-limits.omega_max, min(limits.omega_max, 2.0 * bearing))
    return ControlCommand(v=limits.v_max, omega=omega, kind="upstream-reference")


def make_driver(name: str, limits: KinematicLimits):
    """(sim_time, scan) -> ControlCommand."""
    if name == "sinusoidal":
        return lambda t, scan: sinusoidal_policy(t, limits)
    if name == "chauffeur":
        return lambda t, scan: chauffeur_policy(scan, limits)
    if name == "straight":
        return lambda t, scan: ControlCommand(v=limits.v_max, omega=0.0)
    raise ValueError(f"unknown driver {name!r}")
