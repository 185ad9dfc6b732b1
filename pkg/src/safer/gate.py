"""The three-stage decision pipeline that sits between an upstream
controller and the robot: Maintain, Avoid, or Brake.

Braking wins whenever the current-velocity rollout over the plan-ahead time
t_p predicts a collision; avoidance triggers when either the current motion
or the upstream command collides on the expanded beta * t_p horizon and
hands the cycle to a corrective planner; otherwise the upstream command
passes through untouched.  Without a planner (braking-only operation) an
upstream command that collides on its own t_p rollout is refused with a
brake instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import Footprint, GateConfig, KinematicLimits
from .kinematics import (
    ControlCommand,
    RobotState,
    Trajectory,
    max_braking_command,
    plan_ahead_time,
    rollout_trajectory,
)
from .planner import (
    NoCollisionFreeCandidate,
    effective_collision_threshold,
    min_obstacle_distance,
)
from .world import SensorScan, register_obstacles

MAINTAIN = "Maintain"
AVOID = "Avoid"
BRAKE = "Brake"

# A corrective planner maps (state, obstacles, upstream) to a command.
CorrectivePlanner = Callable[[RobotState, np.ndarray, ControlCommand], ControlCommand]


@dataclass(frozen=True)
class GateDecision:
    stage: str  # Maintain | Avoid | Brake
    command: ControlCommand
    sigma: int  # 1 iff maximum braking was triggered this cycle


def predict_collision(
    traj: Trajectory, obstacles: np.ndarray, footprint: Footprint
) -> bool:
    """Disc reduction of the swept-footprint collision test.

    Uses the clearance-preserving threshold: inside the inflation band only
    motion that reduces clearance further counts as a predicted collision.
    """
    return min_obstacle_distance(obstacles, traj) < effective_collision_threshold(
        obstacles, footprint
    )


def command_predicts_collision(
    v: float,
    omega: float,
    obstacles: np.ndarray,
    horizon_mult: float,
    limits: KinematicLimits,
    footprint: Footprint,
) -> bool:
    """Would holding (v, omega) for horizon_mult * t_p(v) hit anything?"""
    t_p = plan_ahead_time(v, limits)
    traj = rollout_trajectory(v, omega, horizon_mult * t_p, limits.t_r)
    return predict_collision(traj, obstacles, footprint)


def needs_emergency_braking(
    state: RobotState,
    obstacles: np.ndarray,
    limits: KinematicLimits,
    footprint: Footprint,
) -> bool:
    return command_predicts_collision(
        state.v, state.omega, obstacles, 1.0, limits, footprint
    )


def needs_avoidance(
    state: RobotState,
    obstacles: np.ndarray,
    beta: float,
    limits: KinematicLimits,
    footprint: Footprint,
    upstream: ControlCommand | None = None,
) -> bool:
    """Collision predicted on the expanded horizon for either the current
    motion or the upstream command about to be executed."""
    if beta <= 1:
        raise ValueError(f"beta must be > 1, got {beta}")
    if command_predicts_collision(
        state.v, state.omega, obstacles, beta, limits, footprint
    ):
        return True
    return upstream is not None and command_predicts_collision(
        upstream.v, upstream.omega, obstacles, beta, limits, footprint
    )


def gate(
    state: RobotState,
    scan: SensorScan,
    upstream: ControlCommand,
    planner: CorrectivePlanner | None,
    gate_cfg: GateConfig,
    limits: KinematicLimits,
    footprint: Footprint,
    obstacles: np.ndarray | None = None,
) -> GateDecision:
    """One control cycle of the safety pipeline.

    ``planner`` produces the corrective command for Avoid cycles; pass None
    for braking-only operation (the AEB baseline), in which case Avoid
    never fires.  Planner failures escalate to Brake, never propagate.
    ``obstacles`` overrides the ego-frame obstacle set (e.g. a fused
    multi-scan set); by default the single scan is registered.
    """
    if obstacles is None:
        obstacles = register_obstacles(scan)

    def brake() -> GateDecision:
        return GateDecision(
            stage=BRAKE, command=max_braking_command(state, limits), sigma=1
        )

    # Already touching: no rollout can help, stop now.
    if len(obstacles) and float(np.linalg.norm(obstacles, axis=1).min()) < footprint.radius:
        return brake()
    if needs_emergency_braking(state, obstacles, limits, footprint):
        return brake()
    if planner is None:
        # Braking-only operation: refuse an upstream command whose own
        # rollout collides, since there is no planner to fix it.
        if command_predicts_collision(
            upstream.v, upstream.omega, obstacles, 1.0, limits, footprint
        ):
            return brake()
        return GateDecision(stage=MAINTAIN, command=upstream, sigma=0)
    if needs_avoidance(
        state, obstacles, gate_cfg.beta, limits, footprint, upstream=upstream
    ):
        try:
            corrective = planner(state, obstacles, upstream)
        except NoCollisionFreeCandidate:
            return brake()
        except Exception:
            return brake()  # fail-safe: any planner fault stops the robot
        # The corrective command itself must survive the braking check.
        t_p = plan_ahead_time(corrective.v, limits)
        traj = rollout_trajectory(corrective.v, corrective.omega, t_p, limits.t_r)
        if predict_collision(traj, obstacles, footprint):
            return brake()
        return GateDecision(stage=AVOID, command=corrective, sigma=0)
    return GateDecision(stage=MAINTAIN, command=upstream, sigma=0)
