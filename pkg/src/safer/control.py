"""Per-cycle wiring of the five methods (NoSafety, AEB, DWA, RL, SAFER)
onto the safety gate, plus the simulation stepper that drives a world at
the control period t_r.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass

import numpy as np

from .config import SaferConfig
from .gate import MAINTAIN, command_predicts_collision, gate
from .kinematics import ControlCommand, RobotState, step_kinematics
from .mlp import Mlp
from .planner import (
    NoCollisionFreeCandidate,
    SearchResult,
    action_cost,
    clamp_scaled_action,
    focused_search,
    standard_dwa_search,
)
from .sac import build_observation, policy_forward, scale_action
from .world import (
    SensorScan,
    WorldModel,
    advance_actors,
    ground_truth_collision,
    register_obstacles,
    sense,
)

METHODS = ("nosafety", "aeb", "dwa", "rl", "safer")


@dataclass
class CycleRecord:
    """Everything one control cycle produced, for metrics and learning."""

    stage: str
    sigma: int
    upstream: ControlCommand
    emitted: ControlCommand
    latency: float                      # planning wall-clock, seconds
    observation: np.ndarray | None = None
    action: np.ndarray | None = None    # [-1, 1]^2 throttle/turn
    executed_cost: float | None = None  # J of the emitted command
    search: SearchResult | None = None


class SafetyController:
    """Maps (state, scan, upstream) to the emitted command for one method."""

    def __init__(
        self,
        method: str,
        cfg: SaferConfig,
        actor: Mlp | None = None,
        rng: np.random.Generator | None = None,
        stochastic: bool = False,
    ):
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
        if method in ("rl", "safer") and actor is None:
            raise ValueError(f"method {method!r} needs actor weights")
        self.method = method
        self.cfg = cfg
        self.actor = actor
        self.rng = rng
        self.stochastic = stochastic
        # World-frame obstacle points from the most recent scans.  Fusing a
        # short history closes the lidar's edge-on blind spot: a thin wall
        # the robot is skimming subtends almost no angle from the current
        # pose but was plainly visible a few cycles ago.
        self._scan_memory: deque[np.ndarray] = deque(
            maxlen=max(1, int(cfg.sensors.accumulate_scans))
        )

    def set_actor(self, actor: Mlp) -> None:
        if self.actor is not None and actor.version < self.actor.version:
            raise ValueError("actor version must be non-decreasing")
        self.actor = actor

    def _fused_obstacles(self, state: RobotState, scan: SensorScan) -> np.ndarray:
        """Union of the last few scans' points in the current ego frame.

        Points are quantized to a 1 cm world grid so consecutive scans of
        the same wall collapse to one point each; the footprint inflation
        dwarfs the quantization error.
        """
        ego = register_obstacles(scan)
        c, s = np.cos(state.theta), np.sin(state.theta)
        rot = np.array([[c, -s], [s, c]])
        origin = np.array([state.x, state.y])
        cells = np.round((ego @ rot.T + origin) / 0.01).astype(np.int64)
        self._scan_memory.append(cells)
        fused = np.unique(np.concatenate(list(self._scan_memory), axis=0), axis=0)
        return (fused * 0.01 - origin) @ rot

    def decide(self, state: RobotState, scan: SensorScan, upstream: ControlCommand) -> CycleRecord:
        cfg = self.cfg
        t0 = time.perf_counter()

        if self.method == "nosafety":
            return CycleRecord(
                stage=MAINTAIN, sigma=0, upstream=upstream, emitted=upstream,
                latency=time.perf_counter() - t0,
            )

        obs = None
        action = None
        search_box: list[SearchResult | None] = [None]

        def policy_action(obs_vec: np.ndarray) -> np.ndarray:
            return policy_forward(
                self.actor, obs_vec, deterministic=not self.stochastic, rng=self.rng
            )

        planner = None
        if self.method in ("rl", "safer"):
            obs = build_observation(
                scan, state, upstream.v, upstream.omega, cfg.limits,
                normalize=cfg.sac.normalize_observations,
            )
            action = policy_action(obs)

            def planner(st, obstacles, up, _action=action):
                v_s, omega_s = scale_action(float(_action[0]), float(_action[1]), cfg.limits)
                v_s, omega_s = clamp_scaled_action(v_s, omega_s, st, cfg.limits)
                if self.method == "rl":
                    return ControlCommand(v=v_s, omega=omega_s, kind="corrective")
                try:
                    result = focused_search(
                        v_s, omega_s, st, obstacles, up.v, up.omega,
                        cfg.search, cfg.cost, cfg.gate.beta, cfg.limits, cfg.footprint,
                    )
                    usable = not command_predicts_collision(
                        result.best.v, result.best.omega, obstacles, 1.0,
                        cfg.limits, cfg.footprint,
                    )
                except NoCollisionFreeCandidate:
                    usable = False
                if not usable:
                    # The policy's neighborhood has no command that can still
                    # stop in time; degrade to the full window before giving
                    # up and braking.
                    result = standard_dwa_search(
                        st, obstacles, up.v, up.omega,
                        cfg.search.n_v, cfg.search.n_omega,
                        cfg.cost, cfg.gate.beta, cfg.limits, cfg.footprint,
                    )
                search_box[0] = result
                return result.best

        elif self.method == "dwa":

            def planner(st, obstacles, up):
                result = standard_dwa_search(
                    st, obstacles, up.v, up.omega,
                    cfg.search.n_v, cfg.search.n_omega,
                    cfg.cost, cfg.gate.beta, cfg.limits, cfg.footprint,
                )
                search_box[0] = result
                return result.best

        # method == "aeb": planner stays None, braking check only.
        decision = gate(
            state, scan, upstream, planner, cfg.gate, cfg.limits, cfg.footprint,
            obstacles=self._fused_obstacles(state, scan),
        )
        latency = time.perf_counter() - t0
        return CycleRecord(
            stage=decision.stage,
            sigma=decision.sigma,
            upstream=upstream,
            emitted=decision.command,
            latency=latency,
            observation=obs,
            action=action,
            search=search_box[0],
        )


class Simulator:
    """Owns one mutable world + robot; advances in t_r ticks of sim time."""

    def __init__(self, world: WorldModel, cfg: SaferConfig, spawn: RobotState | None = None,
                 rng: np.random.Generator | None = None):
        self.cfg = cfg
        self.world = world
        self.rng = rng
        sx, sy, stheta = world.spawn
        self.state = spawn if spawn is not None else RobotState(sx, sy, stheta, 0.0, 0.0)
        self.sim_time = 0.0
        self.tick = 0

    def sense(self) -> SensorScan:
        sc = self.cfg.sensors
        return sense(
            self.world, self.state, sc.max_range,
            half_angle_deg=sc.ultrasonic_half_angle_deg,
            noise_sigma=sc.range_noise_sigma, rng=self.rng,
        )

    def apply(self, cmd: ControlCommand) -> bool:
        """Step robot and actors one control period; True on contact."""
        t_r = self.cfg.limits.t_r
        self.state = step_kinematics(self.state, cmd, t_r)
        self.world = advance_actors(self.world, t_r)
        self.sim_time += t_r
        self.tick += 1
        return ground_truth_collision(self.world, self.cfg.footprint.radius, self.state)

    def executed_action_cost(self, record: CycleRecord, obstacles: np.ndarray) -> float:
        """J of the emitted command against this cycle's obstacles.

        Computed with the epsilon floor instead of the collision-infinity
        filter: a braking command that was executed anyway still needs a
        finite cost for the reward.
        """
        return action_cost(
            record.emitted.v, record.emitted.omega,
            record.upstream.v, record.upstream.omega,
            obstacles, self.cfg.cost, self.cfg.gate.beta,
            self.cfg.limits, self.cfg.footprint, collision_to_inf=False,
        )
