"""Configuration for the whole collision-avoidance stack.

Every tunable lives here so that experiments are reproducible from a single
JSON file.  Keys in the file are namespaced (``limits.v_max``, ``gate.beta``,
``search.n_v``, ``cost.c1``, ``reward.lambda1``, ...) and map onto the nested
dataclasses below.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field


@dataclass
class KinematicLimits:
    """Actuation limits plus the control-cycle period t_r (seconds).

    t_r doubles as the rollout time step for trajectory prediction.
    """

    v_max: float = 0.5          # m/s
    omega_max: float = 1.0      # rad/s
    a_max_v: float = 1.0        # m/s^2
    a_max_omega: float = 2.0    # rad/s^2
    t_r: float = 0.1            # s

    def validate(self) -> None:
        for name in ("v_max", "omega_max", "a_max_v", "a_max_omega", "t_r"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"limits.{name} must be finite and > 0, got {val}")


@dataclass
class Footprint:
    """Disc robot footprint; inflation pads the planner checks only.

    The braking trigger distance equals the stopping distance exactly, so
    without a margin the lidar's 1-degree angular quantization lets the
    robot graze obstacles; a small default inflation restores the margin.
    """

    radius: float = 0.35     # m
    inflation: float = 0.05  # m

    def validate(self) -> None:
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"footprint.radius must be > 0, got {self.radius}")
        if not (math.isfinite(self.inflation) and self.inflation >= 0):
            raise ValueError(f"footprint.inflation must be >= 0, got {self.inflation}")


@dataclass
class GateConfig:
    beta: float = 2.0  # plan-ahead multiplier for the avoidance check, must be > 1


@dataclass
class SearchConfig:
    n_v: int = 50
    n_omega: int = 50
    gamma: float = 0.05
    delta: float = 0.1
    # Intersect the focused window with the acceleration-feasible window
    # instead of clamping only at the absolute velocity limits.
    enforce_accel_feasibility: bool = False


@dataclass
class CostWeights:
    c1: float = 0.4
    c2: float = 0.2
    c3: float = 0.4


# Both published weightings; they disagree between paper revisions.
WEIGHTS_V1 = CostWeights(c1=0.4, c2=0.2, c3=0.4)
WEIGHTS_V2 = CostWeights(c1=0.4, c2=0.4, c3=0.2)


@dataclass
class RewardConfig:
    lambda1: float = 35.0
    lambda2: float = 10.0


@dataclass
class SensorConfig:
    max_range: float = 6.0          # m; not a published value
    ultrasonic_half_angle_deg: float = 7.5
    range_noise_sigma: float = 0.0  # gaussian, m; 0 = deterministic
    accumulate_scans: int = 5       # recent scans fused into the obstacle set


@dataclass
class SacConfig:
    hidden: tuple[int, ...] = (256, 256)
    lr: float = 3e-4
    tau: float = 5e-3
    discount: float = 0.99
    batch_size: int = 256
    buffer_capacity: int = 100_000
    target_entropy: float = -2.0
    init_alpha: float = 0.2
    normalize_observations: bool = True
    collect_all_cycles: bool = False


@dataclass
class TrainerSchedule:
    publish_every: int = 100        # training steps between actor broadcasts
    min_buffer_before_training: int = 1000
    updates_per_ingested_batch: int = 1

    def validate(self) -> None:
        if self.publish_every < 1:
            raise ValueError("schedule.publish_every must be >= 1")


@dataclass
class SaferConfig:
    limits: KinematicLimits = field(default_factory=KinematicLimits)
    footprint: Footprint = field(default_factory=Footprint)
    gate: GateConfig = field(default_factory=GateConfig)
    search: SearchConfig = field(default_factory=SearchConfig)
    cost: CostWeights = field(default_factory=lambda: dataclasses.replace(WEIGHTS_V1))
    reward: RewardConfig = field(default_factory=RewardConfig)
    sensors: SensorConfig = field(default_factory=SensorConfig)
    sac: SacConfig = field(default_factory=SacConfig)
    schedule: TrainerSchedule = field(default_factory=TrainerSchedule)

    def to_flat_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            section = getattr(self, f.name)
            for sf in dataclasses.fields(section):
                val = getattr(section, sf.name)
                if isinstance(val, tuple):
                    val = list(val)
                out[f"{f.name}.{sf.name}"] = val
        return out

    @classmethod
    def from_flat_dict(cls, flat: dict) -> "SaferConfig":
        cfg = cls()
        sections = {f.name: f for f in dataclasses.fields(cls)}
        for key, val in flat.items():
            if "." not in key:
                raise KeyError(f"config key {key!r} is not namespaced (section.name)")
            sec_name, attr = key.split(".", 1)
            if sec_name not in sections:
                raise KeyError(f"unknown config section {sec_name!r}")
            section = getattr(cfg, sec_name)
            if not hasattr(section, attr):
                raise KeyError(f"unknown config key {key!r}")
            if isinstance(getattr(section, attr), tuple):
                val = tuple(val)
            setattr(section, attr, val)
        return cfg

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_flat_dict(), fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path: str) -> "SaferConfig":
        with open(path) as fh:
            return cls.from_flat_dict(json.load(fh))


def estimate_search_time(per_candidate_seconds: float, n_candidates: int) -> float:
    return per_candidate_seconds * n_candidates


def validate_config(
    cfg: SaferConfig,
    per_candidate_seconds: float | None = None,
    policy_inference_seconds: float = 0.0,
) -> tuple[list[str], list[str]]:
    """Check structural constraints and the published tuning rules.

    Returns (errors, warnings).  Errors are violations of hard domain
    constraints (beta > 1, gamma/delta in (0,1), positive limits).  Warnings
    flag configurations that are legal but likely mis-tuned: a focused search
    coarser than the standard one (gamma/delta > 1), or an estimated search
    time that does not fit inside the control period after policy inference.
    """
    errors: list[str] = []
    warnings: list[str] = []

    try:
        cfg.limits.validate()
    except ValueError as exc:
        errors.append(str(exc))
    try:
        cfg.footprint.validate()
    except ValueError as exc:
        errors.append(str(exc))

    if not cfg.gate.beta > 1:
        errors.append(f"gate.beta must be > 1, got {cfg.gate.beta}")
    for name in ("gamma", "delta"):
        val = getattr(cfg.search, name)
        if not (0 < val < 1):
            errors.append(f"search.{name} must lie in (0, 1), got {val}")
    if cfg.search.n_v < 2 or cfg.search.n_omega < 2:
        errors.append("search.n_v and search.n_omega must be >= 2")

    if not errors:
        ratio = cfg.search.gamma / cfg.search.delta
        if ratio > 1:
            warnings.append(
                f"granularity ratio gamma/delta = {ratio:g} > 1: focused search is "
                "coarser than the standard search"
            )
        if per_candidate_seconds is not None:
            n_focused = round(cfg.search.delta * cfg.search.n_v) * round(
                cfg.search.delta * cfg.search.n_omega
            )
            t_search = estimate_search_time(per_candidate_seconds, n_focused)
            budget = cfg.limits.t_r - policy_inference_seconds
            if t_search > budget:
                warnings.append(
                    f"estimated focused search time {t_search * 1e3:.1f} ms exceeds "
                    f"the budget t_r - t_pi = {budget * 1e3:.1f} ms"
                )
    return errors, warnings


def granularity_ratio(cfg: SaferConfig) -> float:
    """Focused-vs-standard search granularity, gamma/delta."""
    return cfg.search.gamma / cfg.search.delta
