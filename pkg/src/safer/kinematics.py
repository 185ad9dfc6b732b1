"""Unicycle kinematics, trajectory rollouts, and velocity-window geometry.

Everything here is a pure function over value types; the simulator, planner
and safety gate all share these primitives.  The pose update uses the
pre-step velocities and the commanded velocities take effect on the next
step, i.e. velocity jumps to the command with no interpolation inside a
control cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import KinematicLimits

CommandKind = str  # "upstream-reference" | "corrective" | "max-braking"


def wrap_angle(theta: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def wrap_angles(theta: np.ndarray) -> np.ndarray:
    """Vectorized wrap_angle with the same (-pi, pi] convention."""
    wrapped = np.mod(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi)
    wrapped[wrapped == 0.0] = 2.0 * np.pi
    return wrapped - np.pi


@dataclass(frozen=True)
class RobotState:
    """Planar robot state (x, y, theta, v, omega) in SI units."""

    x: float
    y: float
    theta: float
    v: float
    omega: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta, self.v, self.omega])


@dataclass(frozen=True)
class ControlCommand:
    v: float
    omega: float
    kind: CommandKind = "upstream-reference"


@dataclass(frozen=True)
class Trajectory:
    """Constant-velocity rollout sampled every t_r seconds, ego frame.

    ``states`` is an (N, 5) array of (x, y, theta, v, omega) rows with
    states[0] at the origin.
    """

    states: np.ndarray
    horizon: float

    def __len__(self) -> int:
        return len(self.states)

    @property
    def positions(self) -> np.ndarray:
        return self.states[:, :2]


@dataclass(frozen=True)
class DynamicWindow:
    """Axis-aligned rectangle in (v, omega) control space."""

    v_lower: float
    v_upper: float
    omega_lower: float
    omega_upper: float

    def contains(self, v: float, omega: float, tol: float = 1e-12) -> bool:
        return (
            self.v_lower - tol <= v <= self.v_upper + tol
            and self.omega_lower - tol <= omega <= self.omega_upper + tol
        )

    @property
    def v_width(self) -> float:
        return self.v_upper - self.v_lower

    @property
    def omega_width(self) -> float:
        return self.omega_upper - self.omega_lower


def _check_finite(*values: float) -> None:
    for val in values:
        if not math.isfinite(val):
            raise ValueError(f"non-finite input: {val}")


def step_kinematics(state: RobotState, cmd: ControlCommand, t_r: float) -> RobotState:
    """One control cycle of the unicycle model.

    Pose advances with the pre-step (v, omega); the commanded velocities
    become the post-step velocities.
    """
    _check_finite(state.x, state.y, state.theta, state.v, state.omega, cmd.v, cmd.omega, t_r)
    if t_r <= 0:
        raise ValueError(f"t_r must be > 0, got {t_r}")
    return RobotState(
        x=state.x + state.v * math.cos(state.theta) * t_r,
        y=state.y + state.v * math.sin(state.theta) * t_r,
        theta=wrap_angle(state.theta + state.omega * t_r),
        v=cmd.v,
        omega=cmd.omega,
    )


def n_rollout_steps(dt: float, t_r: float) -> int:
    # Guard against 0.3/0.1 -> 2.9999... flooring to 2.
    return int(math.floor(dt / t_r + 1e-9))


def rollout_trajectory(v: float, omega: float, dt: float, t_r: float) -> Trajectory:
    """Ego-frame constant-velocity rollout starting at (0, 0, 0, v, omega)."""
    _check_finite(v, omega, dt, t_r)
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    n = n_rollout_steps(dt, t_r)
    states = np.empty((n + 1, 5))
    # theta_i = omega * t_r * i; positions are cumulative sums of the
    # per-step displacement, which matches iterating step_kinematics.
    idx = np.arange(n + 1)
    theta = omega * t_r * idx
    dx = v * np.cos(theta[:-1]) * t_r
    dy = v * np.sin(theta[:-1]) * t_r
    states[0, 0] = states[0, 1] = 0.0
    states[1:, 0] = np.cumsum(dx)
    states[1:, 1] = np.cumsum(dy)
    states[:, 2] = wrap_angles(theta)
    states[:, 3] = v
    states[:, 4] = omega
    return Trajectory(states=states, horizon=dt)


def rollout_positions_batch(
    v: np.ndarray, omega: np.ndarray, n_steps: int, t_r: float
) -> np.ndarray:
    """Positions of many constant-velocity rollouts at once.

    v, omega: shape (K,).  Returns (K, n_steps + 1, 2) ego-frame positions.
    Used by the grid searches where per-candidate python loops would dominate.
    """
    v = np.asarray(v, dtype=float)
    omega = np.asarray(omega, dtype=float)
    idx = np.arange(n_steps)  # pre-step headings for steps 1..n
    theta = omega[:, None] * t_r * idx[None, :]
    out = np.zeros((len(v), n_steps + 1, 2))
    out[:, 1:, 0] = np.cumsum(v[:, None] * np.cos(theta) * t_r, axis=1)
    out[:, 1:, 1] = np.cumsum(v[:, None] * np.sin(theta) * t_r, axis=1)
    return out


def plan_ahead_time(v: float, limits: KinematicLimits) -> float:
    """Braking-capability horizon t_p = t_r + |v| / (2 a_max_v).

    |v| rather than v so that reverse driving gets the same braking horizon.
    """
    return limits.t_r + abs(v) / (2.0 * limits.a_max_v)


def standard_window(state: RobotState, limits: KinematicLimits) -> DynamicWindow:
    """Velocities reachable within one reaction time, clipped to the limits."""
    return DynamicWindow(
        v_lower=max(state.v - limits.a_max_v * limits.t_r, -limits.v_max),
        v_upper=min(state.v + limits.a_max_v * limits.t_r, limits.v_max),
        omega_lower=max(state.omega - limits.a_max_omega * limits.t_r, -limits.omega_max),
        omega_upper=min(state.omega + limits.a_max_omega * limits.t_r, limits.omega_max),
    )


def clamp_to_window(v_s: float, omega_s: float, w: DynamicWindow) -> tuple[float, float]:
    return (
        max(min(v_s, w.v_upper), w.v_lower),
        max(min(omega_s, w.omega_upper), w.omega_lower),
    )


def focused_window(
    v_s: float,
    omega_s: float,
    gamma: float,
    limits: KinematicLimits,
    feasible: DynamicWindow | None = None,
) -> DynamicWindow:
    """Window gamma times the standard size, centered on the scaled action.

    Clamps only at the absolute velocity limits; pass ``feasible`` (the
    standard window) to additionally intersect with the acceleration-feasible
    set.
    """
    if not (0 < gamma < 1):
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    w = DynamicWindow(
        v_lower=max(v_s - gamma * limits.a_max_v * limits.t_r, -limits.v_max),
        v_upper=min(v_s + gamma * limits.a_max_v * limits.t_r, limits.v_max),
        omega_lower=max(omega_s - gamma * limits.a_max_omega * limits.t_r, -limits.omega_max),
        omega_upper=min(omega_s + gamma * limits.a_max_omega * limits.t_r, limits.omega_max),
    )
    if feasible is not None:
        w = DynamicWindow(
            v_lower=max(w.v_lower, feasible.v_lower),
            v_upper=min(w.v_upper, feasible.v_upper),
            omega_lower=max(w.omega_lower, feasible.omega_lower),
            omega_upper=min(w.omega_upper, feasible.omega_upper),
        )
    return w


def max_braking_command(state: RobotState, limits: KinematicLimits) -> ControlCommand:
    """Decelerate both axes at the acceleration limits, saturating at zero."""
    v = math.copysign(max(abs(state.v) - limits.a_max_v * limits.t_r, 0.0), state.v)
    omega = math.copysign(
        max(abs(state.omega) - limits.a_max_omega * limits.t_r, 0.0), state.omega
    )
    return ControlCommand(v=v, omega=omega, kind="max-braking")
