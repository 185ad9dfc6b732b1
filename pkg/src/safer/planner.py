"""Dynamic-window trajectory search: the action cost, the exhaustive
standard search, and the focused search around a scaled policy action.

Candidate evaluation is fully vectorized; a 50x50 standard search is a
handful of numpy ops, which is what keeps the planning cycle inside the
control period.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .config import CostWeights, Footprint, KinematicLimits, SearchConfig
from .kinematics import (
    ControlCommand,
    DynamicWindow,
    RobotState,
    Trajectory,
    clamp_to_window,
    focused_window,
    rollout_positions_batch,
    standard_window,
)

DIST_EPSILON = 1e-3  # m, floor under the 1/dist cost term


class NoCollisionFreeCandidate(RuntimeError):
    """Every candidate in the window predicted a collision."""


@dataclass(frozen=True)
class SearchResult:
    best: ControlCommand
    cost: float
    candidates_evaluated: int
    elapsed: float
    window: DynamicWindow | None = None


def min_obstacle_distance(obstacles: np.ndarray, traj: Trajectory) -> float:
    """Min Euclidean distance between trajectory centers and obstacle points.

    Empty obstacle set returns +inf (no obstacles, nothing to stay away
    from).
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    obstacles = np.asarray(obstacles, dtype=float).reshape(-1, 2)
    if len(obstacles) == 0:
        return float("inf")
    d = np.linalg.norm(traj.positions[:, None, :] - obstacles[None, :, :], axis=2)
    return float(d.min())


def _batch_min_distances(
    positions: np.ndarray, step_counts: np.ndarray, obstacles: np.ndarray
) -> np.ndarray:
    """Min obstacle distance per candidate rollout.

    positions: (K, N+1, 2); step_counts[i] masks out samples beyond each
    candidate's own horizon.  Empty obstacle set -> +inf everywhere.
    """
    k, n_plus_1, _ = positions.shape
    if len(obstacles) == 0:
        return np.full(k, np.inf)
    # Exact pruning: for any trajectory point p, the nearest obstacle is
    # within |o_near| + r_traj, while an obstacle with |o| > |o_near| +
    # 2 r_traj is at least |o| - r_traj away, so it can never be the
    # minimum for any candidate.
    if len(obstacles) > 1:
        norms = np.linalg.norm(obstacles, axis=1)
        r_traj = float(np.linalg.norm(positions.reshape(-1, 2), axis=1).max())
        obstacles = obstacles[norms <= norms.min() + 2.0 * r_traj + 1e-12]
    pf = positions.reshape(-1, 2)
    d2 = (
        (pf * pf).sum(axis=1)[:, None]
        + (obstacles * obstacles).sum(axis=1)[None, :]
        - 2.0 * (pf @ obstacles.T)
    )  # squared distances, (K * (N+1), P)
    d = np.sqrt(np.maximum(d2.min(axis=1), 0.0)).reshape(k, n_plus_1)
    mask = np.arange(n_plus_1)[None, :] > step_counts[:, None]
    d[mask] = np.inf
    return d.min(axis=1)


def _candidate_step_counts(
    v: np.ndarray, beta: float, limits: KinematicLimits
) -> np.ndarray:
    """Rollout step count for each candidate's beta * t_p horizon."""
    t_p = limits.t_r + np.abs(v) / (2.0 * limits.a_max_v)
    return np.floor(beta * t_p / limits.t_r + 1e-9).astype(int)


def effective_collision_threshold(obstacles: np.ndarray, footprint: Footprint) -> float:
    """Collision distance threshold, clearance-preserving inside the
    inflation band.

    Normally radius + inflation.  When the robot already sits closer than
    that (inside the band but not in contact), requiring full clearance
    would mark every candidate colliding, including the ones that back
    away, and the robot could never recover.  The threshold therefore
    never exceeds the current clearance, and never drops below the bare
    radius: candidates must not reduce clearance into the band, but
    holding or growing it is allowed.
    """
    threshold = footprint.radius + footprint.inflation
    obstacles = np.asarray(obstacles, dtype=float).reshape(-1, 2)
    if len(obstacles):
        d0 = float(np.linalg.norm(obstacles, axis=1).min())
        threshold = max(footprint.radius, min(threshold, d0))
    return threshold


def evaluate_costs(
    v: np.ndarray,
    omega: np.ndarray,
    obstacles: np.ndarray,
    v_ref: float,
    omega_ref: float,
    weights: CostWeights,
    beta: float,
    limits: KinematicLimits,
    footprint: Footprint,
    collision_to_inf: bool = True,
) -> np.ndarray:
    """Cost of each (v, omega) candidate; +inf where the beta*t_p rollout
    predicts a collision (unless ``collision_to_inf`` is off, in which case
    the epsilon floor bounds the clearance term; used when scoring commands
    that were executed anyway, e.g. braking)."""
    v = np.asarray(v, dtype=float)
    omega = np.asarray(omega, dtype=float)
    obstacles = np.asarray(obstacles, dtype=float).reshape(-1, 2)
    steps = _candidate_step_counts(v, beta, limits)
    positions = rollout_positions_batch(v, omega, int(steps.max()), limits.t_r)
    dists = _batch_min_distances(positions, steps, obstacles)

    cost = weights.c1 * (limits.v_max - v)
    cost += weights.c2 * (np.abs(v - v_ref) + np.abs(omega - omega_ref))
    clearance = np.where(np.isinf(dists), np.inf, np.maximum(dists, DIST_EPSILON))
    with np.errstate(divide="ignore"):
        cost += weights.c3 * np.where(np.isinf(clearance), 0.0, 1.0 / clearance)
    if collision_to_inf:
        cost = np.where(dists < effective_collision_threshold(obstacles, footprint), np.inf, cost)
    return cost


def action_cost(
    v_c: float,
    omega_c: float,
    v_ref: float,
    omega_ref: float,
    obstacles: np.ndarray,
    weights: CostWeights,
    beta: float,
    limits: KinematicLimits,
    footprint: Footprint,
    collision_to_inf: bool = True,
) -> float:
    """Scalar form of the candidate cost; +inf means predicted collision."""
    return float(
        evaluate_costs(
            np.array([v_c]),
            np.array([omega_c]),
            obstacles,
            v_ref,
            omega_ref,
            weights,
            beta,
            limits,
            footprint,
            collision_to_inf=collision_to_inf,
        )[0]
    )


def _grid_search(
    window: DynamicWindow,
    n_v: int,
    n_omega: int,
    obstacles: np.ndarray,
    v_ref: float,
    omega_ref: float,
    weights: CostWeights,
    beta: float,
    limits: KinematicLimits,
    footprint: Footprint,
    kind: str,
) -> SearchResult:
    t0 = time.perf_counter()
    v_axis = np.linspace(window.v_lower, window.v_upper, n_v)
    omega_axis = np.linspace(window.omega_lower, window.omega_upper, n_omega)
    # v-major flattening so argmin's first-hit rule is the documented
    # tie-break (lowest linear index).
    vv, ww = np.meshgrid(v_axis, omega_axis, indexing="ij")
    v_flat, w_flat = vv.ravel(), ww.ravel()
    costs = evaluate_costs(
        v_flat, w_flat, obstacles, v_ref, omega_ref, weights, beta, limits, footprint
    )
    elapsed = time.perf_counter() - t0
    if not np.isfinite(costs).any():
        raise NoCollisionFreeCandidate(
            f"all {len(costs)} candidates in the {window} predict collision"
        )
    i = int(np.argmin(costs))
    return SearchResult(
        best=ControlCommand(v=float(v_flat[i]), omega=float(w_flat[i]), kind=kind),
        cost=float(costs[i]),
        candidates_evaluated=len(costs),
        elapsed=elapsed,
        window=window,
    )


def standard_dwa_search(
    state: RobotState,
    obstacles: np.ndarray,
    v_ref: float,
    omega_ref: float,
    n_v: int,
    n_omega: int,
    weights: CostWeights,
    beta: float,
    limits: KinematicLimits,
    footprint: Footprint,
) -> SearchResult:
    """Exhaustive n_v x n_omega search over the standard dynamic window."""
    if n_v < 2 or n_omega < 2:
        raise ValueError("n_v and n_omega must be >= 2")
    window = standard_window(state, limits)
    return _grid_search(
        window, n_v, n_omega, obstacles, v_ref, omega_ref,
        weights, beta, limits, footprint, kind="corrective",
    )


def focused_sample_counts(n_v: int, n_omega: int, delta: float) -> tuple[int, int]:
    return max(round(delta * n_v), 2), max(round(delta * n_omega), 2)


def focused_search(
    v_s: float,
    omega_s: float,
    state: RobotState,
    obstacles: np.ndarray,
    v_ref: float,
    omega_ref: float,
    search: SearchConfig,
    weights: CostWeights,
    beta: float,
    limits: KinematicLimits,
    footprint: Footprint,
) -> SearchResult:
    """delta-reduced grid search in the gamma-scaled window around the
    (already window-clamped) scaled policy action."""
    feasible = standard_window(state, limits) if search.enforce_accel_feasibility else None
    window = focused_window(v_s, omega_s, search.gamma, limits, feasible=feasible)
    m_v, m_omega = focused_sample_counts(search.n_v, search.n_omega, search.delta)
    return _grid_search(
        window, m_v, m_omega, obstacles, v_ref, omega_ref,
        weights, beta, limits, footprint, kind="corrective",
    )


def clamp_scaled_action(
    v_s: float, omega_s: float, state: RobotState, limits: KinematicLimits
) -> tuple[float, float]:
    """Threshold a scaled policy action into the standard dynamic window."""
    return clamp_to_window(v_s, omega_s, standard_window(state, limits))
