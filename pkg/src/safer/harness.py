"""Episode and trial runners, experience collection hooks, CSV reporting,
and the search-latency bench.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import SaferConfig
from .control import CycleRecord, SafetyController, Simulator
from .gate import AVOID, BRAKE
from .kinematics import RobotState
from .metrics import CSV_COLUMNS, EpisodeAccumulator, EpisodeMetrics, aggregate_row
from .mlp import Mlp
from .sac import compute_reward
from .scenarios import Scenario, make_driver, randomized_spawn, success_reached
from .world import register_obstacles

# Collector callback: (record, obstacles, new_state, collided, done) -> None
CycleHook = Callable[[CycleRecord, np.ndarray, RobotState, bool, bool], None]


def run_episode(
    method: str,
    scenario: Scenario,
    seed: int,
    cfg: SaferConfig,
    actor: Mlp | None = None,
    stochastic: bool = False,
    cycle_hook: CycleHook | None = None,
    stop_on_collision: bool = True,
) -> EpisodeMetrics:
    """One seeded episode of a scenario under one method."""
    rng = np.random.default_rng(seed)
    world = scenario.load_world()
    spawn = randomized_spawn(world, scenario, rng)
    sim = Simulator(world, cfg, spawn=spawn, rng=rng)
    controller = SafetyController(method, cfg, actor=actor, rng=rng, stochastic=stochastic)
    driver = make_driver(scenario.driver, cfg.limits)
    acc = EpisodeAccumulator(cfg.limits.t_r)

    success = False
    for step in range(scenario.step_cap):
        scan = sim.sense()
        upstream = driver(sim.sim_time, scan)
        record = controller.decide(sim.state, scan, upstream)
        obstacles = register_obstacles(scan)
        cost = None
        if record.stage in (AVOID, BRAKE):
            cost = sim.executed_action_cost(record, obstacles)
            record.executed_cost = cost
        collided = sim.apply(record.emitted)
        acc.add_cycle(
            record.stage, record.sigma, record.emitted.v, record.emitted.omega,
            record.latency, executed_cost=cost,
        )
        acc.add_contact(collided)
        if not collided and success_reached(scenario, sim.state):
            success = True
        done = (
            (collided and stop_on_collision)
            or success
            or step == scenario.step_cap - 1
        )
        if cycle_hook is not None:
            cycle_hook(record, obstacles, sim.state, collided, done)
        if done:
            break

    if scenario.success_kind == "time-boxed-crash-session":
        success = acc.collisions == 0
    return acc.finalize(success)


def run_trials(
    method: str,
    scenario: Scenario,
    n_trials: int,
    seed: int,
    cfg: SaferConfig,
    actor: Mlp | None = None,
) -> tuple[dict, list[EpisodeMetrics]]:
    """n seeded episodes with randomized spawn; returns (CSV row, episodes)."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    episodes = [
        run_episode(method, scenario, seed + trial, cfg, actor=actor)
        for trial in range(n_trials)
    ]
    return aggregate_row(method, scenario.name, episodes, seed), episodes


def write_csv(path: str, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


# -- experience collection -------------------------------------------------


@dataclass
class PendingTransition:
    obs: np.ndarray
    action: np.ndarray
    executed_cost: float


class ExperienceCollector:
    """Implements the collection rule: transitions are recorded on Avoid and
    Brake cycles; sigma_{t+1} is resolved one cycle later when the next
    stage is known.  Episodes ending in actual contact get sigma = 1 on the
    terminal transition (contact is strictly worse than braking)."""

    def __init__(self, cfg: SaferConfig, sink: Callable[[tuple], None],
                 collect_all: bool | None = None):
        self.cfg = cfg
        self.sink = sink
        self.collect_all = cfg.sac.collect_all_cycles if collect_all is None else collect_all
        self._pending: PendingTransition | None = None

    def __call__(self, record: CycleRecord, obstacles: np.ndarray,
                 new_state: RobotState, collided: bool, done: bool) -> None:
        rw = self.cfg.reward
        sigma_now = 1 if record.stage == BRAKE else 0
        if self._pending is not None and record.observation is not None:
            p = self._pending
            r = compute_reward(sigma_now, p.executed_cost, rw.lambda1, rw.lambda2)
            self.sink((p.obs, p.action, r, record.observation, False, sigma_now))
            self._pending = None

        eligible = record.stage in (AVOID, BRAKE) or self.collect_all
        if eligible and record.observation is not None:
            action = record.action
            if action is None or record.stage != AVOID:
                # The emitted command was not derived from the policy action
                # (pass-through or braking); store what was actually executed,
                # normalized back into [-1, 1]^2, so Q(s, a) is learned from
                # action-consistent outcomes.
                action = np.array([
                    record.emitted.v / self.cfg.limits.v_max,
                    record.emitted.omega / self.cfg.limits.omega_max,
                ])
            cost = record.executed_cost
            if cost is None:
                cost = 0.0
            self._pending = PendingTransition(
                obs=record.observation, action=action, executed_cost=cost
            )

        if done and self._pending is not None:
            p = self._pending
            sigma_term = 1 if collided else sigma_now
            r = compute_reward(sigma_term, p.executed_cost, rw.lambda1, rw.lambda2)
            self.sink((p.obs, p.action, r, p.obs, True, sigma_term))
            self._pending = None


# -- search bench ----------------------------------------------------------


def bench_search(cfg: SaferConfig, scenario: Scenario, seed: int = 0,
                 n_fixtures: int = 10) -> dict:
    """Measure candidate counts and wall-clock of standard vs focused search
    on identical states sampled from a scenario run."""
    from .planner import focused_search, standard_dwa_search

    rng = np.random.default_rng(seed)
    world = scenario.load_world()
    sim = Simulator(world, cfg, spawn=randomized_spawn(world, scenario, rng), rng=rng)
    driver = make_driver(scenario.driver, cfg.limits)

    fixtures = []
    while len(fixtures) < n_fixtures:
        scan = sim.sense()
        upstream = driver(sim.sim_time, scan)
        obstacles = register_obstacles(scan)
        if len(obstacles):
            fixtures.append((sim.state, obstacles, upstream))
        if sim.apply(upstream):
            sim = Simulator(world, cfg, spawn=randomized_spawn(world, scenario, rng), rng=rng)

    std_times, foc_times, std_counts, foc_counts = [], [], [], []
    for state, obstacles, upstream in fixtures:
        try:
            r = standard_dwa_search(
                state, obstacles, upstream.v, upstream.omega,
                cfg.search.n_v, cfg.search.n_omega,
                cfg.cost, cfg.gate.beta, cfg.limits, cfg.footprint,
            )
            std_times.append(r.elapsed)
            std_counts.append(r.candidates_evaluated)
        except Exception:
            continue
        v_s, omega_s = state.v, state.omega  # center the focused window on the current velocity
        try:
            f = focused_search(
                v_s, omega_s, state, obstacles, upstream.v, upstream.omega,
                cfg.search, cfg.cost, cfg.gate.beta, cfg.limits, cfg.footprint,
            )
            foc_times.append(f.elapsed)
            foc_counts.append(f.candidates_evaluated)
        except Exception:
            continue
    return {
        "standard_candidates": std_counts[0] if std_counts else 0,
        "focused_candidates": foc_counts[0] if foc_counts else 0,
        "candidates_ratio": (foc_counts[0] / std_counts[0]) if std_counts and foc_counts else None,
        "standard_ms_mean": 1e3 * float(np.mean(std_times)) if std_times else None,
        "focused_ms_mean": 1e3 * float(np.mean(foc_times)) if foc_times else None,
        "window_ratio": 1.0 / cfg.search.gamma,
        "sample_ratio": cfg.search.delta**2,
        "granularity_ratio": cfg.search.gamma / cfg.search.delta,
        "fixtures": len(std_times),
    }
