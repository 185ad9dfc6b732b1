import math

import numpy as np
import pytest

from safer.config import CostWeights, Footprint, KinematicLimits, SearchConfig
from safer.kinematics import RobotState, focused_window, rollout_trajectory, standard_window
from safer.planner import (
    NoCollisionFreeCandidate,
    action_cost,
    evaluate_costs,
    focused_sample_counts,
    focused_search,
    min_obstacle_distance,
    standard_dwa_search,
)

from oracles import action_cost_naive, fine_grid_argmin, min_distance_naive, rollout_states_naive

LIMITS = KinematicLimits(v_max=0.5, omega_max=1.0, a_max_v=1.0, a_max_omega=2.0, t_r=0.1)
FOOT = Footprint(radius=0.3, inflation=0.0)
WEIGHTS = CostWeights(c1=0.4, c2=0.2, c3=0.4)
BETA = 2.0
EMPTY = np.empty((0, 2))


class TestMinObstacleDistance:
    def test_three_four_five(self):
        traj = rollout_trajectory(0.0, 0.0, 0.0, 0.1)
        assert min_obstacle_distance(np.array([[3.0, 4.0]]), traj) == pytest.approx(5.0)

    def test_coincident_point(self):
        traj = rollout_trajectory(1.0, 0.0, 0.5, 0.1)
        assert min_obstacle_distance(np.array([[0.2, 0.0]]), traj) == 0.0

    def test_straight_rollout_sampled(self):
        traj = rollout_trajectory(1.0, 0.0, 1.0, 0.1)
        d = min_obstacle_distance(np.array([[0.55, 1.0]]), traj)
        assert d == pytest.approx(math.hypot(0.05, 1.0))

    def test_empty_set_is_infinite(self):
        traj = rollout_trajectory(0.5, 0.1, 1.0, 0.1)
        assert min_obstacle_distance(EMPTY, traj) == math.inf

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            v = rng.uniform(-0.5, 0.5)
            omega = rng.uniform(-1, 1)
            obstacles = rng.uniform(-2, 2, size=(rng.integers(1, 20), 2))
            traj = rollout_trajectory(v, omega, 0.7, 0.1)
            naive = min_distance_naive(rollout_states_naive(v, omega, 0.7, 0.1), obstacles)
            assert min_obstacle_distance(obstacles, traj) == pytest.approx(naive)


class TestActionCost:
    def test_empty_world_on_reference_at_vmax(self):
        j = action_cost(0.5, 0.0, 0.5, 0.0, EMPTY, WEIGHTS, BETA, LIMITS, FOOT)
        assert j == 0.0

    def test_worked_example(self):
        # c=(0.4, 0.2, 0.4), v_max=0.5, v_c=0.3, refs=(0.5, 0), omega_c=0.1,
        # obstacle clearance 2.0 -> 0.08 + 0.06 + 0.2 = 0.34.
        # Place the obstacle 2 m to the side so the whole short rollout stays
        # at distance ~2; verify against the sampled distance explicitly.
        obstacles = np.array([[0.0, 2.0]])
        t_p = LIMITS.t_r + 0.3 / (2 * LIMITS.a_max_v)
        traj = rollout_trajectory(0.3, 0.1, BETA * t_p, LIMITS.t_r)
        d = min_obstacle_distance(obstacles, traj)
        j = action_cost(0.3, 0.1, 0.5, 0.0, obstacles, WEIGHTS, BETA, LIMITS, FOOT)
        assert j == pytest.approx(0.4 * 0.2 + 0.2 * (0.2 + 0.1) + 0.4 / d)
        assert j == pytest.approx(0.34, abs=2e-3)

    def test_weight_scaling_preserves_argmin(self):
        rng = np.random.default_rng(2)
        obstacles = rng.uniform(-1.5, 1.5, size=(15, 2))
        v = rng.uniform(-0.5, 0.5, 25)
        w = rng.uniform(-1, 1, 25)
        c1 = evaluate_costs(v, w, obstacles, 0.5, 0.0, WEIGHTS, BETA, LIMITS, FOOT)
        doubled = CostWeights(c1=0.8, c2=0.4, c3=0.8)
        c2 = evaluate_costs(v, w, obstacles, 0.5, 0.0, doubled, BETA, LIMITS, FOOT)
        finite = np.isfinite(c1)
        assert np.allclose(c2[finite], 2 * c1[finite])
        assert np.argmin(c1) == np.argmin(c2)

    def test_collision_candidates_infinite(self):
        obstacles = np.array([[0.25, 0.0]])  # inside footprint radius on the path
        j = action_cost(0.5, 0.0, 0.5, 0.0, obstacles, WEIGHTS, BETA, LIMITS, FOOT)
        assert j == math.inf
        j2 = action_cost(
            0.5, 0.0, 0.5, 0.0, obstacles, WEIGHTS, BETA, LIMITS, FOOT,
            collision_to_inf=False,
        )
        assert math.isfinite(j2)

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            v = rng.uniform(-0.5, 0.5)
            omega = rng.uniform(-1, 1)
            obstacles = rng.uniform(-1.5, 1.5, size=(rng.integers(0, 10), 2))
            got = action_cost(v, omega, 0.4, -0.2, obstacles, WEIGHTS, BETA, LIMITS, FOOT)
            want = action_cost_naive(v, omega, 0.4, -0.2, obstacles, WEIGHTS, BETA, LIMITS, FOOT)
            if math.isinf(want):
                assert math.isinf(got)
            else:
                assert got == pytest.approx(want)


class TestStandardSearch:
    def test_empty_world_prefers_fast_on_reference(self):
        state = RobotState(0, 0, 0, 0.45, 0.0)
        r = standard_dwa_search(state, EMPTY, 0.5, 0.0, 50, 50, WEIGHTS, BETA, LIMITS, FOOT)
        assert r.best.v == pytest.approx(0.5)
        assert abs(r.best.omega) <= 0.2 / 49 + 1e-12

    def test_candidate_count(self):
        state = RobotState(0, 0, 0, 0.2, 0.0)
        r = standard_dwa_search(state, EMPTY, 0.5, 0.0, 50, 50, WEIGHTS, BETA, LIMITS, FOOT)
        assert r.candidates_evaluated == 2500

    def test_best_inside_window(self):
        state = RobotState(0, 0, 0, 0.3, 0.4)
        obstacles = np.array([[0.8, 0.0], [0.6, 0.3]])
        r = standard_dwa_search(state, obstacles, 0.5, 0.0, 20, 20, WEIGHTS, BETA, LIMITS, FOOT)
        assert standard_window(state, LIMITS).contains(r.best.v, r.best.omega)

    def test_cost_equals_recomputed(self):
        state = RobotState(0, 0, 0, 0.3, 0.0)
        obstacles = np.array([[0.9, 0.1]])
        r = standard_dwa_search(state, obstacles, 0.5, 0.0, 20, 20, WEIGHTS, BETA, LIMITS, FOOT)
        again = action_cost(r.best.v, r.best.omega, 0.5, 0.0, obstacles, WEIGHTS, BETA, LIMITS, FOOT)
        assert r.cost == pytest.approx(again, rel=1e-12)

    def test_returned_command_collision_free(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            state = RobotState(0, 0, 0, rng.uniform(0, 0.5), rng.uniform(-1, 1))
            obstacles = rng.uniform(-1, 1, size=(10, 2))
            try:
                r = standard_dwa_search(
                    state, obstacles, 0.5, 0.0, 15, 15, WEIGHTS, BETA, LIMITS, FOOT
                )
            except NoCollisionFreeCandidate:
                continue
            t_p = LIMITS.t_r + abs(r.best.v) / (2 * LIMITS.a_max_v)
            traj = rollout_trajectory(r.best.v, r.best.omega, BETA * t_p, LIMITS.t_r)
            assert min_obstacle_distance(obstacles, traj) >= FOOT.radius

    def test_all_blocked_raises(self):
        # Obstacles inside the footprint no matter what the command is.
        state = RobotState(0, 0, 0, 0.0, 0.0)
        obstacles = np.array([[0.05, 0.0], [0.0, 0.05], [-0.05, 0.0], [0.0, -0.05]])
        with pytest.raises(NoCollisionFreeCandidate):
            standard_dwa_search(state, obstacles, 0.5, 0.0, 10, 10, WEIGHTS, BETA, LIMITS, FOOT)

    def test_wall_ahead_matches_fine_grid(self):
        state = RobotState(0, 0, 0, 0.4, 0.0)
        ys = np.linspace(-1.0, 1.0, 41)
        obstacles = np.stack([np.full_like(ys, 0.7), ys], axis=1)
        r = standard_dwa_search(state, obstacles, 0.5, 0.0, 50, 50, WEIGHTS, BETA, LIMITS, FOOT)
        window = standard_window(state, LIMITS)
        _, _, fine = fine_grid_argmin(window, 120, 0.5, 0.0, obstacles, WEIGHTS, BETA, LIMITS, FOOT)
        assert r.cost >= fine - 1e-9
        assert r.cost - fine < 0.2  # within one grid cell's worth of cost


class TestFocusedSearch:
    SEARCH = SearchConfig(n_v=50, n_omega=50, gamma=0.05, delta=0.1)

    def test_sample_counts(self):
        assert focused_sample_counts(50, 50, 0.1) == (5, 5)
        state = RobotState(0, 0, 0, 0.3, 0.0)
        r = focused_search(
            0.3, 0.0, state, EMPTY, 0.5, 0.0, self.SEARCH, WEIGHTS, BETA, LIMITS, FOOT
        )
        assert r.candidates_evaluated == 25

    def test_granularity_ratio(self):
        assert self.SEARCH.gamma / self.SEARCH.delta == pytest.approx(0.5)

    def test_best_near_center_without_obstacles(self):
        state = RobotState(0, 0, 0, 0.3, 0.1)
        r = focused_search(
            0.3, 0.1, state, EMPTY, 0.5, 0.0, self.SEARCH, WEIGHTS, BETA, LIMITS, FOOT
        )
        w = focused_window(0.3, 0.1, self.SEARCH.gamma, LIMITS)
        # cost prefers high v, low deviation; the winner stays inside the
        # tiny window, so within half the window of the center in each axis
        assert abs(r.best.v - 0.3) <= w.v_width / 2 + 1e-12
        assert abs(r.best.omega - 0.1) <= w.omega_width / 2 + 1e-12
        assert w.contains(r.best.v, r.best.omega)

    def test_matches_fine_grid_in_window(self):
        state = RobotState(0, 0, 0, 0.4, 0.0)
        ys = np.linspace(-0.8, 0.8, 33)
        obstacles = np.stack([np.full_like(ys, 0.75), ys], axis=1)
        v_s, omega_s = 0.35, 0.3
        r = focused_search(
            v_s, omega_s, state, obstacles, 0.5, 0.0, self.SEARCH, WEIGHTS, BETA, LIMITS, FOOT
        )
        w = focused_window(v_s, omega_s, self.SEARCH.gamma, LIMITS)
        _, _, fine = fine_grid_argmin(w, 60, 0.5, 0.0, obstacles, WEIGHTS, BETA, LIMITS, FOOT)
        assert r.cost >= fine - 1e-9
        assert r.cost - fine < 0.05
