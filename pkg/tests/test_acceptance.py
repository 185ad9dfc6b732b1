"""Acceptance gate: one test per criterion, each emitting a single
pass/fail line with its measured values.

The trained-policy criteria share one training run (module-scoped fixture);
everything else is self-contained.
"""

import math
import time

import numpy as np
import pytest

from safer.config import SaferConfig, validate_config
from safer.gate import predict_collision
from safer.harness import run_episode, run_trials
from safer.kinematics import RobotState, focused_window, rollout_trajectory, standard_window
from safer.mlp import Mlp, mlp_params
from safer.planner import (
    NoCollisionFreeCandidate,
    action_cost,
    evaluate_costs,
    focused_search,
    standard_dwa_search,
)
from safer.sac import SacState, compute_reward
from safer.scenarios import load_scenario
from safer.server import TrainerCore
from safer.worker import LoopbackHub, WorkerSession, run_lockstep

from oracles import collision_margin, rollout_states_naive, swept_disc_collision_raster


@pytest.fixture(scope="session")
def report(request):
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def _report(name: str, ok: bool, detail: str = "") -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" -- {detail}" if detail else "")
        if reporter is not None:
            reporter.write_line(line)
        else:
            print(line)
        assert ok, line

    return _report


CFG = SaferConfig()
LIMITS = CFG.limits
FOOT = CFG.footprint


def test_search_size_ratio(report):
    t0 = time.time()
    state = RobotState(0, 0, 0, 0.2, 0.0)
    std = standard_dwa_search(
        state, np.empty((0, 2)), 0.5, 0.0, CFG.search.n_v, CFG.search.n_omega,
        CFG.cost, CFG.gate.beta, LIMITS, FOOT,
    )
    foc = focused_search(
        0.2, 0.0, state, np.empty((0, 2)), 0.5, 0.0, CFG.search,
        CFG.cost, CFG.gate.beta, LIMITS, FOOT,
    )
    elapsed = time.time() - t0
    ok = std.candidates_evaluated == 2500 and foc.candidates_evaluated == 25 and elapsed < 1.0
    report(
        "search-size ratio",
        ok,
        f"standard={std.candidates_evaluated} (want 2500), "
        f"focused={foc.candidates_evaluated} (want 25), {elapsed:.2f}s",
    )


def test_granularity_rule(report):
    t0 = time.time()
    cfg = SaferConfig()
    ratio = cfg.search.gamma / cfg.search.delta
    _, warn_default = validate_config(cfg)
    coarse = SaferConfig()
    coarse.search.gamma = 0.5
    coarse.search.delta = 0.1
    _, warn_coarse = validate_config(coarse)
    elapsed = time.time() - t0
    warned = any("granularity" in w for w in warn_coarse)
    ok = ratio == 0.5 and not warn_default and warned and elapsed < 1.0
    report(
        "granularity rule",
        ok,
        f"default ratio={ratio} (want 0.5), default warns={bool(warn_default)}, "
        f"coarse warns={warned}, {elapsed:.2f}s",
    )


def test_collision_predicate_oracle(report):
    t0 = time.time()
    rng = np.random.default_rng(2024)
    checked = agreed = 0
    while checked < 500:
        v = rng.uniform(-LIMITS.v_max, LIMITS.v_max)
        omega = rng.uniform(-LIMITS.omega_max, LIMITS.omega_max)
        dt = rng.uniform(0.1, 0.8)
        obstacles = rng.uniform(-1, 1, size=(rng.integers(1, 6), 2))
        states = rollout_states_naive(v, omega, dt, LIMITS.t_r)
        if abs(collision_margin(states, obstacles, FOOT.radius)) < 2e-3:
            continue  # within 2 mm of the boundary, excluded
        oracle = swept_disc_collision_raster(states, obstacles, FOOT.radius)
        traj = rollout_trajectory(v, omega, dt, LIMITS.t_r)
        from safer.config import Footprint

        got = predict_collision(traj, obstacles, Footprint(FOOT.radius, 0.0))
        checked += 1
        agreed += got == oracle
    elapsed = time.time() - t0
    ok = agreed == 500 and elapsed < 60.0
    report(
        "collision-predicate oracle",
        ok,
        f"{agreed}/500 non-boundary instances agree with the 1 mm swept-disc "
        f"raster, {elapsed:.1f}s (budget 60s)",
    )


def _fine_grid_min(window, n, obstacles, v_ref, omega_ref):
    """Minimum cost over an n x n grid in the window, chunked for memory."""
    v_axis = np.linspace(window.v_lower, window.v_upper, n)
    w_axis = np.linspace(window.omega_lower, window.omega_upper, n)
    vv, ww = np.meshgrid(v_axis, w_axis, indexing="ij")
    v_flat, w_flat = vv.ravel(), ww.ravel()
    best = math.inf
    for i in range(0, len(v_flat), 5000):
        costs = evaluate_costs(
            v_flat[i : i + 5000], w_flat[i : i + 5000], obstacles,
            v_ref, omega_ref, CFG.cost, CFG.gate.beta, LIMITS, FOOT,
        )
        finite = costs[np.isfinite(costs)]
        if len(finite):
            best = min(best, float(finite.min()))
    return best


def _neighbor_slack(window, n_v, n_omega, obstacles, v_ref, omega_ref):
    """Largest cost change between adjacent coarse-grid candidates: the
    Lipschitz-style bound on how much the fine-grid optimum can undercut
    the best coarse node within one cell."""
    v_axis = np.linspace(window.v_lower, window.v_upper, n_v)
    w_axis = np.linspace(window.omega_lower, window.omega_upper, n_omega)
    vv, ww = np.meshgrid(v_axis, w_axis, indexing="ij")
    costs = evaluate_costs(
        vv.ravel(), ww.ravel(), obstacles, v_ref, omega_ref,
        CFG.cost, CFG.gate.beta, LIMITS, FOOT,
    ).reshape(n_v, n_omega)
    with np.errstate(invalid="ignore"):
        dv = np.abs(np.diff(costs, axis=0))
        dw = np.abs(np.diff(costs, axis=1))
    diffs = np.concatenate([dv[np.isfinite(dv)], dw[np.isfinite(dw)]])
    return float(diffs.max()) if len(diffs) else 0.0


def _random_scene(rng):
    state = RobotState(0, 0, 0, rng.uniform(0, 0.5), rng.uniform(-0.5, 0.5))
    n_obs = rng.integers(5, 30)
    obstacles = rng.uniform([-0.5, -1.5], [2.0, 1.5], size=(n_obs, 2))
    keep = np.hypot(obstacles[:, 0], obstacles[:, 1]) > FOOT.radius + FOOT.inflation + 0.05
    return state, obstacles[keep]


def test_search_optimality(report):
    t0 = time.time()
    rng = np.random.default_rng(7)
    scenes = 0
    worst_std = worst_foc = 0.0
    while scenes < 20:
        state, obstacles = _random_scene(rng)
        try:
            std = standard_dwa_search(
                state, obstacles, 0.5, 0.0, CFG.search.n_v, CFG.search.n_omega,
                CFG.cost, CFG.gate.beta, LIMITS, FOOT,
            )
        except NoCollisionFreeCandidate:
            continue
        window = standard_window(state, LIMITS)
        fine = _fine_grid_min(window, 500, obstacles, 0.5, 0.0)
        slack = _neighbor_slack(window, CFG.search.n_v, CFG.search.n_omega,
                                obstacles, 0.5, 0.0)
        gap = std.cost - fine
        assert gap >= -1e-9
        assert gap <= slack + 1e-9, f"standard search gap {gap} > slack {slack}"
        worst_std = max(worst_std, gap - slack)

        v_s = float(np.clip(state.v + rng.uniform(-0.1, 0.1), -0.5, 0.5))
        omega_s = float(np.clip(state.omega + rng.uniform(-0.2, 0.2), -1, 1))
        try:
            foc = focused_search(
                v_s, omega_s, state, obstacles, 0.5, 0.0, CFG.search,
                CFG.cost, CFG.gate.beta, LIMITS, FOOT,
            )
        except NoCollisionFreeCandidate:
            continue
        fwin = focused_window(v_s, omega_s, CFG.search.gamma, LIMITS)
        fine_f = _fine_grid_min(fwin, 500, obstacles, 0.5, 0.0)
        slack_f = _neighbor_slack(fwin, 5, 5, obstacles, 0.5, 0.0)
        gap_f = foc.cost - fine_f
        assert gap_f >= -1e-9
        assert gap_f <= slack_f + 1e-9, f"focused search gap {gap_f} > slack {slack_f}"
        worst_foc = max(worst_foc, gap_f - slack_f)
        scenes += 1
    elapsed = time.time() - t0
    ok = scenes == 20 and elapsed < 300.0
    report(
        "search optimality",
        ok,
        f"{scenes}/20 scenes within one-cell slack of the 500x500 fine grid "
        f"(standard and focused), {elapsed:.1f}s (budget 300s)",
    )


def test_gradient_check(report):
    t0 = time.time()
    rng = np.random.default_rng(11)
    net = Mlp.create([367, 64, 2], rng)
    x = rng.normal(size=(4, 367))
    probe = rng.normal(size=(4, 2))

    def loss():
        out, _ = net.forward(x)
        return float((out * probe).sum())

    _, cache = net.forward(x)
    gw, gb, _ = net.backward(cache, probe)
    analytic = gw + gb
    params = mlp_params(net)
    h = 1e-5
    worst = 0.0
    for _ in range(100):
        li = int(rng.integers(0, len(params)))
        p = params[li]
        idx = tuple(int(rng.integers(0, s)) for s in p.shape)
        p[idx] += h
        up = loss()
        p[idx] -= 2 * h
        down = loss()
        p[idx] += h
        fd = (up - down) / (2 * h)
        an = analytic[li][idx]
        rel = abs(an - fd) / max(abs(fd), 1e-8)
        worst = max(worst, rel)
    elapsed = time.time() - t0
    ok = worst < 1e-4 and elapsed < 60.0
    report(
        "gradient check",
        ok,
        f"100 random coordinates of a 367-64-2 network, worst relative "
        f"error {worst:.2e} (tolerance 1e-4), {elapsed:.1f}s",
    )


def test_sac_sanity(report):
    from safer.config import SacConfig
    from safer.mlp import polyak_update
    from safer.sac import Batch, sac_update

    t0 = time.time()
    rng = np.random.default_rng(5)
    cfg = SacConfig(hidden=(32, 32), lr=3e-3, tau=1.0)
    state = SacState.create(cfg, rng)
    s = rng.normal(size=367)
    a = np.array([0.3, -0.2])
    r = -4.0
    batch = Batch(
        s=np.tile(s, (16, 1)), a=np.tile(a, (16, 1)), r=np.full(16, r),
        s_next=np.tile(s, (16, 1)), done=np.full(16, True),
        sigma_next=np.zeros(16, dtype=np.int8),
    )
    sa = np.concatenate([s, a])[None, :]
    td = math.inf
    updates = 0
    for updates in range(1, 2001):
        sac_update(state, batch, cfg, rng)
        td = max(abs(float(state.critic1.forward(sa)[0][0, 0]) - r),
                 abs(float(state.critic2.forward(sa)[0][0, 0]) - r))
        if td < 1e-3:
            break

    # exact identities: tau=1 Polyak copies bitwise; terminal target is r
    src = Mlp.create([3, 2], np.random.default_rng(0))
    dst = Mlp.create([3, 2], np.random.default_rng(1))
    polyak_update(dst, src, 1.0)
    polyak_exact = all(
        np.array_equal(x, y)
        for x, y in zip(src.weights + src.biases, dst.weights + dst.biases)
    )
    targets_track = all(
        np.array_equal(x, y)
        for t, c in ((state.target1, state.critic1), (state.target2, state.critic2))
        for x, y in zip(t.weights + t.biases, c.weights + c.biases)
    )
    elapsed = time.time() - t0
    ok = td < 1e-3 and updates <= 2000 and polyak_exact and targets_track and elapsed < 120.0
    report(
        "sac sanity",
        ok,
        f"single-transition TD error {td:.1e} after {updates} updates "
        f"(limit 2000), tau=1 identities exact={polyak_exact and targets_track}, "
        f"{elapsed:.1f}s",
    )


def test_cost_and_reward_arithmetic(report):
    t0 = time.time()
    r = compute_reward(1, 0.5, 35.0, 10.0)
    # obstacle directly behind a forward-moving candidate: the sampled
    # distance is exactly 2.0 at the first rollout state, so
    # J = 0.4*(0.5-0.3) + 0.2*(0.2+0.1) + 0.4/2.0 = 0.34 exactly
    j = action_cost(
        0.3, 0.1, 0.5, 0.0, np.array([[-2.0, 0.0]]),
        CFG.cost, CFG.gate.beta, LIMITS, FOOT,
    )
    elapsed = time.time() - t0
    ok = r == -40.0 and j == pytest.approx(0.34, abs=1e-12) and elapsed < 1.0
    report(
        "cost and reward arithmetic",
        ok,
        f"reward(sigma=1, J=0.5)={r} (want -40.0), worked-example cost={j:.6f} "
        f"(want 0.34), {elapsed:.2f}s",
    )


def _lockstep_run(seed: int, total_steps: int):
    cfg = SaferConfig()
    cfg.sac.hidden = (64, 64)
    cfg.sac.batch_size = 64
    cfg.sac.collect_all_cycles = True
    cfg.schedule.min_buffer_before_training = 256
    cfg.schedule.publish_every = 20
    scenario = load_scenario("scenarios/crash_session.json")
    core = TrainerCore(cfg, seed=seed)
    hub = LoopbackHub(core)
    workers = [
        WorkerSession(f"w{i}", scenario, cfg, hub.transport(),
                      seed=seed + 1000 * (i + 1), episodes=10**6, ship_every=16)
        for i in range(2)
    ]
    summaries = run_lockstep(core, workers, total_steps)
    return core, summaries


def test_distributed_round_trip(report, tmp_path):
    t0 = time.time()
    core_a, summaries = _lockstep_run(seed=42, total_steps=2000)
    versions = [s["actor_version"] for s in summaries]
    core_b, _ = _lockstep_run(seed=42, total_steps=2000)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    core_a.checkpoint(str(a))
    core_b.checkpoint(str(b))
    identical = a.read_bytes() == b.read_bytes()
    elapsed = time.time() - t0
    ok = (
        versions[0] == versions[1] == core_a.version
        and core_a.version >= 1
        and identical
        and elapsed < 300.0
    )
    report(
        "distributed round trip",
        ok,
        f"2 lockstep workers over 2000 steps: versions {versions} "
        f"(server {core_a.version}), replayed checkpoint identical={identical}, "
        f"{elapsed:.1f}s (budget 300s)",
    )


# -- trained-policy criteria ------------------------------------------------

TRAIN_STEPS = 50_000
EVAL_EPISODES = 20
TRIALS = 30


def _sigma_rate(actor, scenario, cfg, n_episodes, seed):
    # Evaluated with the stochastic policy, i.e. the policy as it acts
    # while training; the deterministic untrained policy collapses to a
    # near-zero crawl, which says nothing about what training changed.
    activations = eligible = 0
    for k in range(n_episodes):
        m = run_episode("safer", scenario, seed + k, cfg, actor=actor, stochastic=True)
        activations += m.max_braking_count
        eligible += m.avoid_cycles + m.sigma_cycles
    return 100.0 * activations / max(eligible, 1)


def _training_config():
    cfg = SaferConfig()
    cfg.sac.hidden = (64, 64)
    cfg.sac.batch_size = 128
    cfg.sac.collect_all_cycles = True
    cfg.sac.target_entropy = -4.0
    cfg.sac.init_alpha = 0.05
    cfg.schedule.min_buffer_before_training = 500
    cfg.schedule.updates_per_ingested_batch = 8
    cfg.schedule.publish_every = 100
    return cfg


@pytest.fixture(scope="module")
def training_run():
    cfg = _training_config()
    scenario = load_scenario("scenarios/training_course.json")
    untrained = SacState.create(cfg.sac, np.random.default_rng(123)).actor
    core = TrainerCore(cfg, seed=0)
    hub = LoopbackHub(core)
    workers = [
        WorkerSession(
            f"trainer-w{i}", scenario, cfg, hub.transport(), seed=i,
            episodes=10**6, ship_every=32,
        )
        for i in range(2)
    ]
    t0 = time.time()
    run_lockstep(core, workers, TRAIN_STEPS)
    train_seconds = time.time() - t0
    return {
        "cfg": cfg,
        "untrained": untrained,
        "trained": core.state.actor,
        "train_seconds": train_seconds,
        "updates": core.step,
    }


def test_learning_trend(report, training_run):
    t0 = time.time()
    cfg = training_run["cfg"]
    # The sigma comparison runs under the adversarial chauffeur driver on a
    # static world: with a benign upstream the gate almost never needs
    # maximum braking whatever the policy does, and a moving walker forces
    # braking on trained and untrained policies alike, so neither setting
    # can show what training changed.
    stress = load_scenario("scenarios/doorway_stress.json")
    doorway = load_scenario("scenarios/tight_doorway.json")

    rate_before = _sigma_rate(training_run["untrained"], stress, cfg, EVAL_EPISODES, 9000)
    rate_after = _sigma_rate(training_run["trained"], stress, cfg, EVAL_EPISODES, 9000)
    drop = 100.0 * (rate_before - rate_after) / max(rate_before, 1e-9)

    safer_row, _ = run_trials("safer", doorway, TRIALS, 500, cfg,
                              actor=training_run["trained"])
    aeb_row, _ = run_trials("aeb", doorway, TRIALS, 500, cfg)
    total = training_run["train_seconds"] + time.time() - t0
    ok = (
        drop >= 40.0
        and safer_row["successes"] > aeb_row["successes"]
        and total < 1800.0
    )
    report(
        "learning trend",
        ok,
        f"{TRAIN_STEPS} training steps ({training_run['updates']} updates): "
        f"braking activations per 100 avoidance cycles {rate_before:.1f} -> "
        f"{rate_after:.1f} ({drop:.0f}% drop, need >= 40%), doorway successes "
        f"trained {safer_row['successes']} vs braking-only {aeb_row['successes']} "
        f"over {TRIALS} trials, total {total:.0f}s (budget 1800s)",
    )


def test_direction_of_effect(report, training_run):
    cfg = training_run["cfg"]
    trained = training_run["trained"]
    doorway = load_scenario("scenarios/tight_doorway.json")
    encounter = load_scenario("scenarios/human_encounter.json")

    rows = {}
    for method, actor in (("safer", trained), ("dwa", None), ("aeb", None)):
        rows[method], _ = run_trials(method, doorway, TRIALS, 500, cfg, actor=actor)
    enc = {}
    for method, actor in (("safer", trained), ("dwa", None)):
        enc[method], _ = run_trials(method, encounter, TRIALS, 500, cfg, actor=actor)

    succ = {m: rows[m]["successes"] for m in rows}
    door_col = {m: rows[m]["collisions"] for m in ("safer", "dwa")}
    enc_col = {m: enc[m]["collisions"] for m in enc}
    ok = (
        succ["safer"] >= succ["dwa"] >= succ["aeb"]
        and door_col["safer"] <= door_col["dwa"]
        and enc_col["safer"] <= enc_col["dwa"]
    )
    report(
        "direction of effect",
        ok,
        f"doorway successes safer={succ['safer']} dwa={succ['dwa']} "
        f"aeb={succ['aeb']} (need safer >= dwa >= aeb); collisions "
        f"doorway safer={door_col['safer']} dwa={door_col['dwa']}, "
        f"encounter safer={enc_col['safer']} dwa={enc_col['dwa']} "
        f"(need safer <= dwa on both)",
    )


# -- secondary component ----------------------------------------------------

def _frontend_dir():
    import pathlib

    return pathlib.Path(__file__).resolve().parent.parent / "frontend"


@pytest.fixture(scope="session")
def frontend_build():
    import shutil
    import subprocess

    root = _frontend_dir()
    if shutil.which("node") is None:
        pytest.skip("node unavailable")
    if not (root / "node_modules" / "typescript").exists():
        subprocess.run(
            ["npm", "install", "--no-audit", "--no-fund"],
            cwd=root, check=True, capture_output=True,
        )
    subprocess.run(["npx", "tsc"], cwd=root, check=True, capture_output=True)
    return root


def _run_node(root, script, payload):
    import json
    import subprocess

    proc = subprocess.run(
        ["node", str(root / "tools" / script)],
        input=json.dumps(payload), capture_output=True, text=True,
        cwd=root, check=True,
    )
    return proc.stdout


def test_ui_contract(report, frontend_build):
    import json

    from fastapi.testclient import TestClient

    from safer.teleop import TeleopSession, create_app
    from safer.world import WorldModel

    t0 = time.time()
    cfg = SaferConfig()
    session = TeleopSession(WorldModel(spawn=(0.0, 0.0, 0.0)), cfg, method="aeb", seed=0)
    app = create_app(session, rate_hz=10.0)

    duration = 60.0
    ticks = set()
    with TestClient(app) as client:
        with client.websocket_connect("/ws") as ws:
            start = time.time()
            first = ws.receive_json()
            ticks.add(first["tick"])
            while time.time() - start < duration:
                frame = ws.receive_json()
                ticks.add(frame["tick"])
    span = max(ticks) - min(ticks) + 1
    ratio = len(ticks) / span

    device_sequence = []
    rng = np.random.default_rng(77)
    for i in range(200):
        if i % 3 == 0:
            device_sequence.append({"keys": ["arrowup"], "axes": None})
        elif i % 3 == 1:
            device_sequence.append({"keys": ["w", "a"], "axes": None})
        else:
            device_sequence.append(
                {"keys": [], "axes": [float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1))]}
            )
    brake_frame = {
        "type": "frame", "tick": 1, "sim_time": 0.1,
        "pose": {"x": 0, "y": 0, "theta": 0, "v": 0.1, "omega": 0},
        "lidar_points": [[0.4, 0.0]], "stage": "Brake", "sigma": 1,
        "upstream": {"v": 0.5, "omega": 0}, "emitted": {"v": 0.0, "omega": 0},
        "trajectory": [], "window": None, "collided": False,
        "metrics": {"steps": 1, "collisions": 0, "sigma_activations": 1, "avg_speed": 0.1},
    }
    calm_frame = dict(brake_frame, stage="Maintain", sigma=0, lidar_points=[])
    out_obstacles = _run_node(
        frontend_build, "cmd_stream.mjs",
        {"device_sequence": device_sequence, "frames": [brake_frame]},
    )
    out_calm = _run_node(
        frontend_build, "cmd_stream.mjs",
        {"device_sequence": device_sequence, "frames": [calm_frame]},
    )
    pure = out_obstacles == out_calm
    cmds = json.loads(out_obstacles)
    well_formed = all(
        c["type"] == "cmd" and -1 <= c["throttle"] <= 1 and -1 <= c["turn"] <= 1
        for c in cmds
    )
    elapsed = time.time() - t0
    ok = ratio >= 0.95 and pure and well_formed and elapsed < duration + 60.0
    report(
        "ui contract",
        ok,
        f"received {len(ticks)}/{span} distinct frames over {duration:.0f}s "
        f"({100 * ratio:.1f}%, need >= 95%), cmd stream identical across "
        f"obstacle and calm telemetry={pure}, {elapsed:.0f}s",
    )


def test_gate_stage_visualization(report, frontend_build, tmp_path):
    import csv

    from safer.harness import write_csv
    from safer.metrics import aggregate_row
    from safer.teleop import TeleopSession, load_tape, replay_session, save_tape
    from safer.world import Segment, WorldModel

    def wall():
        return WorldModel(segments=(Segment(2.0, -5, 2.0, 5),), spawn=(0.0, 0.0, 0.0))

    cfg = SaferConfig()
    session = TeleopSession(wall(), cfg, method="aeb", seed=3, record=True)
    for _ in range(120):
        session.submit(1.0, 0.0)
        session.step()
    tape_path = tmp_path / "brake.tape.json"
    save_tape(str(tape_path), session, seed=3, method="aeb")

    frames, replayed = replay_session(load_tape(str(tape_path)), wall(), cfg, ticks=120)
    metrics = replayed.finalize(False)
    csv_path = tmp_path / "row.csv"
    write_csv(str(csv_path), [aggregate_row("aeb", "brake-tape", [metrics], 3)])
    with open(csv_path) as fh:
        harness_count = int(list(csv.DictReader(fh))[0]["max_braking"])

    ui_count = int(_run_node(frontend_build, "sigma_count.mjs", frames))
    ok = harness_count == ui_count and harness_count >= 1
    report(
        "gate-stage visualization",
        ok,
        f"tape with known Brake cycles: UI sigma-activation count {ui_count}, "
        f"harness CSV value {harness_count} (must be equal and >= 1)",
    )


def test_pass_through_fidelity(report):
    from safer.teleop import TeleopSession, replay_session
    from safer.world import WorldModel

    t0 = time.time()
    cfg = SaferConfig()
    actor = SacState.create(cfg.sac, np.random.default_rng(0)).actor
    world = WorldModel(spawn=(0.0, 0.0, 0.0))

    rng = np.random.default_rng(31)
    session = TeleopSession(world, cfg, method="safer", actor=actor, seed=1, record=True)
    for _ in range(100):
        session.submit(float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)))
        session.step()
    tape = {"format": 1, "seed": 1, "method": "safer", "entries": session.tape_entries}
    frames, _ = replay_session(tape, WorldModel(spawn=(0.0, 0.0, 0.0)), cfg,
                               ticks=100, actor=actor)

    exact = all(
        f["emitted"]["v"] == f["upstream"]["v"]
        and f["emitted"]["omega"] == f["upstream"]["omega"]
        and f["stage"] == "Maintain"
        for f in frames
    )
    references = [
        (e["throttle"] * cfg.limits.v_max, e["turn"] * cfg.limits.omega_max)
        for e in tape["entries"]
    ]
    emitted = [(f["emitted"]["v"], f["emitted"]["omega"]) for f in frames]
    matches_refs = emitted == references
    elapsed = time.time() - t0
    ok = exact and matches_refs and elapsed < 30.0
    report(
        "pass-through fidelity",
        ok,
        f"100 obstacle-free teleop cycles: emitted equals the operator "
        f"reference bitwise={exact and matches_refs}, {elapsed:.1f}s",
    )
