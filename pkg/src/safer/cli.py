"""Command-line entry points: evaluation, training server, worker, search
bench, teleoperation bridge, and config validation.

Configuration comes from (in increasing precedence) built-in defaults, a
JSON config file with namespaced keys, and SAFER_* environment variables
(``SAFER_GATE_BETA=3`` overrides ``gate.beta``).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import SaferConfig, validate_config
from .control import METHODS
from .harness import bench_search, run_trials, write_csv
from .sac import load_checkpoint
from .scenarios import Scenario, load_scenario
from .world import load_world


def apply_env_overrides(cfg: SaferConfig, environ=os.environ) -> SaferConfig:
    """Overlay SAFER_<SECTION>_<KEY> environment variables onto a config."""
    flat = cfg.to_flat_dict()
    for key in flat:
        env_name = "SAFER_" + key.upper().replace(".", "_")
        if env_name in environ:
            raw = environ[env_name]
            try:
                flat[key] = json.loads(raw)
            except json.JSONDecodeError:
                flat[key] = raw
    return SaferConfig.from_flat_dict(flat)


def load_config(path: str | None, environ=os.environ) -> SaferConfig:
    cfg = SaferConfig.load(path) if path else SaferConfig()
    return apply_env_overrides(cfg, environ)


def _parse_address(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {text!r}")
    return host, int(port)


def _load_actor(checkpoint: str | None, method: str):
    if method not in ("rl", "safer"):
        return None
    if checkpoint is None:
        raise SystemExit(f"method {method!r} requires --checkpoint")
    state, _ = load_checkpoint(checkpoint)
    return state.actor


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    scenario = load_scenario(args.scenario)
    actor = _load_actor(args.checkpoint, args.method)
    trials = args.trials if args.trials is not None else scenario.trials
    row, _ = run_trials(args.method, scenario, trials, args.seed, cfg, actor=actor)
    if args.out:
        write_csv(args.out, [row])
    print(json.dumps(row))
    return 0


def cmd_train_server(args) -> int:
    from .server import serve_trainer

    cfg = load_config(args.config)
    if args.publish_every is not None:
        cfg.schedule.publish_every = args.publish_every
    if args.min_buffer is not None:
        cfg.schedule.min_buffer_before_training = args.min_buffer
    if args.updates_per_batch is not None:
        cfg.schedule.updates_per_ingested_batch = args.updates_per_batch
    server = serve_trainer(
        args.bind, cfg, seed=args.seed, checkpoint_dir=args.checkpoint_dir
    )
    print(f"trainer listening on {server.address[0]}:{server.address[1]}")
    try:
        import threading

        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


def cmd_worker(args) -> int:
    from .worker import TcpTransport, WorkerSession

    cfg = load_config(args.config)
    scenario = Scenario(
        name=os.path.splitext(os.path.basename(args.world))[0],
        world_path=args.world,
        success_kind="time-boxed-crash-session",
        success_region=None,
        success_line_x=None,
        step_cap=args.step_cap,
        trials=1,
        spawn_theta_jitter=args.spawn_theta_jitter,
        driver=args.policy,
    )
    session = WorkerSession(
        args.worker_id, scenario, cfg, TcpTransport(args.server),
        seed=args.seed, episodes=args.episodes,
    )
    summary = session.run()
    print(json.dumps(summary))
    return 0


def cmd_bench(args) -> int:
    cfg = load_config(args.config)
    scenario = load_scenario(args.scenario)
    out = bench_search(cfg, scenario, seed=args.seed, n_fixtures=args.fixtures)
    print(json.dumps(out, indent=2))
    return 0


def cmd_teleop(args) -> int:
    from .teleop import serve_teleop

    cfg = load_config(args.config)
    world = load_world(args.world)
    actor = _load_actor(args.checkpoint, args.method)
    serve_teleop(
        args.bind, world, cfg, method=args.method, actor=actor,
        seed=args.seed, rate_hz=args.rate,
    )
    return 0


def cmd_validate_config(args) -> int:
    cfg = load_config(args.config)
    errors, warnings = validate_config(
        cfg,
        per_candidate_seconds=args.per_candidate_seconds,
        policy_inference_seconds=args.policy_inference_seconds,
    )
    for e in errors:
        print(f"error: {e}")
    for w in warnings:
        print(f"warning: {w}")
    if not errors and not warnings:
        print("config ok")
    return 1 if errors else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="safer")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="run seeded evaluation trials, write a CSV row")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("train-server", help="run the central training server")
    p.add_argument("--bind", type=_parse_address, default=("127.0.0.1", 7355))
    p.add_argument("--config", default=None)
    p.add_argument("--checkpoint-dir", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--publish-every", type=int, default=None)
    p.add_argument("--min-buffer", type=int, default=None)
    p.add_argument("--updates-per-batch", type=int, default=None)
    p.set_defaults(func=cmd_train_server)

    p = sub.add_parser("worker", help="run a simulation worker against a trainer")
    p.add_argument("--server", type=_parse_address, required=True)
    p.add_argument("--world", required=True)
    p.add_argument("--policy", default="sinusoidal",
                   choices=("sinusoidal", "chauffeur", "straight"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--step-cap", type=int, default=500)
    p.add_argument("--spawn-theta-jitter", type=float, default=0.785398)
    p.add_argument("--worker-id", default=f"worker-{os.getpid()}")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_worker)

    p = sub.add_parser("bench", help="compare standard vs focused search cost")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fixtures", type=int, default=10)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("teleop", help="serve the teleoperation bridge")
    p.add_argument("--bind", type=_parse_address, default=("127.0.0.1", 8000))
    p.add_argument("--world", required=True)
    p.add_argument("--method", choices=METHODS, default="safer")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--rate", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_teleop)

    p = sub.add_parser("validate-config", help="check a config for errors")
    p.add_argument("--config", default=None)
    p.add_argument("--per-candidate-seconds", type=float, default=None)
    p.add_argument("--policy-inference-seconds", type=float, default=0.0)
    p.set_defaults(func=cmd_validate_config)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
