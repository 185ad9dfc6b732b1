"""Teleoperation bridge: a fixed-rate gate+planner loop driven by operator
commands over a websocket, streaming telemetry frames back, with session
tapes for deterministic headless replay.

The simulation core (TeleopSession) is synchronous and wall-clock-free so
replays are bit-reproducible; the FastAPI layer wraps it for live use.
"""

from __future__ import annotations

import asyncio
import json
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .config import SaferConfig
from .control import METHODS, SafetyController, Simulator
from .kinematics import ControlCommand, plan_ahead_time, rollout_trajectory
from .metrics import EpisodeAccumulator, count_activations
from .mlp import Mlp
from .world import WorldModel, register_obstacles, world_to_dict

TAPE_FORMAT = 1
STALE_AFTER_SECONDS = 0.5


def _clamp(x: float) -> float:
    return max(-1.0, min(1.0, float(x)))


@dataclass(frozen=True)
class OperatorCommand:
    throttle: float
    turn: float

    @classmethod
    def clamped(cls, throttle: float, turn: float) -> "OperatorCommand":
        return cls(_clamp(throttle), _clamp(turn))


class TeleopSession:
    """One operator-driven simulation: latest-command mailbox, staleness
    decay, per-tick telemetry frames, and optional input recording."""

    def __init__(
        self,
        world: WorldModel,
        cfg: SaferConfig,
        method: str = "safer",
        actor: Mlp | None = None,
        seed: int = 0,
        record: bool = False,
        stale_after: float = STALE_AFTER_SECONDS,
    ):
        self.cfg = cfg
        self.actor = actor
        self.rng = np.random.default_rng(seed)
        self.sim = Simulator(world, cfg, rng=self.rng)
        self.controller = SafetyController(method, cfg, actor=actor, rng=self.rng)
        self.acc = EpisodeAccumulator(cfg.limits.t_r)
        self.tick = 0
        self.record = record
        self.tape_entries: list[dict] = []
        self._stale_ticks = max(1, round(stale_after / cfg.limits.t_r))
        self._cmd: OperatorCommand | None = None
        self._cmd_tick = -(10**9)

    @property
    def method(self) -> str:
        return self.controller.method

    def set_method(self, method: str) -> None:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
        if method in ("rl", "safer") and self.actor is None:
            raise ValueError(f"method {method!r} needs actor weights")
        self.controller = SafetyController(
            method, self.cfg, actor=self.actor, rng=self.rng
        )

    def submit(self, throttle: float, turn: float) -> None:
        """Last-writer-wins mailbox; the next tick consumes the newest."""
        self._cmd = OperatorCommand.clamped(throttle, turn)
        self._cmd_tick = self.tick
        if self.record:
            self.tape_entries.append(
                {"tick": self.tick, "throttle": self._cmd.throttle, "turn": self._cmd.turn}
            )

    def _reference(self) -> ControlCommand:
        stale = self._cmd is None or self.tick - self._cmd_tick > self._stale_ticks
        if stale:
            return ControlCommand(0.0, 0.0, kind="upstream-reference")
        return ControlCommand(
            self._cmd.throttle * self.cfg.limits.v_max,
            self._cmd.turn * self.cfg.limits.omega_max,
            kind="upstream-reference",
        )

    def step(self) -> dict:
        """One control period; returns the telemetry frame for this tick."""
        upstream = self._reference()
        scan = self.sim.sense()
        state = self.sim.state
        record = self.controller.decide(state, scan, upstream)
        obstacles = register_obstacles(scan)
        collided = self.sim.apply(record.emitted)
        self.acc.add_cycle(
            record.stage, record.sigma, record.emitted.v, record.emitted.omega,
            record.latency,
        )
        self.acc.add_contact(collided)

        t_p = plan_ahead_time(record.emitted.v, self.cfg.limits)
        traj = rollout_trajectory(
            record.emitted.v, record.emitted.omega,
            self.cfg.gate.beta * t_p, self.cfg.limits.t_r,
        )
        window = None
        if record.search is not None and record.search.window is not None:
            w = record.search.window
            window = {"v_lower": w.v_lower, "v_upper": w.v_upper,
                      "omega_lower": w.omega_lower, "omega_upper": w.omega_upper}

        frame = {
            "type": "frame",
            "tick": self.tick,
            "sim_time": round(self.sim.sim_time, 9),
            "pose": {"x": state.x, "y": state.y, "theta": state.theta,
                     "v": state.v, "omega": state.omega},
            "lidar_points": [[round(x, 6), round(y, 6)] for x, y in obstacles[:360]],
            "stage": record.stage,
            "sigma": record.sigma,
            "upstream": {"v": upstream.v, "omega": upstream.omega},
            "emitted": {"v": record.emitted.v, "omega": record.emitted.omega},
            "trajectory": [[round(x, 6), round(y, 6)] for x, y in traj.positions],
            "window": window,
            "collided": collided,
            "metrics": {
                "steps": len(self.acc.commands),
                "collisions": self.acc.collisions,
                "sigma_activations": count_activations(self.acc.sigmas),
                "avg_speed": round(float(np.mean([abs(v) for v, _ in self.acc.commands])), 6),
            },
        }
        self.tick += 1
        return frame

    def finalize(self, success: bool = False):
        return self.acc.finalize(success)


# -- session tapes ----------------------------------------------------------


def save_tape(path: str, session: TeleopSession, seed: int, method: str) -> None:
    doc = {
        "format": TAPE_FORMAT,
        "seed": seed,
        "method": method,
        "entries": session.tape_entries,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_tape(path: str) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != TAPE_FORMAT:
        raise ValueError(f"unsupported tape format: {doc.get('format')!r}")
    return doc


def replay_session(
    tape: dict,
    world: WorldModel,
    cfg: SaferConfig,
    ticks: int,
    actor: Mlp | None = None,
    method: str | None = None,
) -> tuple[list[dict], TeleopSession]:
    """Drive a fresh session headlessly from a tape; deterministic given the
    same (tape, seed, world, config)."""
    session = TeleopSession(
        world, cfg, method=method or tape.get("method", "safer"),
        actor=actor, seed=tape["seed"],
    )
    by_tick: dict[int, dict] = {}
    for entry in tape["entries"]:
        by_tick[entry["tick"]] = entry  # last writer wins within a tick
    frames = []
    for t in range(ticks):
        if t in by_tick:
            e = by_tick[t]
            session.submit(e["throttle"], e["turn"])
        frames.append(session.step())
    return frames, session


# -- network layer ----------------------------------------------------------


def create_app(session: TeleopSession, rate_hz: float = 10.0):
    """FastAPI app exposing GET /world and the duplex /ws channel, with the
    simulation loop as a background task.  Slow clients drop frames; they
    never backpressure the loop."""
    from contextlib import asynccontextmanager

    queues: dict[int, asyncio.Queue] = {}

    async def sim_loop():
        period = 1.0 / rate_hz
        loop = asyncio.get_running_loop()
        next_at = loop.time()
        while True:
            frame = session.step()
            text = json.dumps(frame)
            for queue in list(queues.values()):
                if queue.full():
                    try:
                        queue.get_nowait()  # drop the stale frame
                    except asyncio.QueueEmpty:
                        pass
                queue.put_nowait(text)
            next_at += period
            await asyncio.sleep(max(0.0, next_at - loop.time()))

    @asynccontextmanager
    async def lifespan(app):
        task = asyncio.create_task(sim_loop())
        yield
        task.cancel()

    app = FastAPI(lifespan=lifespan)
    app.state.session = session
    app.state.queues = queues

    @app.get("/world")
    def get_world():
        doc = world_to_dict(session.sim.world)
        doc["meta"] = {
            "v_max": session.cfg.limits.v_max,
            "omega_max": session.cfg.limits.omega_max,
            "t_r": session.cfg.limits.t_r,
            "footprint_radius": session.cfg.footprint.radius,
            "method": session.method,
        }
        return doc

    async def sender(ws: WebSocket, queue: asyncio.Queue):
        while True:
            await ws.send_text(await queue.get())

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        queue: asyncio.Queue = asyncio.Queue(maxsize=1)
        app.state.queues[id(ws)] = queue
        send_task = asyncio.create_task(sender(ws, queue))
        try:
            while True:
                text = await ws.receive_text()
                try:
                    msg = json.loads(text)
                    mtype = msg.get("type")
                    if mtype == "cmd":
                        session.submit(msg["throttle"], msg["turn"])
                    elif mtype == "set_method":
                        session.set_method(msg["method"])
                    else:
                        raise ValueError(f"unknown message type {mtype!r}")
                except (ValueError, KeyError, TypeError) as exc:
                    await ws.send_text(json.dumps({"type": "error", "msg": str(exc)}))
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            app.state.queues.pop(id(ws), None)

    return app


def serve_teleop(
    bind: tuple[str, int],
    world: WorldModel,
    cfg: SaferConfig,
    method: str = "safer",
    actor: Mlp | None = None,
    seed: int = 0,
    rate_hz: float = 10.0,
) -> None:
    """Run the bridge until interrupted."""
    import uvicorn

    session = TeleopSession(world, cfg, method=method, actor=actor, seed=seed, record=True)
    app = create_app(session, rate_hz=rate_hz)
    uvicorn.run(app, host=bind[0], port=bind[1], log_level="warning")
