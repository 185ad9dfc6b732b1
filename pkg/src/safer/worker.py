"""Worker side of the distributed loop: runs the simulation control cycle,
collects experience on avoidance cycles, ships batches to the trainer, and
swaps in broadcast actor weights atomically between cycles.
"""

from __future__ import annotations

import select
import socket
import time

import numpy as np

from .config import SaferConfig
from .control import SafetyController, Simulator
from .harness import ExperienceCollector
from .mlp import Mlp
from .protocol import (
    FrameDecoder,
    encode_message,
    experience_batch,
    experience_to_wire,
    hello,
    policy_from_update,
)
from .sac import ACT_DIM, OBS_DIM
from .scenarios import Scenario, make_driver, randomized_spawn, success_reached
from .world import register_obstacles


class LoopbackHub:
    """In-process stand-in for the TCP fabric: transports call the trainer
    core directly and synchronously, which makes single-threaded lockstep
    runs bit-reproducible.  Publishes fan out to every attached transport,
    mirroring the TCP broadcast."""

    def __init__(self, core):
        self.core = core
        self.transports: list[LoopbackTransport] = []

    def transport(self) -> "LoopbackTransport":
        t = LoopbackTransport(self)
        self.transports.append(t)
        return t

    def broadcast(self, msg: dict) -> None:
        for t in self.transports:
            t._inbox.append(msg)


class LoopbackTransport:
    def __init__(self, hub: LoopbackHub):
        self._hub = hub
        self._inbox: list[dict] = []

    def connect(self, hello_msg: dict) -> None:
        self._inbox.append(self._hub.core.policy_message())

    def send_batch(self, msg: dict) -> None:
        reply, publish = self._hub.core.handle_batch(msg)
        self._inbox.append(reply)
        if publish is not None:
            self._hub.broadcast(publish)

    def poll(self, timeout: float = 0.0) -> list[dict]:
        out = self._inbox
        self._inbox = []
        return out

    def close(self) -> None:
        pass


class TcpTransport:
    """Socket client with reconnect and at-least-once batch delivery.

    Sent batches stay in an unacked map keyed by sequence number; on
    reconnect the transport re-introduces itself with a Hello and replays
    everything unacknowledged (the server tolerates duplicates).
    """

    def __init__(
        self,
        address: tuple[str, int],
        backoff_initial: float = 0.1,
        backoff_max: float = 2.0,
        max_attempts: int = 20,
    ):
        self.address = address
        self.backoff_initial = backoff_initial
        self.backoff_max = backoff_max
        self.max_attempts = max_attempts
        self._sock: socket.socket | None = None
        self._decoder = FrameDecoder()
        self._hello: dict | None = None
        self._unacked: dict[int, dict] = {}

    def connect(self, hello_msg: dict) -> None:
        self._hello = hello_msg
        self._reconnect()

    def _reconnect(self) -> None:
        if self._sock is not None:
            self._sock.close()
            self._sock = None
        self._decoder = FrameDecoder()
        delay = self.backoff_initial
        for attempt in range(self.max_attempts):
            try:
                self._sock = socket.create_connection(self.address, timeout=5.0)
                break
            except OSError:
                time.sleep(delay)
                delay = min(delay * 2.0, self.backoff_max)
        if self._sock is None:
            raise ConnectionError(f"could not reach trainer at {self.address}")
        self._sock.setblocking(False)
        self._raw_send(encode_message(self._hello))
        for seq in sorted(self._unacked):
            self._raw_send(encode_message(self._unacked[seq]))

    def _raw_send(self, frame: bytes) -> None:
        assert self._sock is not None
        self._sock.setblocking(True)
        try:
            self._sock.sendall(frame)
        finally:
            self._sock.setblocking(False)

    def send_batch(self, msg: dict) -> None:
        self._unacked[msg["seq"]] = msg
        try:
            self._raw_send(encode_message(msg))
        except OSError:
            self._reconnect()

    def poll(self, timeout: float = 0.0) -> list[dict]:
        if self._sock is None:
            return []
        out: list[dict] = []
        while True:
            ready, _, _ = select.select([self._sock], [], [], timeout)
            timeout = 0.0
            if not ready:
                break
            try:
                data = self._sock.recv(65536)
            except BlockingIOError:
                break
            except OSError:
                self._reconnect()
                break
            if not data:
                self._reconnect()
                break
            msgs = self._decoder.feed(data)
            for msg in msgs:
                if msg["type"] == "ack":
                    self._unacked.pop(msg["last_seq"], None)
            out.extend(msgs)
        return out

    @property
    def unacked_count(self) -> int:
        return len(self._unacked)

    def close(self) -> None:
        if self._sock is not None:
            self._sock.close()
            self._sock = None


class WorkerSession:
    """One worker's control loop over repeated scenario episodes.

    Each cycle: apply the newest broadcast actor (atomically, between
    cycles), run one control period, hand the cycle to the experience
    collector, and ship a batch every ``ship_every`` collected transitions
    tagged with the actor version that produced them.
    """

    def __init__(
        self,
        worker_id: str,
        scenario: Scenario,
        cfg: SaferConfig,
        transport,
        seed: int = 0,
        episodes: int = 1,
        ship_every: int = 32,
        method: str = "safer",
        stochastic: bool = True,
    ):
        self.worker_id = worker_id
        self.scenario = scenario
        self.cfg = cfg
        self.transport = transport
        self.seed = seed
        self.episodes = episodes
        self.ship_every = ship_every
        self.method = method
        self.stochastic = stochastic

        self._seq = 0
        self._actor: Mlp | None = None
        self._incoming_actor: Mlp | None = None
        self._template = Mlp.create(
            [OBS_DIM] + list(cfg.sac.hidden) + [2 * ACT_DIM], np.random.default_rng(0)
        )
        self._pending: list[dict] = []
        self._versions_used: list[int] = []
        self.steps = 0
        self.experiences_shipped = 0
        self.batches_shipped = 0
        self.collisions = 0
        self._episode_idx = 0
        self._sim: Simulator | None = None
        self._controller: SafetyController | None = None
        self._collector: ExperienceCollector | None = None
        self._driver = None
        self._episode_step = 0
        self.finished = False

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    # -- wiring -------------------------------------------------------------

    def connect(self, timeout: float = 10.0) -> None:
        self.transport.connect(hello(self.worker_id, self._next_seq()))
        deadline = time.monotonic() + timeout
        while self._incoming_actor is None:
            self._drain(timeout=0.1)
            if time.monotonic() > deadline:
                raise TimeoutError("no initial policy received from the trainer")
        self._swap_actor()
        self._begin_episode()

    def _drain(self, timeout: float = 0.0) -> None:
        for msg in self.transport.poll(timeout=timeout):
            if msg["type"] == "policy_update":
                candidate = policy_from_update(msg, self._template)
                if (
                    self._incoming_actor is None
                    or candidate.version >= self._incoming_actor.version
                ):
                    self._incoming_actor = candidate

    def _swap_actor(self) -> None:
        if self._incoming_actor is None:
            return
        if self._actor is None or self._incoming_actor.version > self._actor.version:
            self._actor = self._incoming_actor
            if self._controller is not None:
                self._controller.set_actor(self._actor)
        self._incoming_actor = None

    def _begin_episode(self) -> None:
        rng = np.random.default_rng(self.seed + self._episode_idx)
        world = self.scenario.load_world()
        spawn = randomized_spawn(world, self.scenario, rng)
        self._sim = Simulator(world, self.cfg, spawn=spawn, rng=rng)
        self._controller = SafetyController(
            self.method, self.cfg, actor=self._actor, rng=rng, stochastic=self.stochastic
        )
        self._driver = make_driver(self.scenario.driver, self.cfg.limits)
        self._collector = ExperienceCollector(self.cfg, self._sink)
        self._episode_step = 0

    def _sink(self, transition: tuple) -> None:
        self._pending.append(experience_to_wire(*transition))
        self._versions_used.append(self._actor.version if self._actor else 0)

    # -- the control loop ---------------------------------------------------

    def step(self) -> None:
        """One control cycle (one t_r of simulated time)."""
        if self.finished:
            return
        self._drain()
        self._swap_actor()

        sim = self._sim
        scan = sim.sense()
        upstream = self._driver(sim.sim_time, scan)
        record = self._controller.decide(sim.state, scan, upstream)
        obstacles = register_obstacles(scan)
        record.executed_cost = sim.executed_action_cost(record, obstacles)
        collided = sim.apply(record.emitted)
        if collided:
            self.collisions += 1
        success = not collided and success_reached(self.scenario, sim.state)
        done = collided or success or self._episode_step == self.scenario.step_cap - 1
        self._collector(record, obstacles, sim.state, collided, done)
        self.steps += 1
        self._episode_step += 1

        if len(self._pending) >= self.ship_every:
            self.flush()
        if done:
            self.flush()
            self._episode_idx += 1
            if self._episode_idx >= self.episodes:
                self.finished = True
            else:
                self._begin_episode()

    def flush(self) -> None:
        """Ship everything pending, one batch per actor version used."""
        while self._pending:
            version = self._versions_used[0]
            n = 0
            while n < len(self._versions_used) and self._versions_used[n] == version:
                n += 1
            batch = experience_batch(
                self.worker_id, version, self._pending[:n], self._next_seq()
            )
            del self._pending[:n]
            del self._versions_used[:n]
            self.transport.send_batch(batch)
            self.batches_shipped += 1
            self.experiences_shipped += len(batch["experiences"])

    def run(self, max_steps: int | None = None) -> dict:
        self.connect()
        while not self.finished:
            self.step()
            if max_steps is not None and self.steps >= max_steps:
                break
        self.flush()
        self._drain()
        self._swap_actor()
        return self.summary()

    def summary(self) -> dict:
        return {
            "worker_id": self.worker_id,
            "episodes": self._episode_idx,
            "steps": self.steps,
            "collisions": self.collisions,
            "experiences_shipped": self.experiences_shipped,
            "batches_shipped": self.batches_shipped,
            "actor_version": self._actor.version if self._actor else None,
        }


def run_lockstep(core, workers: list[WorkerSession], total_steps: int) -> list[dict]:
    """Serialized worker/trainer alternation for reproducible runs: workers
    take turns, one control cycle at a time, on a single thread; every
    transport call into the trainer is synchronous."""
    for w in workers:
        w.connect()
    steps = 0
    while steps < total_steps and not all(w.finished for w in workers):
        for w in workers:
            if not w.finished:
                w.step()
                steps += 1
                if steps >= total_steps:
                    break
    # Flush everyone before draining: a flush can trigger a publish, and
    # every worker must observe the final broadcast version.
    for w in workers:
        w.flush()
    for w in workers:
        w._drain()
        w._swap_actor()
    return [w.summary() for w in workers]
