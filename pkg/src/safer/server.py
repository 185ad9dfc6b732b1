"""Central training server: ingests worker experience batches into the
replay buffer, runs SAC updates on a schedule, and broadcasts versioned
actor weights to every live connection.
"""

from __future__ import annotations

import os
import socket
import threading

import numpy as np

from .config import SaferConfig
from .protocol import (
    FrameDecoder,
    ProtocolError,
    ack,
    encode_message,
    experience_from_wire,
    policy_update,
    stats,
)
from .sac import ReplayBuffer, SacState, sac_update, save_checkpoint


class TrainerCore:
    """The trainer's single-threaded logic: buffer, updates, versioning.

    Thread safety is the caller's job; the TCP server serializes access with
    one lock, and lockstep runs are single-threaded by construction.
    """

    def __init__(self, cfg: SaferConfig, seed: int = 0):
        cfg.schedule.validate()
        self.cfg = cfg
        self.schedule = cfg.schedule
        self.rng = np.random.default_rng(seed)
        self.state = SacState.create(cfg.sac, self.rng)
        self.buffer = ReplayBuffer(int(cfg.sac.buffer_capacity))
        self.last_losses: dict = {}
        self._seq = 0

    @property
    def step(self) -> int:
        return self.state.step

    @property
    def version(self) -> int:
        return self.state.actor.version

    def next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def policy_message(self) -> dict:
        return policy_update(self.state.actor, self.next_seq())

    def stats_message(self) -> dict:
        return stats(self.step, len(self.buffer), self.last_losses, self.next_seq())

    def ingest(self, experiences: list[dict]) -> int:
        for doc in experiences:
            self.buffer.push(*experience_from_wire(doc))
        return len(experiences)

    def train(self, n_updates: int | None = None) -> bool:
        """Up to n SAC updates (buffer permitting).  Returns True when a
        publish boundary was crossed, in which case the actor version has
        already been bumped."""
        if n_updates is None:
            n_updates = self.schedule.updates_per_ingested_batch
        publish = False
        for _ in range(n_updates):
            if len(self.buffer) < self.schedule.min_buffer_before_training:
                break
            batch = self.buffer.sample(self.cfg.sac.batch_size, self.rng)
            self.last_losses = sac_update(self.state, batch, self.cfg.sac, self.rng)
            if self.state.step % self.schedule.publish_every == 0:
                publish = True
        if publish:
            self.state.actor.version += 1
        return publish

    def handle_batch(self, msg: dict) -> tuple[dict, dict | None]:
        """Ingest one ExperienceBatch and train.  Returns the ack for the
        sender plus a PolicyUpdate to broadcast when one is due."""
        self.ingest(msg["experiences"])
        publish = self.train()
        reply = ack(msg.get("seq", 0), self.next_seq())
        return reply, (self.policy_message() if publish else None)

    def checkpoint(self, path: str) -> None:
        save_checkpoint(path, self.state, self.cfg.sac)


class TrainerServer:
    """Threaded TCP front end around a TrainerCore.

    One handler thread per connection; all core access goes through a single
    lock, so the trainer itself stays sequential.  Corrupt frames drop only
    the offending connection.
    """

    def __init__(
        self,
        core: TrainerCore,
        host: str = "127.0.0.1",
        port: int = 0,
        checkpoint_dir: str | None = None,
        checkpoint_every_publishes: int = 10,
    ):
        self.core = core
        self.checkpoint_dir = checkpoint_dir
        self.checkpoint_every_publishes = checkpoint_every_publishes
        self._core_lock = threading.Lock()
        self._conns: set[socket.socket] = set()
        self._conn_lock = threading.Lock()
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._publishes = 0
        self._listener = socket.create_server((host, port))
        self._listener.settimeout(0.2)

    @property
    def address(self) -> tuple[str, int]:
        return self._listener.getsockname()[:2]

    def start(self) -> None:
        t = threading.Thread(target=self._accept_loop, daemon=True)
        t.start()
        self._threads.append(t)

    def serve_forever(self) -> None:
        self._accept_loop()

    def stop(self) -> None:
        self._stop.set()
        with self._conn_lock:
            conns = list(self._conns)
        for sock in conns:
            try:
                sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            sock.close()
        self._listener.close()
        for t in self._threads:
            t.join(timeout=2.0)

    # -- internals ----------------------------------------------------------

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                sock, _ = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            t = threading.Thread(target=self._handle, args=(sock,), daemon=True)
            t.start()
            self._threads.append(t)

    def _handle(self, sock: socket.socket) -> None:
        with self._conn_lock:
            self._conns.add(sock)
        decoder = FrameDecoder()
        try:
            while not self._stop.is_set():
                data = sock.recv(65536)
                if not data:
                    break
                for msg in decoder.feed(data):
                    self._dispatch(sock, msg)
        except (ProtocolError, OSError):
            pass
        finally:
            with self._conn_lock:
                self._conns.discard(sock)
            sock.close()

    def _dispatch(self, sock: socket.socket, msg: dict) -> None:
        mtype = msg["type"]
        if mtype == "hello":
            with self._core_lock:
                reply = self.core.policy_message()
            sock.sendall(encode_message(reply))
        elif mtype == "experience_batch":
            with self._core_lock:
                reply, publish = self.core.handle_batch(msg)
            sock.sendall(encode_message(reply))
            if publish is not None:
                self._broadcast(publish)
                self._publishes += 1
                self._maybe_checkpoint()
        elif mtype == "stats":
            with self._core_lock:
                reply = self.core.stats_message()
            sock.sendall(encode_message(reply))
        # acks from workers need no reply

    def _broadcast(self, msg: dict) -> None:
        frame = encode_message(msg)
        with self._conn_lock:
            conns = list(self._conns)
        for sock in conns:
            try:
                sock.sendall(frame)
            except OSError:
                pass  # the reader side will notice and clean up

    def _maybe_checkpoint(self) -> None:
        if self.checkpoint_dir is None:
            return
        if self._publishes % self.checkpoint_every_publishes != 0:
            return
        os.makedirs(self.checkpoint_dir, exist_ok=True)
        path = os.path.join(self.checkpoint_dir, "latest.json")
        with self._core_lock:
            self.core.checkpoint(path)


def serve_trainer(
    bind: tuple[str, int],
    cfg: SaferConfig,
    seed: int = 0,
    checkpoint_dir: str | None = None,
) -> TrainerServer:
    """Build a TrainerCore and start serving it on ``bind``; returns the
    running server (call .stop() to shut down)."""
    core = TrainerCore(cfg, seed=seed)
    server = TrainerServer(core, host=bind[0], port=bind[1], checkpoint_dir=checkpoint_dir)
    server.start()
    return server
