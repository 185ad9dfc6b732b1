"""Length-prefixed JSON wire protocol between workers and the trainer.

Frame layout: 4-byte big-endian payload length, then a UTF-8 JSON object
with a ``type`` tag.  Weight blobs travel as base64 float64 inside the JSON
(simple and language-agnostic; compactness does not matter at desk scale).
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .codec import decode_array, encode_array
from .mlp import Mlp

PROTOCOL_VERSION = 1
MAX_FRAME_BYTES = 64 * 1024 * 1024

MESSAGE_TYPES = {"hello", "experience_batch", "policy_update", "ack", "stats"}

_REQUIRED_KEYS = {
    "hello": {"worker_id", "protocol_version"},
    "experience_batch": {"worker_id", "actor_version_used", "experiences"},
    "policy_update": {"version", "layer_shapes", "weights"},
    "ack": {"last_seq"},
    "stats": {"step", "buffer_size", "losses"},
}


class ProtocolError(ValueError):
    pass


def encode_message(msg: dict) -> bytes:
    """Serialize a message dict into one framed byte string."""
    if msg.get("type") not in MESSAGE_TYPES:
        raise ProtocolError(f"unknown message type: {msg.get('type')!r}")
    payload = json.dumps(msg, sort_keys=True).encode()
    if len(payload) > MAX_FRAME_BYTES:
        raise ProtocolError(f"frame of {len(payload)} bytes exceeds the cap")
    return struct.pack(">I", len(payload)) + payload


def decode_payload(payload: bytes) -> dict:
    try:
        msg = json.loads(payload.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"malformed payload: {exc}") from exc
    mtype = msg.get("type")
    if mtype not in MESSAGE_TYPES:
        raise ProtocolError(f"unknown message type: {mtype!r}")
    missing = _REQUIRED_KEYS[mtype] - msg.keys()
    if missing:
        raise ProtocolError(f"{mtype} message missing keys: {sorted(missing)}")
    return msg


class FrameDecoder:
    """Incremental frame splitter for a byte stream.

    Feed arbitrary chunks; complete messages come out.  Truncated frames
    stay buffered and never surface partially.
    """

    def __init__(self, max_frame_bytes: int = MAX_FRAME_BYTES):
        self._buf = bytearray()
        self._max = max_frame_bytes

    def feed(self, data: bytes) -> list[dict]:
        self._buf.extend(data)
        out = []
        while True:
            if len(self._buf) < 4:
                return out
            (length,) = struct.unpack(">I", self._buf[:4])
            if length > self._max:
                raise ProtocolError(f"frame of {length} bytes exceeds the cap")
            if len(self._buf) < 4 + length:
                return out
            payload = bytes(self._buf[4 : 4 + length])
            del self._buf[: 4 + length]
            out.append(decode_payload(payload))


# -- message constructors --------------------------------------------------


def hello(worker_id: str, seq: int) -> dict:
    return {"type": "hello", "worker_id": worker_id,
            "protocol_version": PROTOCOL_VERSION, "seq": seq}


def experience_to_wire(s, a, r, s_next, done, sigma_next) -> dict:
    return {
        "s": encode_array(np.asarray(s)),
        "a": encode_array(np.asarray(a)),
        "r": float(r),
        "s_next": encode_array(np.asarray(s_next)),
        "done": bool(done),
        "sigma_next": int(sigma_next),
    }


def experience_from_wire(doc: dict) -> tuple:
    return (
        decode_array(doc["s"]),
        decode_array(doc["a"]),
        doc["r"],
        decode_array(doc["s_next"]),
        doc["done"],
        doc["sigma_next"],
    )


def experience_batch(worker_id: str, actor_version: int, experiences: list[dict], seq: int) -> dict:
    if not experiences:
        raise ProtocolError("experience batches must be non-empty")
    return {
        "type": "experience_batch",
        "worker_id": worker_id,
        "actor_version_used": actor_version,
        "experiences": experiences,
        "seq": seq,
    }


def policy_update(net: Mlp, seq: int) -> dict:
    shapes = [list(w.shape) for w in net.weights]
    return {
        "type": "policy_update",
        "version": net.version,
        "layer_shapes": shapes,
        "weights": encode_array(net.flatten()),
        "seq": seq,
    }


def policy_from_update(msg: dict, template: Mlp) -> Mlp:
    shapes = [tuple(s) for s in msg["layer_shapes"]]
    if shapes != [w.shape for w in template.weights]:
        raise ProtocolError(f"layer shapes {shapes} do not match the local actor")
    net = template.copy()
    net.unflatten(decode_array(msg["weights"]))
    net.version = msg["version"]
    return net


def ack(last_seq: int, seq: int) -> dict:
    return {"type": "ack", "last_seq": last_seq, "seq": seq}


def stats(step: int, buffer_size: int, losses: dict, seq: int) -> dict:
    return {"type": "stats", "step": step, "buffer_size": buffer_size,
            "losses": losses, "seq": seq}
