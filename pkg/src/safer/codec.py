"""Base64 float64 array codec shared by checkpoints and the wire protocol.

Row-major float64 bytes inside JSON: debuggable, language-agnostic, and
bit-exact on round-trip.
"""

from __future__ import annotations

import base64

import numpy as np


def encode_array(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a, dtype=np.float64)
    return {"shape": list(a.shape), "data": base64.b64encode(a.tobytes()).decode()}


def decode_array(doc: dict) -> np.ndarray:
    flat = np.frombuffer(base64.b64decode(doc["data"]), dtype=np.float64)
    expected = int(np.prod(doc["shape"])) if doc["shape"] else 1
    if flat.size != expected:
        raise ValueError(f"array payload length {flat.size} != shape {doc['shape']}")
    return flat.reshape(doc["shape"]).copy()
