"""Minimal fully-connected network with hand-rolled reverse-mode gradients.

Just enough substrate for the actor/critic networks: affine layers, a smooth
activation (so finite-difference checks pass tightly), Adam, and flat
parameter (de)serialization for checkpoints and the wire protocol.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def silu(x: np.ndarray) -> np.ndarray:
    return x / (1.0 + np.exp(-x))


def silu_grad(x: np.ndarray) -> np.ndarray:
    s = 1.0 / (1.0 + np.exp(-x))
    return s * (1.0 + x * (1.0 - s))


@dataclass
class Mlp:
    """Affine stack with SiLU between layers and a linear output head.

    ``weights[i]`` has shape (in_i, out_i); activations everywhere except
    after the last layer.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    version: int = 0

    @classmethod
    def create(cls, sizes: list[int], rng: np.random.Generator) -> "Mlp":
        """He-style initialization for the given layer widths."""
        weights, biases = [], []
        for n_in, n_out in zip(sizes[:-1], sizes[1:]):
            weights.append(rng.normal(0.0, np.sqrt(2.0 / n_in), (n_in, n_out)))
            biases.append(np.zeros(n_out))
        return cls(weights=weights, biases=biases)

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list]:
        """Returns (output, cache); cache feeds backward()."""
        x = np.atleast_2d(x)
        if x.shape[1] != self.weights[0].shape[0]:
            raise ValueError(
                f"input width {x.shape[1]} != layer width {self.weights[0].shape[0]}"
            )
        cache = []
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            cache.append((h, z))
            h = z if i == last else silu(z)
        return h, cache

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(
        self, cache: list, grad_out: np.ndarray
    ) -> tuple[list[np.ndarray], list[np.ndarray], np.ndarray]:
        """Reverse pass.  Returns (weight grads, bias grads, input grad)."""
        grad_w = [None] * len(self.weights)
        grad_b = [None] * len(self.biases)
        g = np.atleast_2d(grad_out)
        last = len(self.weights) - 1
        for i in range(last, -1, -1):
            h, z = cache[i]
            if i != last:
                g = g * silu_grad(z)
            grad_w[i] = h.T @ g
            grad_b[i] = g.sum(axis=0)
            g = g @ self.weights[i].T
        return grad_w, grad_b, g

    # -- flat parameter views (row-major, float64) -------------------------

    def flatten(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    def unflatten(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=float)
        if flat.size != sum(w.size + b.size for w, b in zip(self.weights, self.biases)):
            raise ValueError("flat parameter vector has the wrong length")
        i = 0
        for li, (w, b) in enumerate(zip(self.weights, self.biases)):
            self.weights[li] = flat[i : i + w.size].reshape(w.shape).copy()
            i += w.size
            self.biases[li] = flat[i : i + b.size].copy()
            i += b.size

    def copy(self) -> "Mlp":
        return Mlp(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            version=self.version,
        )


def polyak_update(target: Mlp, source: Mlp, tau: float) -> None:
    """target <- (1 - tau) * target + tau * source, in place."""
    for tw, sw in zip(target.weights, source.weights):
        tw *= 1.0 - tau
        tw += tau * sw
    for tb, sb in zip(target.biases, source.biases):
        tb *= 1.0 - tau
        tb += tau * sb


@dataclass
class Adam:
    """Adam over a list of parameter arrays, moments kept per array."""

    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def mlp_params(net: Mlp) -> list[np.ndarray]:
    return list(net.weights) + list(net.biases)
