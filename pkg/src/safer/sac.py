"""Soft actor-critic on the hand-rolled MLP substrate.

Covers observation assembly, the tanh-squashed Gaussian policy, the reward,
the replay buffer, the full SAC update (twin critics, reparameterized actor,
auto-tuned temperature, Polyak targets), and bit-exact checkpointing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .codec import decode_array as _decode_array, encode_array as _encode_array
from .config import KinematicLimits, SacConfig
from .kinematics import RobotState
from .mlp import Adam, Mlp, mlp_params, polyak_update
from .world import SensorScan

OBS_DIM = 367  # 360 lidar + 3 ultrasonic + v, omega, v_ref, omega_ref
ACT_DIM = 2    # throttle, turn
LOG_STD_MIN, LOG_STD_MAX = -20.0, 2.0


def build_observation(
    scan: SensorScan,
    state: RobotState,
    v_ref: float,
    omega_ref: float,
    limits: KinematicLimits,
    normalize: bool = True,
) -> np.ndarray:
    """[l_0..l_359, u_-45, u_0, u_45, v, omega, v_ref, omega_ref].

    Normalization (ranges by max_range, velocities by their limits) must be
    applied identically at collection and inference time, so it is part of
    this function rather than the trainer.
    """
    obs = np.empty(OBS_DIM)
    obs[:360] = np.clip(scan.lidar, 0.0, scan.max_range)
    obs[360:363] = np.clip(scan.ultrasonic, 0.0, scan.max_range)
    obs[363] = state.v
    obs[364] = state.omega
    obs[365] = v_ref
    obs[366] = omega_ref
    if normalize:
        obs[:363] /= scan.max_range
        obs[363] /= limits.v_max
        obs[364] /= limits.omega_max
        obs[365] /= limits.v_max
        obs[366] /= limits.omega_max
    if not np.isfinite(obs).all():
        raise ValueError("non-finite observation")
    return obs


def scale_action(throttle: float, turn: float, limits: KinematicLimits) -> tuple[float, float]:
    """Map a [-1, 1]^2 policy action to (v_s, omega_s) in velocity units."""
    return throttle * limits.v_max, turn * limits.omega_max


def compute_reward(sigma_next: int, action_cost_value: float, lambda1: float, lambda2: float) -> float:
    """r = -lambda1 * sigma_next - lambda2 * J."""
    if not np.isfinite(action_cost_value):
        raise ValueError("action cost must be finite (collision candidates are filtered upstream)")
    return -lambda1 * float(sigma_next) - lambda2 * float(action_cost_value)


# -- policy ----------------------------------------------------------------


def _policy_heads(net_out: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = net_out[:, :ACT_DIM]
    log_std = np.clip(net_out[:, ACT_DIM:], LOG_STD_MIN, LOG_STD_MAX)
    return mean, log_std


def policy_forward(
    actor: Mlp,
    obs: np.ndarray,
    deterministic: bool = False,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Action(s) in [-1, 1]^2; stochastic mode needs a seeded rng."""
    single = obs.ndim == 1
    out, _ = actor.forward(np.atleast_2d(obs))
    mean, log_std = _policy_heads(out)
    if deterministic:
        act = np.tanh(mean)
    else:
        if rng is None:
            raise ValueError("stochastic policy_forward needs an rng")
        z = mean + np.exp(log_std) * rng.standard_normal(mean.shape)
        act = np.tanh(z)
    return act[0] if single else act


def _sample_with_logprob(
    actor: Mlp, obs: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, dict]:
    """Reparameterized sample plus log pi(a|s) and a cache for gradients."""
    out, cache = actor.forward(obs)
    mean, log_std = _policy_heads(out)
    clipped = (out[:, ACT_DIM:] < LOG_STD_MIN) | (out[:, ACT_DIM:] > LOG_STD_MAX)
    std = np.exp(log_std)
    eps = rng.standard_normal(mean.shape)
    z = mean + std * eps
    act = np.tanh(z)
    # Gaussian term with z = mean + std*eps: the quadratic reduces to eps^2.
    gauss = -0.5 * eps**2 - log_std - 0.5 * np.log(2.0 * np.pi)
    corr = np.log(1.0 - act**2 + 1e-6)
    log_prob = (gauss - corr).sum(axis=1)
    ctx = {
        "cache": cache, "eps": eps, "std": std, "act": act, "z": z,
        "clipped": clipped,
    }
    return act, log_prob, ctx


# -- replay buffer ---------------------------------------------------------


@dataclass
class Batch:
    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s_next: np.ndarray
    done: np.ndarray
    sigma_next: np.ndarray


class ReplayBuffer:
    """Fixed-capacity ring buffer with uniform sampling (with replacement)."""

    def __init__(self, capacity: int, obs_dim: int = OBS_DIM, act_dim: int = ACT_DIM):
        if capacity <= 0:
            raise ValueError("capacity must be > 0")
        self.capacity = capacity
        self.s = np.zeros((capacity, obs_dim))
        self.a = np.zeros((capacity, act_dim))
        self.r = np.zeros(capacity)
        self.s_next = np.zeros((capacity, obs_dim))
        self.done = np.zeros(capacity, dtype=bool)
        self.sigma_next = np.zeros(capacity, dtype=np.int8)
        self.size = 0
        self.head = 0

    def push(self, s, a, r, s_next, done, sigma_next) -> None:
        i = self.head
        self.s[i] = s
        self.a[i] = a
        self.r[i] = r
        self.s_next[i] = s_next
        self.done[i] = done
        self.sigma_next[i] = sigma_next
        self.head = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.size, size=batch_size)
        return Batch(
            s=self.s[idx], a=self.a[idx], r=self.r[idx],
            s_next=self.s_next[idx], done=self.done[idx],
            sigma_next=self.sigma_next[idx],
        )

    def __len__(self) -> int:
        return self.size


# -- SAC state and update --------------------------------------------------


@dataclass
class SacState:
    actor: Mlp
    critic1: Mlp
    critic2: Mlp
    target1: Mlp
    target2: Mlp
    log_alpha: float
    opt_actor: Adam
    opt_critic1: Adam
    opt_critic2: Adam
    opt_alpha: Adam
    step: int = 0

    @classmethod
    def create(cls, cfg: SacConfig, rng: np.random.Generator) -> "SacState":
        hidden = list(cfg.hidden)
        actor = Mlp.create([OBS_DIM] + hidden + [2 * ACT_DIM], rng)
        critic1 = Mlp.create([OBS_DIM + ACT_DIM] + hidden + [1], rng)
        critic2 = Mlp.create([OBS_DIM + ACT_DIM] + hidden + [1], rng)
        return cls(
            actor=actor,
            critic1=critic1,
            critic2=critic2,
            target1=critic1.copy(),
            target2=critic2.copy(),
            log_alpha=float(np.log(cfg.init_alpha)),
            opt_actor=Adam(lr=cfg.lr),
            opt_critic1=Adam(lr=cfg.lr),
            opt_critic2=Adam(lr=cfg.lr),
            opt_alpha=Adam(lr=cfg.lr),
        )


def sac_update(
    state: SacState, batch: Batch, cfg: SacConfig, rng: np.random.Generator
) -> dict:
    """One gradient step on critics, actor, and temperature, then the Polyak
    target update.  Mutates ``state`` in place; returns the losses."""
    n = len(batch.r)
    alpha = float(np.exp(state.log_alpha))
    sa = np.concatenate([batch.s, batch.a], axis=1)

    # TD target from the target critics and a fresh next action.
    a_next, logp_next, _ = _sample_with_logprob(state.actor, batch.s_next, rng)
    sa_next = np.concatenate([batch.s_next, a_next], axis=1)
    q_next = np.minimum(state.target1(sa_next)[:, 0], state.target2(sa_next)[:, 0])
    target = batch.r + cfg.discount * (~batch.done) * (q_next - alpha * logp_next)

    critic_losses = []
    for critic, opt in ((state.critic1, state.opt_critic1), (state.critic2, state.opt_critic2)):
        q, cache = critic.forward(sa)
        err = q[:, 0] - target
        critic_losses.append(float(np.mean(err**2)))
        gw, gb, _ = critic.backward(cache, (2.0 / n) * err[:, None])
        opt.step(mlp_params(critic), gw + gb)
        if not np.isfinite(critic_losses[-1]):
            raise FloatingPointError("non-finite critic loss")

    # Actor: L = E[alpha * log pi(a|s) - min Q(s, a)], reparameterized.
    a_new, logp_new, ctx = _sample_with_logprob(state.actor, batch.s, rng)
    sa_new = np.concatenate([batch.s, a_new], axis=1)
    q1, c1 = state.critic1.forward(sa_new)
    q2, c2 = state.critic2.forward(sa_new)
    q_min = np.minimum(q1[:, 0], q2[:, 0])
    actor_loss = float(np.mean(alpha * logp_new - q_min))
    if not np.isfinite(actor_loss):
        raise FloatingPointError("non-finite actor loss")

    # dL/da via the active critic's input gradient (no critic params touched).
    use1 = (q1[:, 0] <= q2[:, 0])[:, None]
    gq = -np.ones((n, 1)) / n
    _, _, gin1 = state.critic1.backward(c1, np.where(use1, gq, 0.0))
    _, _, gin2 = state.critic2.backward(c2, np.where(use1, 0.0, gq))
    grad_a = (gin1 + gin2)[:, OBS_DIM:]

    act, std, eps, clipped = ctx["act"], ctx["std"], ctx["eps"], ctx["clipped"]
    one_m_a2 = 1.0 - act**2
    # log pi pieces that depend on z: the tanh correction -log(1 - a^2 + e).
    dcorr_dz = 2.0 * act * one_m_a2 / (one_m_a2 + 1e-6)
    grad_z = grad_a * one_m_a2 + (alpha / n) * dcorr_dz
    grad_mean = grad_z
    grad_log_std = grad_z * std * eps + (alpha / n) * (-1.0)
    grad_out = np.concatenate([grad_mean, np.where(clipped, 0.0, grad_log_std)], axis=1)
    gw, gb, _ = state.actor.backward(ctx["cache"], grad_out)
    state.opt_actor.step(mlp_params(state.actor), gw + gb)

    # Temperature: L = -log_alpha * E[log pi + target_entropy].
    ent_err = float(np.mean(logp_new) + cfg.target_entropy)
    alpha_loss = -state.log_alpha * ent_err
    la = np.array([state.log_alpha])
    state.opt_alpha.step([la], [np.array([-ent_err])])
    state.log_alpha = float(la[0])

    polyak_update(state.target1, state.critic1, cfg.tau)
    polyak_update(state.target2, state.critic2, cfg.tau)
    state.step += 1
    return {
        "critic": 0.5 * (critic_losses[0] + critic_losses[1]),
        "actor": actor_loss,
        "alpha": float(alpha_loss),
        "alpha_value": alpha,
    }


# -- checkpointing ---------------------------------------------------------


def _encode_mlp(net: Mlp) -> dict:
    return {
        "sizes": net.sizes,
        "version": net.version,
        "flat": _encode_array(net.flatten()),
    }


def _decode_mlp(doc: dict) -> Mlp:
    net = Mlp.create(doc["sizes"], np.random.default_rng(0))
    net.unflatten(_decode_array(doc["flat"]))
    net.version = doc["version"]
    return net


def _encode_adam(opt: Adam) -> dict:
    return {
        "lr": opt.lr, "t": opt.t,
        "m": [_encode_array(a) for a in opt.m],
        "v": [_encode_array(a) for a in opt.v],
    }


def _decode_adam(doc: dict) -> Adam:
    return Adam(
        lr=doc["lr"], t=doc["t"],
        m=[_decode_array(a) for a in doc["m"]],
        v=[_decode_array(a) for a in doc["v"]],
    )


CHECKPOINT_FORMAT = 1


def save_checkpoint(path: str, state: SacState, cfg: SacConfig) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "step": state.step,
        "log_alpha": state.log_alpha,
        "actor": _encode_mlp(state.actor),
        "critic1": _encode_mlp(state.critic1),
        "critic2": _encode_mlp(state.critic2),
        "target1": _encode_mlp(state.target1),
        "target2": _encode_mlp(state.target2),
        "opt_actor": _encode_adam(state.opt_actor),
        "opt_critic1": _encode_adam(state.opt_critic1),
        "opt_critic2": _encode_adam(state.opt_critic2),
        "opt_alpha": _encode_adam(state.opt_alpha),
        "config": {
            "hidden": list(cfg.hidden), "lr": cfg.lr, "tau": cfg.tau,
            "discount": cfg.discount, "batch_size": cfg.batch_size,
            "target_entropy": cfg.target_entropy,
            "normalize_observations": cfg.normalize_observations,
        },
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_checkpoint(path: str) -> tuple[SacState, dict]:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format: {doc.get('format')!r}")
    state = SacState(
        actor=_decode_mlp(doc["actor"]),
        critic1=_decode_mlp(doc["critic1"]),
        critic2=_decode_mlp(doc["critic2"]),
        target1=_decode_mlp(doc["target1"]),
        target2=_decode_mlp(doc["target2"]),
        log_alpha=doc["log_alpha"],
        opt_actor=_decode_adam(doc["opt_actor"]),
        opt_critic1=_decode_adam(doc["opt_critic1"]),
        opt_critic2=_decode_adam(doc["opt_critic2"]),
        opt_alpha=_decode_adam(doc["opt_alpha"]),
        step=doc["step"],
    )
    return state, doc["config"]
