"""Episode metrics: successes, collisions, speed, braking activations,
planning latency, unsmoothness, and average action cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def unsmoothness(commands: list[tuple[float, float]], timestamps: list[float]) -> float:
    """Mean of ((dv)^2 + (domega)^2) / dt over consecutive control decisions."""
    if len(commands) < 2:
        raise ValueError("need at least two commands")
    if len(commands) != len(timestamps):
        raise ValueError("commands and timestamps must align")
    vals = []
    for (v0, w0), (v1, w1), t0, t1 in zip(
        commands[:-1], commands[1:], timestamps[:-1], timestamps[1:]
    ):
        dt = t1 - t0
        if dt <= 0:
            raise ValueError("timestamps must be strictly increasing")
        vals.append(((v1 - v0) ** 2 + (w1 - w0) ** 2) / dt)
    return float(np.mean(vals))


def count_activations(sigmas: list[int]) -> int:
    """Consecutive sigma=1 cycles count as one braking activation."""
    count = 0
    prev = 0
    for s in sigmas:
        if s and not prev:
            count += 1
        prev = s
    return count


@dataclass
class EpisodeMetrics:
    success: bool
    collisions: int
    average_speed: float       # m/s, mean |v| over executed commands
    max_braking_count: int     # sigma activations, grouped
    latency_mean: float        # s per planning cycle
    latency_p95: float
    unsmoothness: float
    avg_action_cost: float     # mean J over collision-avoidance cycles
    steps: int
    avoid_cycles: int
    sigma_cycles: int


class EpisodeAccumulator:
    """Collects per-cycle records and reduces them to EpisodeMetrics."""

    def __init__(self, t_r: float):
        self.t_r = t_r
        self.commands: list[tuple[float, float]] = []
        self.sigmas: list[int] = []
        self.latencies: list[float] = []
        self.stages: list[str] = []
        self.costs: list[float] = []   # executed J on Avoid/Brake cycles
        self.collisions = 0
        self._in_contact = False

    def add_cycle(self, stage: str, sigma: int, v: float, omega: float,
                  latency: float, executed_cost: float | None = None) -> None:
        self.stages.append(stage)
        self.sigmas.append(sigma)
        self.commands.append((v, omega))
        self.latencies.append(latency)
        if executed_cost is not None and np.isfinite(executed_cost):
            self.costs.append(executed_cost)

    def add_contact(self, in_contact: bool) -> None:
        # A continuous contact interval counts as one collision.
        if in_contact and not self._in_contact:
            self.collisions += 1
        self._in_contact = in_contact

    def finalize(self, success: bool) -> EpisodeMetrics:
        n = len(self.commands)
        speeds = [abs(v) for v, _ in self.commands]
        timestamps = [i * self.t_r for i in range(n)]
        return EpisodeMetrics(
            success=success,
            collisions=self.collisions,
            average_speed=float(np.mean(speeds)) if speeds else 0.0,
            max_braking_count=count_activations(self.sigmas),
            latency_mean=float(np.mean(self.latencies)) if self.latencies else 0.0,
            latency_p95=float(np.percentile(self.latencies, 95)) if self.latencies else 0.0,
            unsmoothness=unsmoothness(self.commands, timestamps) if n >= 2 else 0.0,
            avg_action_cost=float(np.mean(self.costs)) if self.costs else 0.0,
            steps=n,
            avoid_cycles=sum(1 for s in self.stages if s == "Avoid"),
            sigma_cycles=sum(self.sigmas),
        )


CSV_COLUMNS = [
    "method", "scenario", "trials", "successes", "collisions", "avg_speed_mps",
    "max_braking", "latency_ms_mean", "latency_ms_p95", "unsmoothness",
    "avg_action_cost", "seed",
]


def aggregate_row(
    method: str, scenario: str, episodes: list[EpisodeMetrics], seed: int
) -> dict:
    """One CSV row aggregating a batch of trials."""
    return {
        "method": method,
        "scenario": scenario,
        "trials": len(episodes),
        "successes": sum(1 for e in episodes if e.success),
        "collisions": sum(e.collisions for e in episodes),
        "avg_speed_mps": round(float(np.mean([e.average_speed for e in episodes])), 6),
        "max_braking": sum(e.max_braking_count for e in episodes),
        "latency_ms_mean": round(1e3 * float(np.mean([e.latency_mean for e in episodes])), 4),
        "latency_ms_p95": round(1e3 * float(np.mean([e.latency_p95 for e in episodes])), 4),
        "unsmoothness": round(float(np.mean([e.unsmoothness for e in episodes])), 6),
        "avg_action_cost": round(float(np.mean([e.avg_action_cost for e in episodes])), 6),
        "seed": seed,
    }
