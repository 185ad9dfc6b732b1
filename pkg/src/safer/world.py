"""2D obstacle worlds and simulated range sensors.

Worlds are declarative JSON: line segments tagged solid or glass, disc-shaped
moving actors, a bounding rectangle, and a spawn pose.  Lidar rays pass
through glass; the ultrasonic cones see every material, which is the whole
point of fusing the two sensors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .kinematics import RobotState

SOLID = "solid"
GLASS = "glass"

LIDAR_BEARINGS_DEG = np.arange(360.0)
ULTRASONIC_BEARINGS_DEG = np.array([-45.0, 0.0, 45.0])


@dataclass(frozen=True)
class Segment:
    x1: float
    y1: float
    x2: float
    y2: float
    material: str = SOLID


@dataclass(frozen=True)
class Actor:
    """Constant-velocity disc obstacle (e.g. a walking person)."""

    x: float
    y: float
    radius: float
    vx: float = 0.0
    vy: float = 0.0


@dataclass(frozen=True)
class WorldModel:
    segments: tuple[Segment, ...] = ()
    actors: tuple[Actor, ...] = ()
    bounds: tuple[float, float, float, float] = (-10.0, -10.0, 10.0, 10.0)  # xmin ymin xmax ymax
    spawn: tuple[float, float, float] = (0.0, 0.0, 0.0)  # x, y, theta

    def segment_array(self, materials: tuple[str, ...] | None = None) -> np.ndarray:
        """(S, 4) endpoint array filtered by material."""
        segs = [
            (s.x1, s.y1, s.x2, s.y2)
            for s in self.segments
            if materials is None or s.material in materials
        ]
        return np.array(segs).reshape(-1, 4)

    def actor_array(self) -> np.ndarray:
        """(A, 3) array of (x, y, radius)."""
        return np.array([(a.x, a.y, a.radius) for a in self.actors]).reshape(-1, 3)


@dataclass(frozen=True)
class SensorScan:
    """One cycle of simulated sensing; max_range encodes 'no return'."""

    lidar: np.ndarray       # (360,) meters, index = bearing in degrees
    ultrasonic: np.ndarray  # (3,) meters at bearings -45, 0, +45 degrees
    max_range: float


def load_world(path: str) -> WorldModel:
    with open(path) as fh:
        doc = json.load(fh)
    return world_from_dict(doc)


def world_from_dict(doc: dict) -> WorldModel:
    segments = tuple(
        Segment(s["x1"], s["y1"], s["x2"], s["y2"], s.get("material", SOLID))
        for s in doc.get("segments", [])
    )
    actors = tuple(
        Actor(a["x"], a["y"], a["radius"], a.get("vx", 0.0), a.get("vy", 0.0))
        for a in doc.get("actors", [])
    )
    bounds = tuple(doc.get("bounds", [-10, -10, 10, 10]))
    spawn_doc = doc.get("spawn", {"x": 0.0, "y": 0.0, "theta": 0.0})
    spawn = (spawn_doc["x"], spawn_doc["y"], spawn_doc["theta"])
    return WorldModel(segments=segments, actors=actors, bounds=bounds, spawn=spawn)


def world_to_dict(world: WorldModel) -> dict:
    return {
        "bounds": list(world.bounds),
        "segments": [
            {"x1": s.x1, "y1": s.y1, "x2": s.x2, "y2": s.y2, "material": s.material}
            for s in world.segments
        ],
        "actors": [
            {"x": a.x, "y": a.y, "radius": a.radius, "vx": a.vx, "vy": a.vy}
            for a in world.actors
        ],
        "spawn": {"x": world.spawn[0], "y": world.spawn[1], "theta": world.spawn[2]},
    }


def advance_actors(world: WorldModel, dt: float) -> WorldModel:
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    actors = tuple(
        replace(a, x=a.x + a.vx * dt, y=a.y + a.vy * dt) for a in world.actors
    )
    return replace(world, actors=actors)


def _ray_segment_distances(
    origin: np.ndarray, dirs: np.ndarray, segs: np.ndarray, max_range: float
) -> np.ndarray:
    """Min hit distance per ray against a segment set; max_range if no hit.

    dirs: (R, 2) unit vectors; segs: (S, 4).
    """
    n_rays = len(dirs)
    if len(segs) == 0:
        return np.full(n_rays, max_range)
    a = segs[:, :2]                      # (S, 2)
    e = segs[:, 2:] - segs[:, :2]        # segment direction
    ao = a - origin                      # (S, 2)
    # Solve origin + t d = a + s e.  Cross products give the 2x2 solution.
    denom = dirs[:, 0, None] * e[None, :, 1] - dirs[:, 1, None] * e[None, :, 0]  # (R, S)
    t_num = ao[None, :, 0] * e[None, :, 1] - ao[None, :, 1] * e[None, :, 0]
    s_num = ao[None, :, 0] * dirs[:, 1, None] - ao[None, :, 1] * dirs[:, 0, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = t_num / denom
        s = s_num / denom
    valid = (np.abs(denom) > 1e-12) & (t >= 0) & (s >= -1e-12) & (s <= 1 + 1e-12)
    t = np.where(valid, t, np.inf)
    dist = t.min(axis=1)
    return np.minimum(dist, max_range)


def _ray_circle_distances(
    origin: np.ndarray, dirs: np.ndarray, circles: np.ndarray, max_range: float
) -> np.ndarray:
    """Min hit distance per ray against disc obstacles (x, y, r)."""
    n_rays = len(dirs)
    if len(circles) == 0:
        return np.full(n_rays, max_range)
    oc = circles[None, :, :2] - origin   # (1, A, 2)
    proj = dirs[:, None, 0] * oc[:, :, 0] + dirs[:, None, 1] * oc[:, :, 1]  # (R, A)
    d2 = (oc[:, :, 0] ** 2 + oc[:, :, 1] ** 2) - proj**2
    r2 = circles[None, :, 2] ** 2
    disc = r2 - d2
    with np.errstate(invalid="ignore"):
        half_chord = np.sqrt(disc)
    t = proj - half_chord
    # Origin inside a disc: nearest exit is still "contact now"; report 0.
    t = np.where(t < 0, np.where(proj + half_chord >= 0, 0.0, np.inf), t)
    t = np.where(disc >= 0, t, np.inf)
    dist = t.min(axis=1)
    return np.minimum(dist, max_range)


def _cast(
    world: WorldModel,
    pose: RobotState,
    bearings_deg: np.ndarray,
    max_range: float,
    materials: tuple[str, ...],
) -> np.ndarray:
    origin = np.array([pose.x, pose.y])
    angles = pose.theta + np.deg2rad(bearings_deg)
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    seg_d = _ray_segment_distances(origin, dirs, world.segment_array(materials), max_range)
    act_d = _ray_circle_distances(origin, dirs, world.actor_array(), max_range)
    return np.minimum(seg_d, act_d)


def raycast_lidar(world: WorldModel, pose: RobotState, max_range: float) -> np.ndarray:
    """360 ranges at 1 degree increments; glass is transparent to lidar."""
    return _cast(world, pose, LIDAR_BEARINGS_DEG, max_range, (SOLID,))


def raycast_ultrasonic(
    world: WorldModel,
    pose: RobotState,
    max_range: float,
    half_angle_deg: float = 7.5,
) -> np.ndarray:
    """Three cone readings at -45, 0, +45 degrees; sees glass and solid.

    Each cone reading is the min over rays sampled at 1 degree inside the
    cone, which mimics a wide ultrasonic beam.
    """
    n = max(int(round(half_angle_deg)), 0)
    offsets = np.arange(-n, n + 1, dtype=float)
    out = np.empty(3)
    for i, center in enumerate(ULTRASONIC_BEARINGS_DEG):
        out[i] = _cast(world, pose, center + offsets, max_range, (SOLID, GLASS)).min()
    return out


def sense(
    world: WorldModel,
    pose: RobotState,
    max_range: float,
    half_angle_deg: float = 7.5,
    noise_sigma: float = 0.0,
    rng: np.random.Generator | None = None,
) -> SensorScan:
    lidar = raycast_lidar(world, pose, max_range)
    ultra = raycast_ultrasonic(world, pose, max_range, half_angle_deg)
    if noise_sigma > 0.0:
        if rng is None:
            raise ValueError("range noise requested without an rng")
        lidar = np.clip(lidar + rng.normal(0, noise_sigma, lidar.shape), 1e-6, max_range)
        ultra = np.clip(ultra + rng.normal(0, noise_sigma, ultra.shape), 1e-6, max_range)
    return SensorScan(lidar=lidar, ultrasonic=ultra, max_range=max_range)


def register_obstacles(scan: SensorScan) -> np.ndarray:
    """Ego-frame obstacle points from one scan; (N, 2), no-return dropped."""
    pts = []
    for bearings, ranges in (
        (LIDAR_BEARINGS_DEG, scan.lidar),
        (ULTRASONIC_BEARINGS_DEG, scan.ultrasonic),
    ):
        hit = ranges < scan.max_range
        phi = np.deg2rad(bearings[hit])
        r = ranges[hit]
        pts.append(np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1))
    return np.concatenate(pts, axis=0)


def point_segment_distance(points: np.ndarray, segs: np.ndarray) -> np.ndarray:
    """Distance from each point to the nearest segment; (P,) result."""
    points = np.atleast_2d(points)
    if len(segs) == 0:
        return np.full(len(points), np.inf)
    a = segs[None, :, :2]
    e = segs[None, :, 2:] - a
    ap = points[:, None, :] - a
    ee = (e**2).sum(axis=2)
    t = np.clip((ap * e).sum(axis=2) / np.maximum(ee, 1e-18), 0.0, 1.0)
    closest = a + t[:, :, None] * e
    d = np.linalg.norm(points[:, None, :] - closest, axis=2)
    return d.min(axis=1)


def ground_truth_collision(world: WorldModel, radius: float, pose: RobotState) -> bool:
    """True iff the bare robot disc touches any geometry.

    Metrics/termination oracle only; the planner never sees this.
    """
    p = np.array([[pose.x, pose.y]])
    segs = world.segment_array()
    if len(segs) and point_segment_distance(p, segs)[0] < radius:
        return True
    for a in world.actors:
        if math.hypot(a.x - pose.x, a.y - pose.y) < radius + a.radius:
            return True
    return False
