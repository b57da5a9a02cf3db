"""Ground-truth trajectory generation for a flock of mobile nodes.

Nodes start in living areas, travel to a foraging area under boid-style
steering (separation / alignment / cohesion plus goal attraction), and
switch permanently to a reflected Gaussian random walk once inside the
foraging area.  Everything runs on a 1 s time base and is a pure function
of (config, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DT = 1.0  # integration step, seconds


@dataclass(frozen=True)
class Disc:
    cx: float
    cy: float
    radius: float

    @property
    def center(self) -> np.ndarray:
        return np.array([self.cx, self.cy])

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.hypot(pts[:, 0] - self.cx, pts[:, 1] - self.cy) <= self.radius

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Uniform point in the disc via polar draws (fixed rng consumption)."""
        theta = rng.uniform(0.0, 2.0 * np.pi)
        r = self.radius * np.sqrt(rng.uniform())
        return self.center + r * np.array([np.cos(theta), np.sin(theta)])


def default_living_areas(area_side: float) -> tuple[Disc, Disc]:
    return (
        Disc(0.1 * area_side, 0.1 * area_side, 500.0),
        Disc(0.9 * area_side, 0.9 * area_side, 500.0),
    )


def default_foraging_area(area_side: float) -> Disc:
    return Disc(0.5 * area_side, 0.5 * area_side, 1000.0)


@dataclass(frozen=True)
class WorldConfig:
    area_side: float = 50000.0
    n_nodes: int = 40
    duration: int = 43200
    living_areas: tuple[Disc, ...] = field(default=None)  # type: ignore[assignment]
    foraging_area: Disc = field(default=None)  # type: ignore[assignment]
    max_speed: float = 6.0
    target_spacing: float = 20.0

    def __post_init__(self) -> None:
        if self.area_side <= 0:
            raise ValueError("area_side must be positive")
        if self.n_nodes < 1:
            raise ValueError("need at least one node")
        if self.duration < 0:
            raise ValueError("duration must be non-negative")
        if self.max_speed <= 0:
            raise ValueError("max_speed must be positive")
        if self.living_areas is None:
            object.__setattr__(self, "living_areas", default_living_areas(self.area_side))
        if self.foraging_area is None:
            object.__setattr__(self, "foraging_area", default_foraging_area(self.area_side))
        for disc in (*self.living_areas, self.foraging_area):
            if not (
                0.0 <= disc.cx - disc.radius
                and disc.cx + disc.radius <= self.area_side
                and 0.0 <= disc.cy - disc.radius
                and disc.cy + disc.radius <= self.area_side
            ):
                raise ValueError(f"region {disc} extends outside the area")


@dataclass(frozen=True)
class FlockingParams:
    """Steering rule weights (accelerations in m/s^2) and scales."""

    neighbor_radius: float = 50.0
    w_separation: float = 1.5
    w_alignment: float = 0.8
    w_cohesion: float = 0.4
    w_goal: float = 1.0
    separation_distance: float = 20.0
    rw_step_sigma: float = 3.0

    def __post_init__(self) -> None:
        if self.neighbor_radius <= 0:
            raise ValueError("neighbor_radius must be positive")
        for name in ("w_separation", "w_alignment", "w_cohesion", "w_goal"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass
class Trajectory:
    """One node's ground-truth track at 1 s resolution; row t is time t."""

    node_id: int
    positions: np.ndarray  # (duration + 1, 2) meters


def _clip_norms(vectors: np.ndarray, limit: float) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=-1, keepdims=True)
    scale = np.where(norms > limit, limit / np.maximum(norms, 1e-300), 1.0)
    return vectors * scale


def flocking_step(
    positions: np.ndarray,
    velocities: np.ndarray,
    params: FlockingParams,
    goal: np.ndarray,
    max_speed: float,
    active: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Advance every active node one second under the steering rules.

    Inactive nodes still act as neighbours but are returned unchanged.
    Each rule contributes a bounded acceleration: separation pushes away
    from too-close neighbours at weight strength, alignment is proportional
    to the velocity mismatch, cohesion to the centroid offset, and the goal
    rule pulls at constant strength toward ``goal``.
    """
    p = np.asarray(positions, dtype=float)
    v = np.asarray(velocities, dtype=float)
    n = p.shape[0]
    if active is None:
        active = np.ones(n, dtype=bool)

    diff = p[:, None, :] - p[None, :, :]  # diff[i, j] = p_i - p_j
    dist = np.linalg.norm(diff, axis=2)
    off_diag = ~np.eye(n, dtype=bool)
    near = off_diag & (dist < params.neighbor_radius)
    too_close = off_diag & (dist < params.separation_distance) & (dist > 1e-12)

    with np.errstate(divide="ignore", invalid="ignore"):
        inv_sq = np.where(too_close, 1.0 / np.maximum(dist, 1e-12) ** 2, 0.0)
    sep_raw = np.einsum("ij,ijk->ik", inv_sq, diff)
    sep_norm = np.linalg.norm(sep_raw, axis=1, keepdims=True)
    g_sep = np.where(sep_norm > 1e-12, sep_raw / np.maximum(sep_norm, 1e-300), 0.0)

    counts = near.sum(axis=1)
    has_nb = counts > 0
    safe = np.maximum(counts, 1)[:, None]
    mean_v = (near.astype(float) @ v) / safe
    mean_p = (near.astype(float) @ p) / safe
    g_ali = np.where(has_nb[:, None], (mean_v - v) / max_speed, 0.0)
    g_coh = np.where(has_nb[:, None], (mean_p - p) / params.neighbor_radius, 0.0)

    to_goal = np.asarray(goal, dtype=float)[None, :] - p
    goal_dist = np.linalg.norm(to_goal, axis=1, keepdims=True)
    g_goal = np.where(goal_dist > 1e-12, to_goal / np.maximum(goal_dist, 1e-300), 0.0)

    accel = (
        params.w_separation * g_sep
        + params.w_alignment * g_ali
        + params.w_cohesion * g_coh
        + params.w_goal * g_goal
    )
    new_v = _clip_norms(v + accel * DT, max_speed)
    new_p = p + new_v * DT

    out_p = np.where(active[:, None], new_p, p)
    out_v = np.where(active[:, None], new_v, v)
    return out_p, out_v


def _reflect_into_disc(points: np.ndarray, disc: Disc) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float)).copy()
    rel = pts - disc.center
    r = np.linalg.norm(rel, axis=1)
    outside = r > disc.radius
    if np.any(outside):
        folded = 2.0 * disc.radius - r[outside]
        # Fold once across the boundary; clamp pathological huge steps.
        folded = np.clip(folded, 0.0, disc.radius * (1.0 - 1e-12))
        pts[outside] = disc.center + rel[outside] * (folded / r[outside])[:, None]
    return pts


def random_walk_step(
    position: np.ndarray,
    params: FlockingParams,
    region: Disc,
    rng: np.random.Generator,
    max_step: float,
) -> np.ndarray:
    """One reflected isotropic Gaussian step inside ``region``.

    The displacement is clipped to ``max_step`` both before and after
    reflection, so the speed bound survives the fold.
    """
    pos = np.asarray(position, dtype=float)
    step = params.rw_step_sigma * rng.standard_normal(2)
    step = _clip_norms(step, max_step)
    candidate = _reflect_into_disc(pos + step, region)[0]
    return pos + _clip_norms(candidate - pos, max_step)


def generate_tracks(
    world: WorldConfig, flock: FlockingParams, seed: int
) -> list[Trajectory]:
    """Simulate the full journey-then-forage movement for every node.

    Deterministic: the same (world, flock, seed) always yields bit-identical
    trajectories.
    """
    rng = np.random.default_rng(seed)
    n = world.n_nodes
    goal = world.foraging_area.center

    positions = np.empty((n, 2))
    for i in range(n):
        positions[i] = world.living_areas[i % len(world.living_areas)].sample(rng)
    velocities = np.zeros((n, 2))
    foraging = world.foraging_area.contains(positions)

    out = np.empty((world.duration + 1, n, 2))
    out[0] = positions

    lo = np.zeros(2)
    hi = np.array([world.area_side, world.area_side])
    for t in range(1, world.duration + 1):
        journey = ~foraging
        if np.any(journey):
            positions, velocities = flocking_step(
                positions, velocities, flock, goal, world.max_speed, active=journey
            )
        idx = np.flatnonzero(foraging)
        if idx.size:
            steps = flock.rw_step_sigma * rng.standard_normal((idx.size, 2))
            steps = _clip_norms(steps, world.max_speed * DT)
            candidates = _reflect_into_disc(positions[idx] + steps, world.foraging_area)
            moved = candidates - positions[idx]
            positions[idx] = positions[idx] + _clip_norms(moved, world.max_speed * DT)
            velocities[idx] = moved
        # Box projection cannot increase displacement (convexity).
        positions = np.clip(positions, lo, hi)
        foraging = foraging | world.foraging_area.contains(positions)
        out[t] = positions

    return [Trajectory(node_id=i, positions=out[:, i, :].copy()) for i in range(n)]


def connectivity_components(positions: np.ndarray, radius: float) -> int:
    """Number of connected components of the within-``radius`` contact graph."""
    pts = np.atleast_2d(positions)
    n = pts.shape[0]
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    adj = dist <= radius
    seen = np.zeros(n, dtype=bool)
    components = 0
    for start in range(n):
        if seen[start]:
            continue
        components += 1
        stack = [start]
        seen[start] = True
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(adj[i] & ~seen):
                seen[j] = True
                stack.append(int(j))
    return components


def write_tracks_csv(trajectories: list[Trajectory], path) -> None:
    """Trajectory log: header ``t,node_id,x,y``, meters to 6 decimals."""
    with open(path, "w", newline="") as fh:
        fh.write("t,node_id,x,y\n")
        duration = trajectories[0].positions.shape[0]
        for t in range(duration):
            for traj in trajectories:
                x, y = traj.positions[t]
                fh.write(f"{t},{traj.node_id},{x:.6f},{y:.6f}\n")
