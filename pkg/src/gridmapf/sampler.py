"""Random environment generation: sizes, obstacle densities, agent placement.

World size is drawn from weighted choices, obstacle density from a triangular
distribution, and each agent's goal is placed inside the agent's own
4-connected free region so every agent can reach its goal ignoring others.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .kernels import bfs_dist
from .world import AgentState, GridWorld

OBSTACLE_RETRY_CAP = 100
PLACEMENT_RETRY_CAP = 50


@dataclass
class SamplerConfig:
    size_choices: list[tuple[int, float]] = field(
        default_factory=lambda: [(10, 2.0), (40, 1.0), (70, 1.0)]
    )
    density_triangular: tuple[float, float, float] = (0.0, 0.33, 0.5)
    team_size: int = 1
    seed: int = 0
    # Benchmark override: fixes the obstacle density instead of drawing it.
    density_override: Optional[float] = None

    def __post_init__(self):
        if self.team_size < 1:
            raise ValueError("team_size must be >= 1")
        low, mode, high = self.density_triangular
        if not (low <= mode <= high):
            raise ValueError("triangular parameters must satisfy low <= mode <= high")
        for size, weight in self.size_choices:
            if weight <= 0:
                raise ValueError(f"non-positive weight for size {size}")


def connected_region(world: GridWorld, cell: tuple[int, int]) -> set[tuple[int, int]]:
    """Maximal 4-connected set of free cells containing `cell`."""
    if world.obstacles[cell]:
        raise ValueError(f"cell {cell} is an obstacle")
    dist = bfs_dist(world.obstacles, cell)
    rows, cols = np.nonzero(dist >= 0)
    return {(int(r), int(c)) for r, c in zip(rows, cols)}


def _draw_size(cfg: SamplerConfig, rng: np.random.Generator) -> int:
    sizes = [s for s, _ in cfg.size_choices]
    weights = np.array([w for _, w in cfg.size_choices], dtype=np.float64)
    probs = weights / weights.sum()
    return int(sizes[rng.choice(len(sizes), p=probs)])


def _draw_density(cfg: SamplerConfig, rng: np.random.Generator) -> float:
    if cfg.density_override is not None:
        return float(cfg.density_override)
    low, mode, high = cfg.density_triangular
    if low == mode == high:
        return float(low)
    return float(rng.triangular(low, mode, high))


def _place_agents(
    obstacles: np.ndarray, team_size: int, rng: np.random.Generator
) -> Optional[list[AgentState]]:
    free_rows, free_cols = np.nonzero(~obstacles)
    n_free = len(free_rows)
    if n_free < team_size:
        return None
    starts_idx = rng.choice(n_free, size=team_size, replace=False)
    starts = [(int(free_rows[i]), int(free_cols[i])) for i in starts_idx]

    dists = [bfs_dist(obstacles, start) for start in starts]
    taken_goals: set[tuple[int, int]] = set()
    agents = []
    for agent_id, (start, dist) in enumerate(zip(starts, dists)):
        rows, cols = np.nonzero(dist >= 0)
        candidates = [
            (int(r), int(c))
            for r, c in zip(rows, cols)
            if (int(r), int(c)) not in taken_goals
        ]
        if not candidates:
            return None
        goal = candidates[rng.integers(len(candidates))]
        taken_goals.add(goal)
        agents.append(AgentState(id=agent_id, position=start, goal=goal))
    return agents


def sample_environment(cfg: SamplerConfig) -> GridWorld:
    """Draw a world per the config; deterministic for a given seed."""
    rng = np.random.default_rng(cfg.seed)
    size = _draw_size(cfg, rng)
    density = _draw_density(cfg, rng)

    for _ in range(OBSTACLE_RETRY_CAP):
        obstacles = rng.random((size, size)) < density
        agents = None
        for _ in range(PLACEMENT_RETRY_CAP):
            agents = _place_agents(obstacles, cfg.team_size, rng)
            if agents is not None:
                break
        if agents is None:
            continue
        world = GridWorld(obstacles=obstacles, agents=agents)
        world.check_invariants()
        return world
    raise RuntimeError(
        f"could not place {cfg.team_size} agents in a {size}x{size} world "
        f"at density {density:.2f} after {OBSTACLE_RETRY_CAP} obstacle draws"
    )
