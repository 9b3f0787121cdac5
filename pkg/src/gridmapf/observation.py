"""Per-agent partial observations: four binary FOV channels plus goal vector.

Channel order: obstacles, other-agent positions, projected other-agent goals,
own goal. The flatten layout defined here is the normative encoding for demo
files and the external-policy wire protocol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import defaults
from .world import Action, GridWorld, valid_actions

FLAT_TAIL = 3 + 5  # goal vector (2) + magnitude (1) + action mask (5)


@dataclass
class FovConfig:
    fov: int = defaults.FOV
    distance_cap: Optional[float] = None

    def __post_init__(self):
        if self.fov < 3:
            raise ValueError("fov must be at least 3")


@dataclass
class Observation:
    channels: np.ndarray  # (4, fov, fov) float, entries 0/1
    goal_vector: tuple[float, float]  # unit (drow, dcol), or (0, 0) on goal
    goal_magnitude: float
    valid_action_mask: tuple[bool, bool, bool, bool, bool]  # Action encoding order

    @property
    def fov(self) -> int:
        return self.channels.shape[1]


def window_origin(position: tuple[int, int], fov: int) -> tuple[int, int]:
    """Top-left world cell of the FOV window centered on `position`.

    The agent sits at window index ((fov-1)//2, (fov-1)//2); for even fov the
    window extends one cell further toward increasing indices.
    """
    center = (fov - 1) // 2
    return position[0] - center, position[1] - center


def clamp_to_window(cell: tuple[int, int], origin: tuple[int, int], fov: int) -> tuple[int, int]:
    """Componentwise clamp of a world cell onto window coordinates."""
    wr = min(max(cell[0] - origin[0], 0), fov - 1)
    wc = min(max(cell[1] - origin[1], 0), fov - 1)
    return wr, wc


def observe(
    world: GridWorld,
    agent_id: int,
    cfg: Optional[FovConfig] = None,
    training_mode: bool = False,
) -> Observation:
    cfg = cfg or FovConfig()
    fov = cfg.fov
    agent = world.agent(agent_id)
    origin = window_origin(agent.position, fov)

    channels = np.zeros((4, fov, fov), dtype=np.float32)

    # Obstacle channel; cells beyond the world boundary count as obstacles.
    for wr in range(fov):
        r = origin[0] + wr
        if r < 0 or r >= world.height:
            channels[0, wr, :] = 1.0
            continue
        for wc in range(fov):
            c = origin[1] + wc
            if c < 0 or c >= world.width:
                channels[0, wr, wc] = 1.0
            elif world.obstacles[r, c]:
                channels[0, wr, wc] = 1.0

    def in_window(cell):
        wr = cell[0] - origin[0]
        wc = cell[1] - origin[1]
        if 0 <= wr < fov and 0 <= wc < fov:
            return wr, wc
        return None

    # Other agents, and their goals projected onto the window if outside it.
    for other in world.agents:
        if other.id == agent_id:
            continue
        idx = in_window(other.position)
        if idx is None:
            continue
        channels[1, idx[0], idx[1]] = 1.0
        goal_idx = in_window(other.goal)
        if goal_idx is None:
            goal_idx = clamp_to_window(other.goal, origin, fov)
        channels[2, goal_idx[0], goal_idx[1]] = 1.0

    own_goal_idx = in_window(agent.goal)
    if own_goal_idx is not None:
        channels[3, own_goal_idx[0], own_goal_idx[1]] = 1.0

    dr = agent.goal[0] - agent.position[0]
    dc = agent.goal[1] - agent.position[1]
    magnitude = math.hypot(dr, dc)
    if magnitude > 0:
        vector = (dr / magnitude, dc / magnitude)
    else:
        vector = (0.0, 0.0)
    if cfg.distance_cap is not None:
        magnitude = min(magnitude, cfg.distance_cap)

    mask_set = valid_actions(world, agent_id, training_mode=training_mode)
    mask = tuple(Action(i) in mask_set for i in range(5))

    return Observation(
        channels=channels,
        goal_vector=vector,
        goal_magnitude=magnitude,
        valid_action_mask=mask,
    )


def flat_size(fov: int) -> int:
    return 4 * fov * fov + FLAT_TAIL


def flatten(obs: Observation) -> np.ndarray:
    """Deterministic layout: channels row-major, goal vector, magnitude, mask."""
    return np.concatenate(
        [
            obs.channels.reshape(-1).astype(np.float64),
            np.array(obs.goal_vector, dtype=np.float64),
            np.array([obs.goal_magnitude], dtype=np.float64),
            np.array(obs.valid_action_mask, dtype=np.float64),
        ]
    )


def unflatten(values, fov: int) -> Observation:
    flat = np.asarray(values, dtype=np.float64)
    expected = flat_size(fov)
    if flat.shape != (expected,):
        raise ValueError(f"expected {expected} values for fov={fov}, got {flat.shape}")
    body = 4 * fov * fov
    channels = flat[:body].reshape(4, fov, fov).astype(np.float32)
    vector = (float(flat[body]), float(flat[body + 1]))
    magnitude = float(flat[body + 2])
    mask = tuple(bool(round(v)) for v in flat[body + 3 : body + 8])
    return Observation(
        channels=channels,
        goal_vector=vector,
        goal_magnitude=magnitude,
        valid_action_mask=mask,
    )
