"""Gridworld state, action validity, joint transitions, rewards, blocking.

Positions are (row, col). The obstacle grid is boolean with True = impassable.
A GridWorld instance is single-writer: one episode advances it sequentially
via `step`. Distinct instances are independent.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Optional

import numpy as np

from . import defaults
from .kernels import bfs_dist

MAP_FORMAT = "map/1"
SCENARIO_FORMAT = "scenario/1"


class Action(IntEnum):
    """Five discrete moves with a stable wire encoding."""

    STAY = 0
    NORTH = 1
    EAST = 2
    SOUTH = 3
    WEST = 4


# (drow, dcol) per action; NORTH decreases the row index.
ACTION_DELTAS = {
    Action.STAY: (0, 0),
    Action.NORTH: (-1, 0),
    Action.EAST: (0, 1),
    Action.SOUTH: (1, 0),
    Action.WEST: (0, -1),
}

CARDINALS = (Action.NORTH, Action.EAST, Action.SOUTH, Action.WEST)


def action_for_delta(drow: int, dcol: int) -> Action:
    for action, delta in ACTION_DELTAS.items():
        if delta == (drow, dcol):
            return action
    raise ValueError(f"({drow}, {dcol}) is not a unit cardinal step or stay")


@dataclass
class RewardConfig:
    move: float = defaults.MOVE_REWARD
    stay_off_goal: float = defaults.STAY_OFF_GOAL_REWARD
    stay_on_goal: float = defaults.STAY_ON_GOAL_REWARD
    collision: float = defaults.COLLISION_REWARD
    blocking: float = defaults.BLOCKING_REWARD
    finish: float = defaults.FINISH_REWARD
    blocking_delay_threshold: int = defaults.BLOCKING_DELAY_THRESHOLD


@dataclass
class AgentState:
    id: int
    position: tuple[int, int]
    goal: tuple[int, int]
    previous_position: Optional[tuple[int, int]] = None

    @property
    def on_goal(self) -> bool:
        return self.position == self.goal


@dataclass
class GridWorld:
    obstacles: np.ndarray  # bool (height, width), True = impassable
    agents: list[AgentState] = field(default_factory=list)
    timestep: int = 0

    def __post_init__(self):
        self.obstacles = np.asarray(self.obstacles, dtype=bool)
        if self.obstacles.ndim != 2:
            raise ValueError("obstacle grid must be 2-D")

    @property
    def height(self) -> int:
        return self.obstacles.shape[0]

    @property
    def width(self) -> int:
        return self.obstacles.shape[1]

    def in_bounds(self, pos: tuple[int, int]) -> bool:
        r, c = pos
        return 0 <= r < self.height and 0 <= c < self.width

    def agent(self, agent_id: int) -> AgentState:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise KeyError(f"unknown agent id {agent_id}")

    def positions(self) -> dict[int, tuple[int, int]]:
        return {a.id: a.position for a in self.agents}

    def blocked_with_agents(self, exclude: Iterable[int] = ()) -> np.ndarray:
        """Obstacle grid with agents stamped in as static obstacles."""
        grid = self.obstacles.astype(np.uint8)
        skip = set(exclude)
        for a in self.agents:
            if a.id not in skip:
                grid[a.position] = 1
        return grid

    def check_invariants(self) -> None:
        seen: dict[tuple[int, int], int] = {}
        for a in self.agents:
            if not self.in_bounds(a.position):
                raise AssertionError(f"agent {a.id} out of bounds at {a.position}")
            if self.obstacles[a.position]:
                raise AssertionError(f"agent {a.id} on obstacle at {a.position}")
            if self.obstacles[a.goal]:
                raise AssertionError(f"agent {a.id} goal on obstacle at {a.goal}")
            if a.position in seen:
                raise AssertionError(
                    f"agents {seen[a.position]} and {a.id} share cell {a.position}"
                )
            seen[a.position] = a.id

    def clone(self) -> "GridWorld":
        return GridWorld(
            obstacles=self.obstacles.copy(),
            agents=copy.deepcopy(self.agents),
            timestep=self.timestep,
        )


@dataclass
class StepOutcome:
    executed: dict[int, Action]
    rewards: dict[int, float]
    collided: dict[int, bool]
    blocking: dict[int, bool]
    episode_done: bool


def valid_actions(world: GridWorld, agent_id: int, training_mode: bool = False) -> set[Action]:
    """Actions whose target is in bounds, free, and unoccupied at step start.

    Stay is always valid. In training mode the move back to the agent's
    previous position is additionally excluded (anti-oscillation rule).
    """
    agent = world.agent(agent_id)
    occupied = {a.position for a in world.agents}
    r, c = agent.position
    out = {Action.STAY}
    for action in CARDINALS:
        dr, dc = ACTION_DELTAS[action]
        target = (r + dr, c + dc)
        if not world.in_bounds(target):
            continue
        if world.obstacles[target]:
            continue
        if target in occupied:
            continue
        if training_mode and agent.previous_position is not None and target == agent.previous_position:
            continue
        out.add(action)
    return out


def step(
    world: GridWorld,
    actions: dict[int, Action],
    rng: np.random.Generator,
    training_mode: bool = False,
    reward_config: Optional[RewardConfig] = None,
    order: Optional[list[int]] = None,
) -> StepOutcome:
    """Execute one joint timestep, mutating `world`.

    Agents execute in a uniformly random permutation (or the explicit
    `order`). A move succeeds iff its target was unoccupied at step start,
    is free and in bounds, and has not been claimed earlier this step; a
    failed move becomes Stay with collided=True.
    """
    del training_mode  # validity masks are the caller's concern; kept for signature parity
    cfg = reward_config or RewardConfig()
    ids = [a.id for a in world.agents]
    for agent_id in ids:
        if agent_id not in actions:
            raise ValueError(f"missing action for agent {agent_id}")

    if order is None:
        perm = [ids[i] for i in rng.permutation(len(ids))]
    else:
        if sorted(order) != sorted(ids):
            raise ValueError("order must be a permutation of agent ids")
        perm = list(order)

    start_pos = world.positions()
    start_occupied = set(start_pos.values())
    claimed: set[tuple[int, int]] = set()
    executed: dict[int, Action] = {}
    collided = {i: False for i in ids}

    for agent_id in perm:
        agent = world.agent(agent_id)
        action = Action(actions[agent_id])
        if action == Action.STAY:
            executed[agent_id] = Action.STAY
            claimed.add(agent.position)
            continue
        dr, dc = ACTION_DELTAS[action]
        target = (agent.position[0] + dr, agent.position[1] + dc)
        ok = (
            world.in_bounds(target)
            and not world.obstacles[target]
            and target not in start_occupied
            and target not in claimed
        )
        if ok:
            claimed.add(target)
            executed[agent_id] = action
            agent.position = target
        else:
            executed[agent_id] = Action.STAY
            collided[agent_id] = True
            claimed.add(agent.position)

    for agent_id in ids:
        world.agent(agent_id).previous_position = start_pos[agent_id]
    world.timestep += 1
    world.check_invariants()

    # Blocking is evaluated on the post-move state, only for agents that
    # chose to stay on their goal (a collision is not a decision to rest).
    stayers = [
        i for i in ids
        if executed[i] == Action.STAY and not collided[i] and world.agent(i).on_goal
    ]
    blocking = {i: False for i in ids}
    if stayers:
        flags = _blocking_sweep(world, cfg.blocking_delay_threshold, candidates=stayers)
        blocking.update(flags)

    rewards: dict[int, float] = {}
    for agent_id in ids:
        agent = world.agent(agent_id)
        if collided[agent_id]:
            rewards[agent_id] = cfg.collision
        elif executed[agent_id] != Action.STAY:
            rewards[agent_id] = cfg.move
        elif not agent.on_goal:
            rewards[agent_id] = cfg.stay_off_goal
        elif blocking[agent_id]:
            rewards[agent_id] = cfg.blocking
        else:
            rewards[agent_id] = cfg.stay_on_goal

    episode_done = all(a.on_goal for a in world.agents)
    if episode_done:
        for agent_id in ids:
            rewards[agent_id] += cfg.finish

    return StepOutcome(
        executed=executed,
        rewards=rewards,
        collided=collided,
        blocking=blocking,
        episode_done=episode_done,
    )


def _path_len(grid: np.ndarray, start: tuple[int, int], goal: tuple[int, int]) -> int:
    """Shortest-path length on a composed grid; -1 if unreachable."""
    if grid[start]:
        return -1
    return int(bfs_dist(grid, start)[goal])


def is_blocking(
    world: GridWorld,
    blocker_id: int,
    victim_id: int,
    threshold: Optional[int] = None,
) -> bool:
    """True iff removing the blocker unblocks the victim or shortens its
    path to goal by more than `threshold` steps (strict)."""
    if blocker_id == victim_id:
        raise ValueError("blocker and victim must differ")
    thresh = defaults.BLOCKING_DELAY_THRESHOLD if threshold is None else threshold
    victim = world.agent(victim_id)
    world.agent(blocker_id)  # existence check
    with_blocker = world.blocked_with_agents(exclude=(victim_id,))
    without_blocker = world.blocked_with_agents(exclude=(victim_id, blocker_id))
    l1 = _path_len(with_blocker, victim.position, victim.goal)
    l2 = _path_len(without_blocker, victim.position, victim.goal)
    if l2 < 0:
        return False
    if l1 < 0:
        return True
    return l1 - l2 > thresh


def _blocking_sweep(
    world: GridWorld,
    threshold: int,
    candidates: Optional[list[int]] = None,
) -> dict[int, bool]:
    """Blocking flags for on-goal candidate agents against every other agent.

    Shares per-victim path computations across candidates and skips victims
    whose current path is already as short as the agent-free one.
    """
    ids = [a.id for a in world.agents]
    if candidates is None:
        candidates = [i for i in ids if world.agent(i).on_goal]
    flags = {i: False for i in candidates}
    if not candidates:
        return flags

    static_grid = world.obstacles.astype(np.uint8)
    victims = []
    for vid in ids:
        victim = world.agent(vid)
        if victim.on_goal:
            continue  # on-goal agents have a zero-length path; nothing to block
        l1 = _path_len(world.blocked_with_agents(exclude=(vid,)), victim.position, victim.goal)
        l_free = _path_len(static_grid, victim.position, victim.goal)
        if l1 == l_free:
            continue  # nobody delays this victim at all
        victims.append((vid, victim, l1))

    for bid in candidates:
        for vid, victim, l1 in victims:
            if vid == bid:
                continue
            l2 = _path_len(
                world.blocked_with_agents(exclude=(vid, bid)),
                victim.position,
                victim.goal,
            )
            if l2 < 0:
                continue
            if l1 < 0 or l1 - l2 > threshold:
                flags[bid] = True
                break
    return flags


def blocking_flags(world: GridWorld, threshold: Optional[int] = None) -> dict[int, bool]:
    """Per-agent blocking flag: on-goal agents blocking at least one other."""
    thresh = defaults.BLOCKING_DELAY_THRESHOLD if threshold is None else threshold
    flags = {a.id: False for a in world.agents}
    on_goal = [a.id for a in world.agents if a.on_goal]
    flags.update(_blocking_sweep(world, thresh, candidates=on_goal))
    return flags


# ---------------------------------------------------------------------------
# Map and scenario file formats.


def parse_map(text: str) -> np.ndarray:
    """Parse the map text format: one line per row, '.' free, '@' obstacle."""
    rows = [line for line in text.splitlines() if line.strip()]
    if not rows:
        raise ValueError("empty map")
    width = len(rows[0])
    grid = np.zeros((len(rows), width), dtype=bool)
    for r, line in enumerate(rows):
        if len(line) != width:
            raise ValueError(f"map row {r} has length {len(line)}, expected {width}")
        for c, ch in enumerate(line):
            if ch == "@":
                grid[r, c] = True
            elif ch != ".":
                raise ValueError(f"bad map character {ch!r} at row {r} col {c}")
    return grid


def format_map(obstacles: np.ndarray) -> str:
    return "\n".join(
        "".join("@" if cell else "." for cell in row) for row in np.asarray(obstacles)
    ) + "\n"


def world_to_scenario(world: GridWorld) -> dict:
    return {
        "format": SCENARIO_FORMAT,
        "width": world.width,
        "height": world.height,
        "map": format_map(world.obstacles).splitlines(),
        "agents": [
            {"id": a.id, "start": list(a.position), "goal": list(a.goal)}
            for a in world.agents
        ],
    }


def world_from_scenario(data: dict) -> GridWorld:
    grid = parse_map("\n".join(data["map"]))
    if grid.shape != (data["height"], data["width"]):
        raise ValueError(
            f"scenario map is {grid.shape}, header says "
            f"({data['height']}, {data['width']})"
        )
    agents = [
        AgentState(id=int(a["id"]), position=tuple(a["start"]), goal=tuple(a["goal"]))
        for a in data["agents"]
    ]
    world = GridWorld(obstacles=grid, agents=agents)
    world.check_invariants()
    return world


def save_scenario(world: GridWorld, path) -> None:
    with open(path, "w") as fh:
        json.dump(world_to_scenario(world), fh, indent=1)
        fh.write("\n")


def load_scenario(path) -> GridWorld:
    with open(path) as fh:
        return world_from_scenario(json.load(fh))
