"""Shared planner types: paths, joint plans, transition modes, constraints."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

PLAN_FORMAT = "plan/1"


class Timeout(Exception):
    """Raised when a solver exhausts its wall-clock budget."""


class TransitionMode(Enum):
    # Follows allowed, swaps forbidden (convention of classical solvers).
    STANDARD = "standard"
    # No follows, no swaps: an agent may not enter any cell that was occupied
    # at the start of the timestep. Matches world-core execution.
    RESTRICTED = "restricted"


@dataclass(frozen=True)
class Constraint:
    """A CBS constraint for one agent.

    The two core kinds are vertex (cell banned at time t) and edge (move
    from->to departing at t banned). Disjoint splitting adds "positive" (the
    agent must occupy the cell at time t; other agents derive vertex bans
    from it). Target reasoning adds "banned_from" (cell banned at every time
    >= t), "min_arrival" (final goal arrival strictly later than t), and
    "max_arrival" (final goal arrival no later than t).
    """

    agent: int
    t: int
    cell: Optional[tuple[int, int]] = None
    edge: Optional[tuple[tuple[int, int], tuple[int, int]]] = None
    kind: str = "vertex"

    def __post_init__(self):
        if self.kind in ("vertex", "banned_from", "positive"):
            if self.cell is None or self.edge is not None:
                raise ValueError(f"{self.kind} constraint needs a cell")
        elif self.kind == "edge":
            if self.edge is None or self.cell is not None:
                raise ValueError("edge constraint needs an edge")
        elif self.kind in ("min_arrival", "max_arrival"):
            if self.cell is not None or self.edge is not None:
                raise ValueError(f"{self.kind} constraint carries only a time")
        else:
            raise ValueError(f"unknown constraint kind {self.kind!r}")
        if self.t < 0:
            raise ValueError("constraint time must be >= 0")

    @staticmethod
    def vertex(agent: int, cell: tuple[int, int], t: int) -> "Constraint":
        return Constraint(agent=agent, t=t, cell=cell)

    @staticmethod
    def edge_move(agent: int, frm: tuple[int, int], to: tuple[int, int], t: int) -> "Constraint":
        """Forbid departing `frm` at t and arriving at `to` at t+1."""
        return Constraint(agent=agent, t=t, edge=(frm, to), kind="edge")

    @staticmethod
    def positive(agent: int, cell: tuple[int, int], t: int) -> "Constraint":
        """Require the agent to occupy the cell at time t."""
        return Constraint(agent=agent, t=t, cell=cell, kind="positive")

    @staticmethod
    def banned_from(agent: int, cell: tuple[int, int], t: int) -> "Constraint":
        """Forbid the cell at every time >= t."""
        return Constraint(agent=agent, t=t, cell=cell, kind="banned_from")

    @staticmethod
    def min_arrival(agent: int, t: int) -> "Constraint":
        """Require the agent's final goal arrival to be strictly after t."""
        return Constraint(agent=agent, t=t, kind="min_arrival")

    @staticmethod
    def max_arrival(agent: int, t: int) -> "Constraint":
        """Require the agent's final goal arrival to be no later than t."""
        return Constraint(agent=agent, t=t, kind="max_arrival")


@dataclass
class Path:
    positions: list[tuple[int, int]]

    @property
    def cost(self) -> int:
        """Steps until the agent finally rests at its last position."""
        return len(self.positions) - 1

    def at(self, t: int) -> tuple[int, int]:
        """Position at time t, resting at the final cell past the end."""
        if t < len(self.positions):
            return self.positions[t]
        return self.positions[-1]


@dataclass
class JointPlan:
    paths: list[Path]  # aligned with the solver's agent order, equal lengths
    cost: int  # sum over agents of steps until finally resting on goal
    makespan: int

    def positions_at(self, t: int) -> list[tuple[int, int]]:
        return [p.at(t) for p in self.paths]


def pad_paths(paths: list[list[tuple[int, int]]]) -> tuple[list[list[tuple[int, int]]], int]:
    makespan = max(len(p) for p in paths) - 1
    padded = [list(p) + [p[-1]] * (makespan + 1 - len(p)) for p in paths]
    return padded, makespan


def sum_of_costs(paths: list[list[tuple[int, int]]], goals: list[tuple[int, int]]) -> int:
    """Per-agent steps until final goal arrival, summed."""
    total = 0
    for path, goal in zip(paths, goals):
        arrival = 0
        for t, pos in enumerate(path):
            if pos != goal:
                arrival = t + 1
        total += arrival
    return total


def make_joint_plan(paths: list[list[tuple[int, int]]], goals: list[tuple[int, int]]) -> JointPlan:
    padded, makespan = pad_paths(paths)
    return JointPlan(
        paths=[Path(p) for p in padded],
        cost=sum_of_costs(padded, goals),
        makespan=makespan,
    )


@dataclass(frozen=True)
class Conflict:
    t: int
    i: int  # lower agent index
    j: int
    kind: str  # "vertex" | "edge" | "follow"
    cell: tuple[int, int]  # contested cell (for edge: i's target)


_KIND_RANK = {"vertex": 0, "edge": 1, "follow": 2}


def _conflicts_at(padded, t, mode: TransitionMode) -> list[Conflict]:
    n = len(padded)
    found: list[Conflict] = []
    cur = [p[t] for p in padded]
    for i in range(n):
        for j in range(i + 1, n):
            if cur[i] == cur[j]:
                found.append(Conflict(t, i, j, "vertex", cur[i]))
    if t > 0:
        prev = [p[t - 1] for p in padded]
        for i in range(n):
            for j in range(i + 1, n):
                swap = cur[i] == prev[j] and cur[j] == prev[i] and cur[i] != prev[i]
                if mode == TransitionMode.STANDARD:
                    if swap:
                        found.append(Conflict(t, i, j, "edge", cur[i]))
                else:
                    if cur[i] == prev[j] and cur[i] != prev[i]:
                        found.append(Conflict(t, i, j, "follow", cur[i]))
                    elif cur[j] == prev[i] and cur[j] != prev[j]:
                        found.append(Conflict(t, i, j, "follow", cur[j]))
    found.sort(key=lambda cf: (_KIND_RANK[cf.kind], cf.i, cf.j))
    return found


def first_conflict(
    paths: list[list[tuple[int, int]]], mode: TransitionMode
) -> Optional[Conflict]:
    """Earliest conflict, lowest agent pair; vertex before edge before follow."""
    padded, makespan = pad_paths(paths)
    for t in range(makespan + 1):
        found = _conflicts_at(padded, t, mode)
        if found:
            return found[0]
    return None


def count_conflicts(paths: list[list[tuple[int, int]]], mode: TransitionMode) -> int:
    padded, makespan = pad_paths(paths)
    return sum(len(_conflicts_at(padded, t, mode)) for t in range(makespan + 1))


def all_conflicts(
    paths: list[list[tuple[int, int]]], mode: TransitionMode
) -> list[Conflict]:
    """Every conflict in time order (then vertex/edge/follow, lowest pair)."""
    padded, makespan = pad_paths(paths)
    out: list[Conflict] = []
    for t in range(makespan + 1):
        out.extend(_conflicts_at(padded, t, mode))
    return out


def transition_collisions(
    u: tuple, v: tuple, mode: TransitionMode
) -> list[tuple[int, int]]:
    """Colliding agent pairs for a joint move from positions u to positions v."""
    pairs = set()
    target_of: dict[tuple[int, int], int] = {}
    for i, pos in enumerate(v):
        if pos in target_of:
            pairs.add((target_of[pos], i))
        else:
            target_of[pos] = i
    source_of = {pos: i for i, pos in enumerate(u)}
    for i in range(len(u)):
        if v[i] == u[i]:
            continue
        j = source_of.get(v[i])
        if j is None or j == i:
            continue
        if mode == TransitionMode.RESTRICTED:
            pairs.add((min(i, j), max(i, j)))
        elif v[j] == u[i]:  # swap
            pairs.add((min(i, j), max(i, j)))
    return sorted(pairs)


# ---------------------------------------------------------------------------
# Plan file format.


def plan_to_dict(plan: JointPlan, wall_time: Optional[float] = None, **meta) -> dict:
    data = {
        "format": PLAN_FORMAT,
        "agents": [
            {"id": i, "path": [list(p) for p in path.positions]}
            for i, path in enumerate(plan.paths)
        ],
        "cost": plan.cost,
        "makespan": plan.makespan,
    }
    if wall_time is not None:
        data["wall_time"] = wall_time
    data.update(meta)
    return data


def plan_from_dict(data: dict) -> JointPlan:
    entries = sorted(data["agents"], key=lambda a: a["id"])
    paths = [[tuple(p) for p in a["path"]] for a in entries]
    padded, makespan = pad_paths(paths)
    return JointPlan(
        paths=[Path(p) for p in padded],
        cost=int(data["cost"]),
        makespan=makespan,
    )


def save_plan(plan: JointPlan, path, wall_time: Optional[float] = None, **meta) -> None:
    with open(path, "w") as fh:
        json.dump(plan_to_dict(plan, wall_time=wall_time, **meta), fh, indent=1)
        fh.write("\n")


def load_plan(path) -> JointPlan:
    with open(path) as fh:
        return plan_from_dict(json.load(fh))
