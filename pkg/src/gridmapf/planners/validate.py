"""Joint-plan validation against world geometry and transition-mode rules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..world import GridWorld
from .common import JointPlan, TransitionMode


@dataclass(frozen=True)
class Violation:
    kind: str  # start_mismatch | goal_missed | discontinuity | obstacle |
    #            out_of_bounds | vertex_conflict | edge_conflict | follow_conflict
    t: Optional[int]
    agents: tuple[int, ...]
    detail: str


def validate_plan(
    world: GridWorld, plan: JointPlan, mode: TransitionMode = TransitionMode.STANDARD
) -> list[Violation]:
    """All rule violations in the plan; empty list means the plan is valid."""
    out: list[Violation] = []
    n = len(plan.paths)
    if n != len(world.agents):
        out.append(Violation("agent_count", None, (), f"plan has {n} paths, world has {len(world.agents)} agents"))
        return out
    makespan = plan.makespan

    for i, (path, agent) in enumerate(zip(plan.paths, world.agents)):
        if path.positions[0] != agent.position:
            out.append(Violation(
                "start_mismatch", 0, (i,),
                f"agent {i} starts at {path.positions[0]}, world says {agent.position}"))
        if path.positions[-1] != agent.goal:
            out.append(Violation(
                "goal_missed", makespan, (i,),
                f"agent {i} ends at {path.positions[-1]}, goal is {agent.goal}"))
        for t, pos in enumerate(path.positions):
            if not world.in_bounds(pos):
                out.append(Violation("out_of_bounds", t, (i,), f"agent {i} at {pos}"))
            elif world.obstacles[pos]:
                out.append(Violation("obstacle", t, (i,), f"agent {i} on obstacle {pos}"))
        for t in range(1, len(path.positions)):
            a, b = path.positions[t - 1], path.positions[t]
            if abs(a[0] - b[0]) + abs(a[1] - b[1]) > 1:
                out.append(Violation(
                    "discontinuity", t, (i,), f"agent {i} jumps {a} -> {b}"))

    for t in range(makespan + 1):
        cur = plan.positions_at(t)
        for i in range(n):
            for j in range(i + 1, n):
                if cur[i] == cur[j]:
                    out.append(Violation(
                        "vertex_conflict", t, (i, j),
                        f"agents {i} and {j} both at {cur[i]}"))
        if t == 0:
            continue
        prev = plan.positions_at(t - 1)
        for i in range(n):
            for j in range(n):
                if i == j or cur[i] != prev[j] or cur[i] == prev[i]:
                    continue
                if mode == TransitionMode.RESTRICTED:
                    out.append(Violation(
                        "follow_conflict", t, (min(i, j), max(i, j)),
                        f"agent {i} enters {cur[i]}, occupied by agent {j} at t={t - 1}"))
                elif cur[j] == prev[i] and i < j:
                    out.append(Violation(
                        "edge_conflict", t, (i, j),
                        f"agents {i} and {j} swap through {prev[i]}<->{prev[j]}"))
    return out
