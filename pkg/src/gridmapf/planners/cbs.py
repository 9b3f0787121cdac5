"""Conflict-Based Search: optimal sum-of-costs joint planning.

High level: best-first search over a constraint tree ordered by cost. Each
node splits on one conflict into two children, each adding one constraint and
replanning one agent. Conflicts are prioritized cardinal > semi-cardinal >
non-cardinal (classified by replanning both sides), equal-cost children that
strictly reduce the conflict count are adopted in place (bypass), and
identical constraint sets reached through different split orders are expanded
once. All three measures only change which optimal solution is found first.
"""

from __future__ import annotations

import heapq
import itertools
import time
from typing import Optional

from ..kernels import bfs_dist
from ..world import GridWorld
from .common import (
    Conflict,
    Constraint,
    JointPlan,
    Timeout,
    TransitionMode,
    all_conflicts,
    make_joint_plan,
)
from .space_time import space_time_astar

# How many conflicts per node to classify before settling for the best found.
_CLASSIFY_CAP = 12


def check_instance(
    world: GridWorld,
    starts: list[tuple[int, int]],
    goals: list[tuple[int, int]],
) -> bool:
    """Cheap feasibility screen: free cells, distinct starts/goals, reachable.

    Returns False for instances that are trivially unsolvable (shared goal
    cells or statically unreachable goals); raises on malformed input.
    """
    if len(starts) != len(goals):
        raise ValueError("starts and goals must pair up")
    for pos in itertools.chain(starts, goals):
        if not world.in_bounds(pos):
            raise ValueError(f"{pos} out of bounds")
        if world.obstacles[pos]:
            raise ValueError(f"{pos} is an obstacle")
    if len(set(starts)) != len(starts):
        raise ValueError("agent starts must be distinct cells")
    if len(set(goals)) != len(goals):
        return False
    for start, goal in zip(starts, goals):
        if bfs_dist(world.obstacles, start)[goal] < 0:
            return False
    return True


def _arrival(path: list[tuple[int, int]], goal: tuple[int, int]) -> int:
    arrival = 0
    for t, pos in enumerate(path):
        if pos != goal:
            arrival = t + 1
    return arrival


def _target_split(
    conflict: Conflict, paths, goals
) -> Optional[list[tuple[int, Constraint]]]:
    """Split for a vertex conflict on a goal cell whose owner is resting there.

    Either the owner arrives later than the conflict time, or the other agent
    stays off that cell from the conflict time onward.
    """
    if conflict.kind != "vertex":
        return None
    t, i, j = conflict.t, conflict.i, conflict.j
    for owner, other in ((j, i), (i, j)):
        if conflict.cell == goals[owner] and _arrival(paths[owner], goals[owner]) <= t:
            return [
                (other, Constraint.banned_from(other, conflict.cell, t)),
                (owner, Constraint.min_arrival(owner, t)),
            ]
    return None


def _constraints_to_split(conflict: Conflict, paths, goals) -> list[tuple[int, Constraint]]:
    target = _target_split(conflict, paths, goals)
    if target is not None:
        return target
    t, i, j = conflict.t, conflict.i, conflict.j
    if conflict.kind == "vertex":
        return [
            (i, Constraint.vertex(i, conflict.cell, t)),
            (j, Constraint.vertex(j, conflict.cell, t)),
        ]
    if conflict.kind == "edge":
        return [
            (i, Constraint.edge_move(i, paths[i][t - 1], paths[i][t], t - 1)),
            (j, Constraint.edge_move(j, paths[j][t - 1], paths[j][t], t - 1)),
        ]
    # follow: one agent entered `cell`, which the other occupied at t-1
    mover, rester = (i, j) if paths[i][t] == conflict.cell and paths[i][t] != paths[i][t - 1] else (j, i)
    return [
        (mover, Constraint.vertex(mover, conflict.cell, t)),
        (rester, Constraint.vertex(rester, conflict.cell, t - 1)),
    ]


def cbs_solve(
    world: GridWorld,
    starts: list[tuple[int, int]],
    goals: list[tuple[int, int]],
    mode: TransitionMode = TransitionMode.STANDARD,
    timeout: float = 300.0,
    horizon: Optional[int] = None,
) -> Optional[JointPlan]:
    """Optimal JointPlan, or None if unsolvable within the search horizon.

    Raises Timeout when the wall-clock budget runs out.
    """
    deadline = time.monotonic() + timeout
    if not check_instance(world, starts, goals):
        return None
    n = len(starts)
    if horizon is None:
        worst = max(
            int(bfs_dist(world.obstacles, s)[g]) for s, g in zip(starts, goals)
        )
        horizon = 2 * (world.width + world.height) + worst

    def replan(agent: int, constraints: dict[int, frozenset[Constraint]]):
        path = space_time_astar(
            world, starts[agent], goals[agent],
            constraints.get(agent, frozenset()), horizon=horizon,
        )
        return None if path is None else path.positions

    root_constraints: dict[int, frozenset[Constraint]] = {}
    root_paths = []
    for a in range(n):
        p = replan(a, root_constraints)
        if p is None:
            return None
        root_paths.append(p)

    counter = itertools.count()
    root_cost = sum(len(p) - 1 for p in root_paths)
    root_conflicts = all_conflicts(root_paths, mode)
    heap = [
        (root_cost, len(root_conflicts), next(counter), root_constraints, root_paths)
    ]
    seen: set[frozenset[Constraint]] = {frozenset()}

    while heap:
        if time.monotonic() > deadline:
            raise Timeout("cbs timeout")
        cost, n_conf, _, constraints, paths = heapq.heappop(heap)
        conflicts = all_conflicts(paths, mode)
        if not conflicts:
            return make_joint_plan(paths, goals)
        makespan = max(len(p) for p in paths)
        padded = [list(p) + [p[-1]] * (makespan - len(p)) for p in paths]

        # Target conflicts (a resting agent's goal cell) get resolved first;
        # otherwise classify by how many split sides raise the cost and take
        # a fully cardinal conflict immediately.
        ordered = sorted(
            conflicts[:_CLASSIFY_CAP],
            key=lambda cf: (_target_split(cf, padded, goals) is None),
        )
        best_rank = 3
        best_children = None
        for conflict in ordered:
            is_target = _target_split(conflict, padded, goals) is not None
            children = []
            raised = 0
            for agent, con in _constraints_to_split(conflict, padded, goals):
                child_constraints = dict(constraints)
                child_constraints[agent] = constraints.get(agent, frozenset()) | {con}
                new_path = replan(agent, child_constraints)
                if new_path is None:
                    raised += 1
                    continue
                child_paths = list(paths)
                child_paths[agent] = new_path
                child_cost = sum(len(p) - 1 for p in child_paths)
                if child_cost > cost:
                    raised += 1
                children.append((child_cost, child_constraints, child_paths))
            rank = -1 if is_target else 2 - raised
            if rank < best_rank:
                best_rank = rank
                best_children = children
                if rank <= 0:
                    break

        bypass = None
        for child_cost, child_constraints, child_paths in best_children:
            child_conf = len(all_conflicts(child_paths, mode))
            if child_cost == cost and child_conf < len(conflicts):
                bypass = (child_cost, child_conf, child_paths)
                break
        if bypass is not None:
            child_cost, child_conf, child_paths = bypass
            heapq.heappush(
                heap, (child_cost, child_conf, next(counter), constraints, child_paths)
            )
            continue
        for child_cost, child_constraints, child_paths in best_children:
            key = frozenset().union(*child_constraints.values())
            if key in seen:
                continue
            seen.add(key)
            child_conf = len(all_conflicts(child_paths, mode))
            heapq.heappush(
                heap,
                (child_cost, child_conf, next(counter), child_constraints, child_paths),
            )
    return None
