"""Space-time A* for one agent under vertex/edge constraints (CBS low level)."""

from __future__ import annotations

import heapq
from typing import Iterable, Optional

from ..kernels import bfs_dist
from ..world import GridWorld
from .common import Constraint, Path

MOVE_DELTAS = ((-1, 0), (0, -1), (0, 0), (0, 1), (1, 0))


def space_time_astar(
    world: GridWorld,
    start: tuple[int, int],
    goal: tuple[int, int],
    constraints: Iterable[Constraint] = (),
    horizon: Optional[int] = None,
) -> Optional[Path]:
    """Minimal-arrival-time path to `goal` respecting the constraints.

    Cost is the number of steps until the final goal arrival; waiting at the
    goal afterward is free, so the goal is accepted only after the last
    vertex constraint on the goal cell and any minimum-arrival bound, and
    only when it was just entered by a move (a path may not hide earlier
    arrival behind trailing goal-waits). Returns None when infeasible within
    the horizon.
    """
    if world.obstacles[start]:
        raise ValueError(f"start {start} is an obstacle")
    if world.obstacles[goal]:
        raise ValueError(f"goal {goal} is an obstacle")

    vertex_c: set[tuple[tuple[int, int], int]] = set()
    edge_c: set[tuple[tuple[int, int], tuple[int, int], int]] = set()
    banned_from: dict[tuple[int, int], int] = {}
    positive_at: dict[int, tuple[int, int]] = {}
    min_arrival = -1
    max_arrival = None
    for con in constraints:
        if con.kind == "vertex":
            vertex_c.add((con.cell, con.t))
        elif con.kind == "edge":
            edge_c.add((con.edge[0], con.edge[1], con.t))
        elif con.kind == "banned_from":
            prev = banned_from.get(con.cell)
            banned_from[con.cell] = con.t if prev is None else min(prev, con.t)
        elif con.kind == "positive":
            if positive_at.get(con.t, con.cell) != con.cell:
                return None  # two different cells required at one time
            positive_at[con.t] = con.cell
        elif con.kind == "min_arrival":
            min_arrival = max(min_arrival, con.t)
        else:  # max_arrival
            max_arrival = con.t if max_arrival is None else min(max_arrival, con.t)

    if goal in banned_from:
        return None  # the agent could never rest on its goal

    dist = bfs_dist(world.obstacles, goal)
    if dist[start] < 0:
        return None
    goal_rest_t = max((t for cell, t in vertex_c if cell == goal), default=-1)
    goal_rest_t = max(goal_rest_t, min_arrival)
    # Resting on the goal is impossible while an off-goal waypoint is pending.
    for t, cell in positive_at.items():
        if cell != goal:
            goal_rest_t = max(goal_rest_t, t)
    if max_arrival is not None and goal_rest_t + 1 > max_arrival:
        return None
    if horizon is None:
        horizon = 2 * (world.width + world.height) + int(dist[start])
    if horizon < max(int(dist[start]), goal_rest_t + 1):
        horizon = max(int(dist[start]), goal_rest_t + 1)

    def blocked(cell, t) -> bool:
        if (cell, t) in vertex_c:
            return True
        want = positive_at.get(t)
        if want is not None and want != cell:
            return True
        ban = banned_from.get(cell)
        return ban is not None and t >= ban

    if blocked(start, 0):
        return None
    if start == goal and goal_rest_t < 0:
        return Path([start])

    def fval(cell, t):
        # Arrival can be no earlier than goal_rest_t + 1 and t + remaining dist.
        return max(t + int(dist[cell]), goal_rest_t + 1)

    # State: (cell, t, fresh) where fresh means "entered this cell by a move
    # this step" (or the start). Only fresh goal states count as arrivals.
    start_state = (start, 0, True)
    heap = [(fval(start, 0), int(dist[start]), 0, start, True)]
    parent: dict[tuple, tuple] = {}

    while heap:
        f, _, t, cell, fresh = heapq.heappop(heap)
        if max_arrival is not None and f > max_arrival:
            return None  # even the best remaining arrival is too late
        state = (cell, t, fresh)
        if cell == goal and fresh and t > goal_rest_t:
            path = [cell]
            while state in parent:
                state = parent[state]
                path.append(state[0])
            path.reverse()
            return Path(path)
        nt = t + 1
        if nt > horizon:
            continue
        for dr, dc in MOVE_DELTAS:
            nxt = (cell[0] + dr, cell[1] + dc)
            if not world.in_bounds(nxt) or world.obstacles[nxt]:
                continue
            if blocked(nxt, nt) or (cell, nxt, t) in edge_c:
                continue
            hd = dist[nxt]
            if hd < 0:
                continue
            nstate = (nxt, nt, nxt != cell)
            # g == t for every route to a space-time state, so the first
            # generation pins the state; no relaxation is ever needed.
            if nstate not in parent and nstate != start_state:
                parent[nstate] = state
                heapq.heappush(heap, (fval(nxt, nt), int(hd), nt, nxt, nxt != cell))
    return None


def path_violates(
    path: list[tuple[int, int]],
    goal: tuple[int, int],
    constraints: Iterable[Constraint],
) -> bool:
    """True if the path (resting at its end) breaks any of the constraints."""
    arrival = 0
    for t, pos in enumerate(path):
        if pos != goal:
            arrival = t + 1

    def at(t):
        return path[t] if t < len(path) else path[-1]

    for con in constraints:
        if con.kind == "vertex":
            if at(con.t) == con.cell:
                return True
        elif con.kind == "edge":
            if at(con.t) == con.edge[0] and at(con.t + 1) == con.edge[1]:
                return True
        elif con.kind == "banned_from":
            if any(at(t) == con.cell for t in range(con.t, len(path))):
                return True
            if path[-1] == con.cell:  # rests there forever
                return True
        elif con.kind == "positive":
            if at(con.t) != con.cell:
                return True
        elif con.kind == "min_arrival":
            if arrival <= con.t:
                return True
        else:  # max_arrival
            if arrival > con.t:
                return True
    return False
