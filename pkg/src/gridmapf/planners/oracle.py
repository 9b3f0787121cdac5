"""Exhaustive joint-space oracle for tiny instances (test-only ground truth).

Searches the joint configuration space augmented with per-agent "parked"
bits. An unparked agent pays 1 per step (even waiting on its goal, since it
may still leave later); parking is a free move available on the goal cell and
pins the agent there forever. The summed payments equal the steps each agent
takes until finally resting on goal, so the search minimizes the exact
sum-of-costs. Exhausting the finite state space proves unsolvability.
"""

from __future__ import annotations

import heapq
import itertools
from collections import deque
from typing import Optional

from ..world import GridWorld
from .common import JointPlan, TransitionMode, make_joint_plan, transition_collisions

MAX_AGENTS = 3
MAX_CELLS = 36

_DELTAS = ((-1, 0), (0, -1), (0, 0), (0, 1), (1, 0))


def _own_bfs(world: GridWorld, source: tuple[int, int]) -> dict[tuple[int, int], int]:
    """Plain deque BFS, deliberately separate from the planner kernels."""
    dist = {source: 0}
    queue = deque([source])
    while queue:
        r, c = queue.popleft()
        for dr, dc in _DELTAS:
            if dr == 0 and dc == 0:
                continue
            nxt = (r + dr, c + dc)
            if nxt in dist or not world.in_bounds(nxt) or world.obstacles[nxt]:
                continue
            dist[nxt] = dist[(r, c)] + 1
            queue.append(nxt)
    return dist


def joint_oracle(
    world: GridWorld,
    starts: list[tuple[int, int]],
    goals: list[tuple[int, int]],
    mode: TransitionMode = TransitionMode.STANDARD,
) -> Optional[JointPlan]:
    """Exact optimal sum-of-costs plan, or None when provably unsolvable."""
    n = len(starts)
    if n > MAX_AGENTS:
        raise ValueError(f"oracle handles at most {MAX_AGENTS} agents, got {n}")
    if world.width * world.height > MAX_CELLS:
        raise ValueError(
            f"oracle handles at most {MAX_CELLS} cells, got {world.width * world.height}"
        )
    if len(set(starts)) != n:
        raise ValueError("starts must be distinct")
    for pos in itertools.chain(starts, goals):
        if not world.in_bounds(pos) or world.obstacles[pos]:
            raise ValueError(f"{pos} is not a free in-bounds cell")

    dists = [_own_bfs(world, g) for g in goals]
    for i, start in enumerate(starts):
        if start not in dists[i]:
            return None

    def heuristic(positions, parked):
        h = 0
        for i in range(n):
            if not parked & (1 << i):
                h += dists[i].get(positions[i], 1 << 20)
        return h

    full_mask = (1 << n) - 1
    start_state = (tuple(starts), 0)
    best_g = {start_state: 0}
    parent: dict = {start_state: None}
    counter = itertools.count()
    heap = [(heuristic(*start_state), 0, next(counter), start_state)]

    def agent_moves(i, pos, parked_bit):
        if parked_bit:
            return [(pos, True, 0)]
        out = []
        if pos == goals[i]:
            out.append((pos, True, 0))  # park for free
        for dr, dc in _DELTAS:
            nxt = (pos[0] + dr, pos[1] + dc)
            if world.in_bounds(nxt) and not world.obstacles[nxt]:
                out.append((nxt, False, 1))
        return out

    goal_state = None
    while heap:
        f, g, _, state = heapq.heappop(heap)
        if g > best_g.get(state, 1 << 30):
            continue
        positions, parked = state
        if parked == full_mask:
            goal_state = state
            break
        options = [agent_moves(i, positions[i], parked & (1 << i)) for i in range(n)]
        for combo in itertools.product(*options):
            new_positions = tuple(m[0] for m in combo)
            if len(set(new_positions)) != n:
                continue
            if transition_collisions(positions, new_positions, mode):
                continue
            new_parked = parked
            for i, m in enumerate(combo):
                if m[1]:
                    new_parked |= 1 << i
            cost = sum(m[2] for m in combo)
            new_state = (new_positions, new_parked)
            new_g = g + cost
            if new_g < best_g.get(new_state, 1 << 30):
                best_g[new_state] = new_g
                parent[new_state] = state
                hval = heuristic(new_positions, new_parked)
                heapq.heappush(heap, (new_g + hval, new_g, next(counter), new_state))

    if goal_state is None:
        return None

    states = []
    cur = goal_state
    while cur is not None:
        states.append(cur)
        cur = parent[cur]
    states.reverse()
    joint_positions = [list(s[0]) for s in states]
    # Drop trailing park-only steps where nobody moves.
    while len(joint_positions) > 1 and joint_positions[-1] == joint_positions[-2]:
        joint_positions.pop()
    paths = [[step[i] for step in joint_positions] for i in range(n)]
    return make_joint_plan(paths, goals)
