"""Single-agent A* on the static grid, Manhattan heuristic, deterministic ties."""

from __future__ import annotations

import heapq
from typing import Iterable, Optional

from ..world import GridWorld
from .common import Path

# Successors enumerated in lexicographic (drow, dcol) order for determinism.
NEIGHBOR_DELTAS = ((-1, 0), (0, -1), (0, 1), (1, 0))


def astar(
    world: GridWorld,
    start: tuple[int, int],
    goal: tuple[int, int],
    extra_obstacles: Iterable[tuple[int, int]] = (),
) -> Optional[Path]:
    """Shortest 4-connected path avoiding obstacles and `extra_obstacles`.

    Returns None when unreachable. Raises ValueError if start or goal sits on
    a static obstacle.
    """
    if world.obstacles[start]:
        raise ValueError(f"start {start} is an obstacle")
    if world.obstacles[goal]:
        raise ValueError(f"goal {goal} is an obstacle")
    extra = set(extra_obstacles)
    if start in extra or goal in extra:
        return None
    if start == goal:
        return Path([start])

    def h(cell):
        return abs(cell[0] - goal[0]) + abs(cell[1] - goal[1])

    g_score = {start: 0}
    parent: dict[tuple[int, int], tuple[int, int]] = {}
    heap = [(h(start), h(start), start)]
    closed: set[tuple[int, int]] = set()
    while heap:
        f, _, cell = heapq.heappop(heap)
        if cell in closed:
            continue
        closed.add(cell)
        if cell == goal:
            path = [cell]
            while cell in parent:
                cell = parent[cell]
                path.append(cell)
            path.reverse()
            return Path(path)
        g_next = g_score[cell] + 1
        for dr, dc in NEIGHBOR_DELTAS:
            nxt = (cell[0] + dr, cell[1] + dc)
            if not world.in_bounds(nxt) or world.obstacles[nxt] or nxt in extra:
                continue
            if g_next < g_score.get(nxt, 1 << 30):
                g_score[nxt] = g_next
                parent[nxt] = cell
                hn = h(nxt)
                heapq.heappush(heap, (g_next + hn, hn, nxt))
    return None
