"""OD-recursive M*: bounded-suboptimal joint planning.

Per-agent individually-optimal policies are precomputed by backward BFS from
each goal. The joint search follows those policies wherever agents do not
interact; when a transition collides, the colliding agents' sets are merged
and backpropagated so earlier nodes re-expand with those agents coupled.
Each coupled set smaller than the whole team is stepped by a recursive
sub-planner over just those agents; a fully coupled set branches over joint
moves using operator decomposition (one agent assigned per intermediate
entry) under an epsilon-inflated heuristic.

The search graph matches the oracle's: positions plus per-agent "parked"
bits, so costs are exact sum-of-costs (steps until finally resting on goal).
"""

from __future__ import annotations

import heapq
import itertools
import time
from typing import Optional

from ..kernels import bfs_dist
from ..world import GridWorld
from .cbs import check_instance
from .common import (
    JointPlan,
    Timeout,
    TransitionMode,
    make_joint_plan,
    transition_collisions,
)

_DELTAS = ((-1, 0), (0, -1), (0, 0), (0, 1), (1, 0))
_INF = float("inf")


def _canon(col_set) -> tuple:
    return tuple(sorted((frozenset(s) for s in col_set), key=lambda s: tuple(sorted(s))))


def merge_col_set(base: tuple, extra) -> tuple:
    """Merge agent sets into a partition, unioning overlapping groups."""
    groups = [set(s) for s in base]
    for piece in extra:
        merged = set(piece)
        keep = []
        for g in groups:
            if g & merged:
                merged |= g
            else:
                keep.append(g)
        keep.append(merged)
        groups = keep
    return _canon(groups)


class _Node:
    __slots__ = ("g", "back_ptr", "back_set", "col_set", "search_id")

    def __init__(self):
        self.g = _INF
        self.back_ptr = None
        self.back_set: set = set()
        self.col_set: tuple = ()
        self.search_id = -1


class _Context:
    """Shared solver state: grid, policies, deadline, sub-planner memo."""

    def __init__(self, world: GridWorld, goals, mode: TransitionMode,
                 epsilon: float, deadline: float):
        self.world = world
        self.goals = list(goals)
        self.mode = mode
        self.epsilon = epsilon
        self.deadline = deadline
        self.dists = [bfs_dist(world.obstacles, g) for g in goals]
        self._planners: dict[tuple, "_SubPlanner"] = {}
        self._policy_cache: dict[tuple[int, tuple[int, int]], tuple[int, int]] = {}

    def check_deadline(self):
        if time.monotonic() > self.deadline:
            raise Timeout("odrmstar timeout")

    def planner(self, agents: tuple) -> "_SubPlanner":
        key = tuple(sorted(agents))
        if key not in self._planners:
            self._planners[key] = _SubPlanner(self, key)
        return self._planners[key]

    def h_agent(self, agent: int, pos, parked: bool) -> int:
        if parked:
            return 0
        return int(self.dists[agent][pos])

    def policy_step(self, agent: int, pos) -> tuple[int, int]:
        """Next cell along the individually-optimal path (lexicographic ties)."""
        cached = self._policy_cache.get((agent, pos))
        if cached is not None:
            return cached
        dist = self.dists[agent]
        want = int(dist[pos]) - 1
        for dr, dc in _DELTAS:
            if dr == 0 and dc == 0:
                continue
            nxt = (pos[0] + dr, pos[1] + dc)
            if self.world.in_bounds(nxt) and dist[nxt] == want:
                self._policy_cache[(agent, pos)] = nxt
                return nxt
        raise AssertionError(f"no descent step for agent {agent} at {pos}")

    def agent_ops(self, agent: int, pos, parked: bool):
        """All (new_pos, new_parked, cost) moves for a branching agent."""
        if parked:
            return ((pos, True, 0),)
        ops = []
        if pos == self.goals[agent]:
            ops.append((pos, True, 0))
        dist = self.dists[agent]
        for dr, dc in _DELTAS:
            nxt = (pos[0] + dr, pos[1] + dc)
            if (
                self.world.in_bounds(nxt)
                and not self.world.obstacles[nxt]
                and dist[nxt] >= 0  # never leave the goal's free component
            ):
                ops.append((nxt, False, 1))
        return tuple(ops)


class _SubPlanner:
    """M* search over one agent subset; persists learned couplings across queries."""

    def __init__(self, ctx: _Context, agents: tuple):
        self.ctx = ctx
        self.agents = agents  # sorted global agent ids
        self.index = {a: k for k, a in enumerate(agents)}
        self.n = len(agents)
        self.full_mask = (1 << self.n) - 1
        self.nodes: dict = {}
        self.step_cache: dict = {}
        self.dead: set = set()
        self.search_id = 0

    # -- state helpers ------------------------------------------------------

    def _node(self, state) -> _Node:
        node = self.nodes.get(state)
        if node is None:
            node = _Node()
            self.nodes[state] = node
        return node

    def _fresh(self, state) -> _Node:
        node = self._node(state)
        if node.search_id != self.search_id:
            node.search_id = self.search_id
            node.g = _INF
            node.back_ptr = None
        return node

    def h(self, state) -> float:
        positions, parked = state
        total = 0
        for k in range(self.n):
            if not parked & (1 << k):
                total += self.ctx.h_agent(self.agents[k], positions[k], False)
        return total

    def is_terminal(self, state) -> bool:
        return state[1] == self.full_mask

    # -- public queries -----------------------------------------------------

    def next_step(self, state):
        """Next joint state along this subset's plan, or None if unsolvable."""
        if self.is_terminal(state):
            return state
        if state in self.dead:
            return None
        nxt = self.step_cache.get(state)
        if nxt is not None:
            return nxt
        path = self.find_path(state)
        if path is None:
            return None
        return self.step_cache[state]

    def find_path(self, start):
        """Joint-state sequence from `start` to all-parked, or None."""
        if self.is_terminal(start):
            return [start]
        if start in self.dead:
            return None
        self.search_id += 1
        counter = itertools.count()
        node = self._fresh(start)
        node.g = 0
        eps = self.ctx.epsilon
        heap = [(eps * self.h(start), next(counter), "n", start, None)]

        while heap:
            self.ctx.check_deadline()
            _, _, kind, state, payload = heapq.heappop(heap)
            if kind == "od":
                self._extend_od(heap, counter, state, payload)
                continue
            node = self._node(state)
            if node.search_id != self.search_id or node.g == _INF:
                continue
            if self.is_terminal(state):
                return self._finish(state)
            self._expand(heap, counter, state, node)
        self.dead.add(start)
        return None

    def _finish(self, terminal):
        path = [terminal]
        node = self._node(terminal)
        while node.back_ptr is not None:
            path.append(node.back_ptr)
            node = self._node(node.back_ptr)
        path.reverse()
        for a, b in zip(path, path[1:]):
            self.step_cache[a] = b
        return path

    # -- expansion ----------------------------------------------------------

    def _push_node(self, heap, counter, state, node):
        f = node.g + self.ctx.epsilon * self.h(state)
        heapq.heappush(heap, (f, next(counter), "n", state, None))

    def _backprop(self, heap, counter, state, col_set):
        stack = [(state, tuple(col_set))]
        while stack:
            s, cs = stack.pop()
            node = self._node(s)
            merged = merge_col_set(node.col_set, cs)
            if merged == node.col_set:
                continue
            node.col_set = merged
            if node.search_id == self.search_id and node.g < _INF:
                self._push_node(heap, counter, s, node)
            for pred in node.back_set:
                stack.append((pred, merged))

    def _register(self, heap, counter, state, node, new_state, cost):
        """Record a collision-free limited neighbor: link, inherit couplings,
        relax."""
        child = self._fresh(new_state)
        child.back_set.add(state)
        if child.col_set:
            self._backprop(heap, counter, state, child.col_set)
        if node.g + cost < child.g:
            child.g = node.g + cost
            child.back_ptr = state
            self._push_node(heap, counter, new_state, child)

    def _expand(self, heap, counter, state, node):
        positions, parked = state
        if any(set(piece) == set(self.agents) for piece in node.col_set):
            # fully coupled: branch over all agents via operator decomposition
            heapq.heappush(
                heap,
                (node.g + self.ctx.epsilon * self.h(state), next(counter), "od",
                 state, (node.g, ())),
            )
            return

        ops: list = [None] * self.n
        for piece in node.col_set:
            sub = self.ctx.planner(tuple(sorted(piece)))
            sub_state = self._project(state, sub)
            nxt = sub.next_step(sub_state)
            if nxt is None:
                return  # subset unsolvable from here: true dead end
            for a in sub.agents:
                k_sub = sub.index[a]
                k = self.index[a]
                was_parked = bool(sub_state[1] & (1 << k_sub))
                now_parked = bool(nxt[1] & (1 << k_sub))
                new_pos = nxt[0][k_sub]
                cost = 0 if was_parked or (now_parked and new_pos == positions[k]) else 1
                ops[k] = (new_pos, now_parked, cost)
        for k in range(self.n):
            if ops[k] is not None:
                continue
            a = self.agents[k]
            if parked & (1 << k):
                ops[k] = (positions[k], True, 0)
            elif positions[k] == self.ctx.goals[a]:
                ops[k] = (positions[k], True, 0)
            else:
                ops[k] = (self.ctx.policy_step(a, positions[k]), False, 1)

        new_positions = tuple(op[0] for op in ops)
        pairs = [
            frozenset((self.agents[i], self.agents[j]))
            for i, j in transition_collisions(positions, new_positions, self.ctx.mode)
        ]
        if pairs:
            self._backprop(heap, counter, state, pairs)
            return
        new_parked = 0
        for k, op in enumerate(ops):
            if op[1]:
                new_parked |= 1 << k
        cost = sum(op[2] for op in ops)
        self._register(heap, counter, state, node, (new_positions, new_parked), cost)

    def _extend_od(self, heap, counter, state, payload):
        base_g, assigned = payload
        positions, parked = state
        k = len(assigned)
        agent = self.agents[k]
        node = self._node(state)
        pre_cells = set(positions)
        claimed = {op[0] for op in assigned}
        for op in self.ctx.agent_ops(agent, positions[k], bool(parked & (1 << k))):
            new_pos = op[0]
            if new_pos in claimed:
                continue  # vertex conflict with an already-assigned agent
            moved = new_pos != positions[k]
            if moved:
                if self.ctx.mode == TransitionMode.RESTRICTED:
                    if new_pos in pre_cells:
                        continue  # would enter a cell occupied at step start
                else:
                    swap = any(
                        positions[j] == new_pos and assigned[j][0] == positions[k]
                        for j in range(k)
                    )
                    if swap:
                        continue
            new_assigned = assigned + (op,)
            if k + 1 == self.n:
                new_positions = tuple(o[0] for o in new_assigned)
                new_parked = 0
                for idx, o in enumerate(new_assigned):
                    if o[1]:
                        new_parked |= 1 << idx
                cost = sum(o[2] for o in new_assigned)
                self._register(
                    heap, counter, state, node,
                    (new_positions, new_parked), cost,
                )
            else:
                g_part = base_g + sum(o[2] for o in new_assigned)
                h_part = sum(
                    self.ctx.h_agent(self.agents[i], new_assigned[i][0], new_assigned[i][1])
                    for i in range(k + 1)
                ) + sum(
                    self.ctx.h_agent(self.agents[i], positions[i], bool(parked & (1 << i)))
                    for i in range(k + 1, self.n)
                )
                heapq.heappush(
                    heap,
                    (g_part + self.ctx.epsilon * h_part, next(counter), "od",
                     state, (base_g, new_assigned)),
                )

    def _project(self, state, sub: "_SubPlanner"):
        positions, parked = state
        sub_positions = tuple(positions[self.index[a]] for a in sub.agents)
        sub_parked = 0
        for k_sub, a in enumerate(sub.agents):
            if parked & (1 << self.index[a]):
                sub_parked |= 1 << k_sub
        return (sub_positions, sub_parked)


def odrmstar_solve(
    world: GridWorld,
    starts: list[tuple[int, int]],
    goals: list[tuple[int, int]],
    epsilon: float = 1.0,
    mode: TransitionMode = TransitionMode.STANDARD,
    timeout: float = 60.0,
) -> Optional[JointPlan]:
    """Joint plan with cost <= epsilon * optimal, or None if unsolvable.

    Raises Timeout when the wall-clock budget runs out.
    """
    if epsilon < 1.0:
        raise ValueError("epsilon must be >= 1")
    deadline = time.monotonic() + timeout
    if not check_instance(world, starts, goals):
        return None
    n = len(starts)
    ctx = _Context(world, goals, mode, float(epsilon), deadline)
    top = ctx.planner(tuple(range(n)))
    states = top.find_path((tuple(starts), 0))
    if states is None:
        return None
    joint_positions = [list(s[0]) for s in states]
    while len(joint_positions) > 1 and joint_positions[-1] == joint_positions[-2]:
        joint_positions.pop()
    paths = [[step[i] for step in joint_positions] for i in range(n)]
    return make_joint_plan(paths, goals)
