#!/usr/bin/env python3
"""
Mission Planner

Makespan-optimal planning for ground missions:
- Iterative deepening on the horizon T, starting from an admissible lower bound
- Depth-first search over joint moves at each T, with forward checking of
  capacities, avoid sets and support implications
- Distance-to-go pruning for goals and visits, plus a bipartite matching
  between goal nodes and the agents that can still reach them
- A dead-state memo shared across horizons: a (positions, visits) state that
  cannot finish in r steps cannot finish in fewer either, since waiting in
  place is always legal

``brute_force_plan`` is an exhaustive breadth-first oracle for small instances.
"""

import logging
import random
from collections import Counter, deque
from dataclasses import dataclass
from itertools import product
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple, Union

import networkx as nx

from mission_analysis import GroundMission
from mission_model import (
    Graph,
    GroundConstraint,
    Location,
    Plan,
    PredicateKind,
    ordered_successors,
)
from utils.deadline import Deadline, DeadlineExceeded
from utils.planner_config import DEFAULT_MAX_HORIZON, PlannerConfig

logger = logging.getLogger(__name__)

INF = float("inf")

# brute-force guard
MAX_ORACLE_LOCATIONS = 12
MAX_ORACLE_AGENTS = 3


class InstanceTooLargeError(Exception):
    """Raised when the brute-force oracle refuses an instance."""


@dataclass(frozen=True)
class Solved:
    plan: Plan


@dataclass(frozen=True)
class InfeasibleUpTo:
    horizon: int


@dataclass(frozen=True)
class Timeout:
    best_known: Optional[Plan] = None


PlanOutcome = Union[Solved, InfeasibleUpTo, Timeout]

State = Tuple[Tuple[Location, ...], int]


class _Problem:
    """Index-based view of a GroundMission shared by both planners."""

    def __init__(self, gm: GroundMission):
        self.gm = gm
        self.graph: Graph = gm.graph
        self.names = gm.agent_names
        self.n = len(self.names)
        index = {name: i for i, name in enumerate(self.names)}

        self.init = tuple(a.init for a in gm.agents)
        self.forbidden: List[FrozenSet[Location]] = [gm.avoided[name] for name in self.names]

        self.goals: List[Tuple[Location, Tuple[int, ...]]] = []
        self.visits: List[Tuple[Location, Tuple[int, ...]]] = []
        self.supported_from: Dict[Location, List[Location]] = {}
        self.supports: List[Tuple[int, Location, int, Location]] = []

        for g in gm.ground:
            members = tuple(index[name] for name in g.agents)
            if g.kind == PredicateKind.NODE_GOAL:
                self.goals.append((g.location, members))
            elif g.kind.is_visit:
                self.visits.append((g.location, members))
            elif g.kind == PredicateKind.NODE_SUPPORTED_FROM:
                self.supported_from.setdefault(g.location, []).append(g.support_node)
            elif g.kind == PredicateKind.SUPPORT:
                self.supports.append((members[0], g.location, index[g.supporter], g.support_node))

        self.full_mask = (1 << len(self.visits)) - 1
        self.has_support = bool(self.supported_from or self.supports)
        self._succ: Dict[Location, Tuple[Location, ...]] = {}
        self._dist: Dict[Tuple[Location, FrozenSet[Location]], Dict[Location, int]] = {}

    # -- tables ------------------------------------------------------------

    def moves(self, i: int, loc: Location) -> Tuple[Location, ...]:
        """Legal next locations of agent ``i`` (avoid set removed), canonical order."""
        if loc not in self._succ:
            self._succ[loc] = ordered_successors(loc, self.graph)
        forbidden = self.forbidden[i]
        return tuple(nxt for nxt in self._succ[loc] if nxt not in forbidden)

    def dist(self, i: int, loc: Location, target: Location) -> float:
        key = (target, self.forbidden[i])
        table = self._dist.get(key)
        if table is None:
            table = self._dist[key] = self.graph.distances_to(target, self.forbidden[i])
        return table.get(loc, INF)

    def visit_mask(self, locs: Sequence[Location]) -> int:
        mask = 0
        for bit, (loc, members) in enumerate(self.visits):
            if any(locs[i] == loc for i in members):
                mask |= 1 << bit
        return mask

    # -- state checks ------------------------------------------------------

    def capacity_ok(self, locs: Sequence[Location]) -> bool:
        return all(count <= self.graph.capacity_of(loc) for loc, count in Counter(locs).items())

    def avoid_ok(self, locs: Sequence[Location]) -> bool:
        return all(locs[i] not in self.forbidden[i] for i in range(self.n))

    def supports_ok(self, locs: Sequence[Location]) -> bool:
        for i, loc in enumerate(locs):
            for support in self.supported_from.get(loc, ()):
                if not any(locs[j] == support for j in range(self.n) if j != i):
                    return False
        for i1, n1, i2, n2 in self.supports:
            if locs[i1] == n1 and locs[i2] != n2:
                return False
        return True

    def state_ok(self, locs: Sequence[Location]) -> bool:
        return self.capacity_ok(locs) and self.avoid_ok(locs) and self.supports_ok(locs)

    def finished(self, state: State) -> bool:
        locs, mask = state
        if mask != self.full_mask:
            return False
        return all(any(locs[i] == loc for i in members) for loc, members in self.goals)

    def plan_from(self, path: Sequence[State]) -> Plan:
        traj = {name: tuple(state[0][i] for state in path) for i, name in enumerate(self.names)}
        return Plan(horizon=len(path) - 1, traj=traj)


def _required_targets(gm: GroundMission) -> List[GroundConstraint]:
    return [g for g in gm.ground if g.kind == PredicateKind.NODE_GOAL or g.kind.is_visit]


def lower_bound(gm: GroundMission, max_horizon: int = DEFAULT_MAX_HORIZON) -> int:
    """Admissible makespan bound: the farthest goal or visit, each taken by its closest candidate.

    Returns ``max_horizon + 1`` when some required location is unreachable.

    Examples:
        On P3 with an agent at node 1 and ``node_goal(3, a)``: 4
    """
    problem = _Problem(gm)
    index = {name: i for i, name in enumerate(problem.names)}
    bound = 0
    for g in _required_targets(gm):
        best = min(
            (problem.dist(index[name], problem.init[index[name]], g.location) for name in g.agents),
            default=INF,
        )
        if best == INF:
            return max_horizon + 1
        bound = max(bound, int(best))
    return bound


class _Search:
    """Iterative-deepening depth-first search over joint moves."""

    def __init__(self, problem: _Problem, cfg: PlannerConfig, deadline: Deadline):
        self.p = problem
        self.deadline = deadline
        self.rng = random.Random(cfg.seed) if cfg.seed else None
        self.dead: Dict[State, int] = {}  # state -> largest remaining time proven infeasible
        self.expanded = 0

        n = problem.n
        self.sole_goals = [[loc for loc, members in problem.goals if members == (i,)] for i in range(n)]
        self.sole_visits = [[(bit, loc) for bit, (loc, members) in enumerate(problem.visits) if members == (i,)]
                            for i in range(n)]
        self.own_goals = [[loc for loc, members in problem.goals if i in members] for i in range(n)]
        self.own_visits = [[(bit, loc) for bit, (loc, members) in enumerate(problem.visits) if i in members]
                           for i in range(n)]
        self.goal_nodes = sorted({loc for loc, _ in problem.goals})

    # -- pruning -----------------------------------------------------------

    def hopeless(self, state: State, remaining: int) -> bool:
        """True if ``state`` provably cannot finish within ``remaining`` steps."""
        if self.dead.get(state, -1) >= remaining:
            return True
        locs, mask = state
        p = self.p

        for bit, (loc, members) in enumerate(p.visits):
            if not mask >> bit & 1 and all(p.dist(i, locs[i], loc) > remaining for i in members):
                return True

        for loc, members in p.goals:
            if all(p.dist(i, locs[i], loc) > remaining for i in members):
                return True

        if len(self.goal_nodes) > 1 and not self.goals_matchable(locs, remaining):
            return True
        return False

    def goals_matchable(self, locs: Sequence[Location], remaining: int) -> bool:
        """Every distinct goal node can get its own agent in time."""
        p = self.p
        bipartite = nx.Graph()
        top = [("goal", loc) for loc in self.goal_nodes]
        bipartite.add_nodes_from(top)
        for loc, members in p.goals:
            for i in members:
                if p.dist(i, locs[i], loc) <= remaining:
                    bipartite.add_edge(("goal", loc), ("agent", i))
        matching = nx.bipartite.hopcroft_karp_matching(bipartite, top_nodes=top)
        return all(node in matching for node in top)

    # -- move generation ---------------------------------------------------

    def options(self, i: int, loc: Location, mask: int, remaining: int) -> List[Location]:
        p = self.p
        candidates = []
        for nxt in p.moves(i, loc):
            if any(p.dist(i, nxt, goal) > remaining for goal in self.sole_goals[i]):
                continue
            if any(not mask >> bit & 1 and p.dist(i, nxt, target) > remaining
                   for bit, target in self.sole_visits[i]):
                continue
            candidates.append(nxt)

        targets = self.own_goals[i] + [t for bit, t in self.own_visits[i] if not mask >> bit & 1]

        def closeness(nxt: Location) -> float:
            return min((p.dist(i, nxt, t) for t in targets), default=0)

        if self.rng is not None:
            self.rng.shuffle(candidates)
            candidates.sort(key=closeness)
        else:
            candidates.sort(key=lambda nxt: (closeness(nxt), nxt != loc, nxt))
        return candidates

    def partial_support_ok(self, chosen: List[Optional[Location]], k: int,
                           reachable: List[FrozenSet[Location]]) -> bool:
        """Support implications for agents 0..k, assuming later agents may still move anywhere legal."""
        p = self.p

        def can_be_at(j: int, loc: Location) -> bool:
            return chosen[j] == loc if j <= k else loc in reachable[j]

        for i in range(k + 1):
            for support in p.supported_from.get(chosen[i], ()):
                if not any(can_be_at(j, support) for j in range(p.n) if j != i):
                    return False
        for i1, n1, i2, n2 in p.supports:
            if i1 <= k and chosen[i1] == n1 and not can_be_at(i2, n2):
                return False
        return True

    def joint_moves(self, locs: Tuple[Location, ...], mask: int, remaining: int) -> Iterator[Tuple[Location, ...]]:
        p = self.p
        n = p.n
        if n == 0:
            yield ()
            return
        options = [self.options(i, locs[i], mask, remaining) for i in range(n)]
        if not all(options):
            return
        reachable = [frozenset(o) for o in options]

        chosen: List[Optional[Location]] = [None] * n
        counts: Counter = Counter()
        cursor = [0] * n
        k = 0
        while k >= 0:
            self.deadline.check()
            if cursor[k] == len(options[k]):
                cursor[k] = 0
                k -= 1
                if k >= 0:
                    counts[chosen[k]] -= 1
                    chosen[k] = None
                continue

            loc = options[k][cursor[k]]
            cursor[k] += 1
            if counts[loc] >= p.graph.capacity_of(loc):
                continue
            chosen[k] = loc
            counts[loc] += 1
            if p.has_support and not self.partial_support_ok(chosen, k, reachable):
                counts[loc] -= 1
                chosen[k] = None
                continue
            if k == n - 1:
                yield tuple(chosen)
                counts[loc] -= 1
                chosen[k] = None
            else:
                k += 1

    def children(self, state: State, remaining: int) -> Iterator[State]:
        locs, mask = state
        for nxt in self.joint_moves(locs, mask, remaining):
            yield nxt, mask | self.p.visit_mask(nxt)

    # -- driver ------------------------------------------------------------

    def run(self, horizon: int) -> Optional[List[State]]:
        """A path of ``horizon + 1`` states, or None if none exists."""
        p = self.p
        root = (p.init, p.visit_mask(p.init))
        if horizon == 0:
            return [root] if p.finished(root) else None
        if self.hopeless(root, horizon):
            return None

        path: List[State] = [root]
        stack = [self.children(root, horizon - 1)]
        while stack:
            self.deadline.check()
            t = len(path) - 1
            try:
                child = next(stack[-1])
            except StopIteration:
                stack.pop()
                state = path.pop()
                self.dead[state] = max(self.dead.get(state, -1), horizon - t)
                continue

            remaining = horizon - t - 1
            self.expanded += 1
            if remaining == 0:
                if p.finished(child):
                    path.append(child)
                    return path
                continue
            if self.hopeless(child, remaining):
                self.dead[child] = max(self.dead.get(child, -1), remaining)
                continue
            path.append(child)
            stack.append(self.children(child, remaining - 1))
        return None


def plan(gm: GroundMission, cfg: Optional[PlannerConfig] = None) -> PlanOutcome:
    """Find a makespan-optimal plan for ``gm``.

    Args:
        gm: Mission that passed the static check
        cfg: Search limits (defaults to PlannerConfig())

    Returns:
        Solved(plan), InfeasibleUpTo(h) when no plan of horizon <= h exists,
        or Timeout when the wall-clock budget ran out
    """
    cfg = cfg or PlannerConfig()
    cfg.validate()
    deadline = Deadline(cfg.timeout_ms)
    problem = _Problem(gm)

    if not problem.state_ok(problem.init):
        logger.info("Initial state violates capacity, avoid or support constraints")
        return InfeasibleUpTo(0)

    bound = lower_bound(gm, cfg.max_horizon)
    if bound > cfg.max_horizon:
        logger.info(f"Lower bound {bound} exceeds max horizon {cfg.max_horizon}")
        return InfeasibleUpTo(cfg.max_horizon)

    search = _Search(problem, cfg, deadline)
    try:
        for horizon in range(bound, cfg.max_horizon + 1):
            if deadline.expired():
                raise DeadlineExceeded("time budget exceeded")
            logger.info(f"Searching horizon {horizon}")
            path = search.run(horizon)
            if path is not None:
                logger.info(f"Solved at horizon {horizon} after {search.expanded} expansions "
                            f"({deadline.elapsed_ms():.0f} ms)")
                return Solved(problem.plan_from(path))
    except DeadlineExceeded:
        logger.warning(f"Planner timed out after {deadline.elapsed_ms():.0f} ms")
        return Timeout()

    return InfeasibleUpTo(cfg.max_horizon)


def brute_force_plan(gm: GroundMission, max_horizon: int = DEFAULT_MAX_HORIZON, force: bool = False) -> PlanOutcome:
    """Exhaustive breadth-first search over joint states (testing oracle).

    Raises:
        InstanceTooLargeError: when |V|+|E| > 12 or there are more than 3 agents, unless ``force``
    """
    problem = _Problem(gm)
    size = len(gm.graph.nodes) + len(gm.graph.edges)
    if not force and (size > MAX_ORACLE_LOCATIONS or problem.n > MAX_ORACLE_AGENTS):
        raise InstanceTooLargeError(
            f"brute force refuses {size} locations and {problem.n} agents "
            f"(limits {MAX_ORACLE_LOCATIONS} and {MAX_ORACLE_AGENTS})")

    if not problem.state_ok(problem.init):
        return InfeasibleUpTo(0)

    root = (problem.init, problem.visit_mask(problem.init))
    parent: Dict[State, Optional[State]] = {root: None}
    frontier = deque([root])

    for depth in range(max_horizon + 1):
        for state in frontier:
            if problem.finished(state):
                path = [state]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                return Solved(problem.plan_from(path[::-1]))
        if depth == max_horizon:
            break

        next_frontier = deque()
        for state in frontier:
            locs, mask = state
            choices = [problem.moves(i, locs[i]) for i in range(problem.n)]
            for nxt in product(*choices):
                if not problem.capacity_ok(nxt) or not problem.supports_ok(nxt):
                    continue
                child = (nxt, mask | problem.visit_mask(nxt))
                if child not in parent:
                    parent[child] = state
                    next_frontier.append(child)
        frontier = next_frontier

    return InfeasibleUpTo(max_horizon)
