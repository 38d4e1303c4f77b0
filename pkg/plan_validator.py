#!/usr/bin/env python3
"""
Plan Validator

Checks a Plan against a GroundMission and reports every violation:
movement legality, capacities, goals, visits, avoids and supports.

Validation never stops at the first problem. Malformed plans (missing agents,
trajectories of the wrong length, undeclared locations) produce plumbing
violations instead of exceptions.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple

from mission_analysis import GroundMission
from mission_model import Location, Plan, PredicateKind, successors

logger = logging.getLogger(__name__)


class ViolationKind(str, Enum):
    BAD_INIT = "BadInit"
    ILLEGAL_MOVE = "IllegalMove"
    CAPACITY_EXCEEDED = "CapacityExceeded"
    GOAL_UNSATISFIED = "GoalUnsatisfied"
    VISIT_UNSATISFIED = "VisitUnsatisfied"
    AVOID_VIOLATED = "AvoidViolated"
    SUPPORT_VIOLATED = "SupportViolated"
    HORIZON_MISMATCH = "HorizonMismatch"


_KIND_ORDER = {kind: i for i, kind in enumerate(ViolationKind)}


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    agent: Optional[str] = None
    location: Optional[Location] = None
    timestep: Optional[int] = None
    constraint_index: Optional[int] = None
    message: str = ""

    def to_dict(self) -> Dict:
        """JSON form; locations use the plan encoding."""
        return {
            "kind": self.kind.value,
            "agent": self.agent,
            "location": self.location.token() if self.location is not None else None,
            "timestep": self.timestep,
            "constraint_index": self.constraint_index,
            "message": self.message,
        }


def _normalized_trajectories(p: Plan, gm: GroundMission) -> Tuple[Dict[str, List[Location]], List[Violation]]:
    """Trajectories of every declared agent padded/truncated to ``p.horizon + 1`` entries."""
    violations: List[Violation] = []
    length = p.horizon + 1
    trajectories: Dict[str, List[Location]] = {}

    for name in p.traj:
        if gm.agent(name) is None:
            violations.append(Violation(
                ViolationKind.HORIZON_MISMATCH, agent=name,
                message=f"plan has a trajectory for undeclared agent {name}"))

    for agent in gm.agents:
        traj = list(p.traj.get(agent.name, ()))
        if agent.name not in p.traj:
            violations.append(Violation(
                ViolationKind.HORIZON_MISMATCH, agent=agent.name,
                message=f"plan has no trajectory for agent {agent.name}"))
            traj = [agent.init]
        elif len(traj) != length:
            violations.append(Violation(
                ViolationKind.HORIZON_MISMATCH, agent=agent.name,
                message=f"trajectory of {agent.name} has {len(traj)} entries, horizon {p.horizon} needs {length}"))
            if not traj:
                traj = [agent.init]
        traj = traj[:length] + [traj[-1]] * (length - len(traj))
        trajectories[agent.name] = traj
    return trajectories, violations


def validate(p: Plan, gm: GroundMission) -> List[Violation]:
    """All violations of plan ``p`` against ``gm``, in canonical order.

    Order: timestep (untimed last), then agent declaration order, then kind,
    then constraint index.
    """
    graph = gm.graph
    trajectories, violations = _normalized_trajectories(p, gm)
    horizon = p.horizon
    timeline = range(horizon + 1)

    # movement
    for agent in gm.agents:
        traj = trajectories[agent.name]
        for t, loc in enumerate(traj):
            if not graph.has(loc):
                kind = ViolationKind.BAD_INIT if t == 0 else ViolationKind.ILLEGAL_MOVE
                violations.append(Violation(kind, agent.name, loc, t, message=f"{loc} is not declared"))
        if traj[0] != agent.init and graph.has(traj[0]):
            violations.append(Violation(
                ViolationKind.BAD_INIT, agent.name, traj[0], 0,
                message=f"{agent.name} starts on {traj[0]}, declared init is {agent.init}"))
        for t in range(1, horizon + 1):
            prev, loc = traj[t - 1], traj[t]
            if graph.has(prev) and graph.has(loc) and loc not in successors(prev, graph):
                violations.append(Violation(
                    ViolationKind.ILLEGAL_MOVE, agent.name, loc, t,
                    message=f"{agent.name} cannot move from {prev} to {loc}"))

    # capacity
    for t in timeline:
        occupants: Dict[Location, List[str]] = defaultdict(list)
        for agent in gm.agents:
            occupants[trajectories[agent.name][t]].append(agent.name)
        for loc in sorted(occupants):
            names = occupants[loc]
            if graph.has(loc) and len(names) > graph.capacity_of(loc):
                violations.append(Violation(
                    ViolationKind.CAPACITY_EXCEEDED, None, loc, t,
                    message=f"{len(names)} agents ({', '.join(names)}) on {loc} with capacity {graph.capacity_of(loc)}"))

    def at(name: str, t: int) -> Location:
        return trajectories[name][t]

    for index, g in enumerate(gm.ground):
        if g.kind == PredicateKind.NODE_GOAL:
            if not any(at(name, horizon) == g.location for name in g.agents):
                violations.append(Violation(
                    ViolationKind.GOAL_UNSATISFIED, None, g.location, horizon, index,
                    f"none of [{', '.join(g.agents)}] is on {g.location} at t={horizon}"))

        elif g.kind.is_visit:
            if not any(at(name, t) == g.location for name in g.agents for t in timeline):
                violations.append(Violation(
                    ViolationKind.VISIT_UNSATISFIED, None, g.location, None, index,
                    f"none of [{', '.join(g.agents)}] ever visits {g.location}"))

        elif g.kind.is_avoid:
            for name in g.agents:
                for t in timeline:
                    if at(name, t) == g.location:
                        violations.append(Violation(
                            ViolationKind.AVOID_VIOLATED, name, g.location, t, index,
                            f"{name} is on avoided {g.location}"))

        elif g.kind == PredicateKind.NODE_SUPPORTED_FROM:
            for t in timeline:
                for agent in gm.agents:
                    if at(agent.name, t) != g.location:
                        continue
                    if not any(at(other.name, t) == g.support_node for other in gm.agents if other.name != agent.name):
                        violations.append(Violation(
                            ViolationKind.SUPPORT_VIOLATED, agent.name, g.location, t, index,
                            f"{agent.name} on {g.location} without support on {g.support_node}"))

        elif g.kind == PredicateKind.SUPPORT:
            unit1 = g.agents[0]
            for t in timeline:
                if at(unit1, t) == g.location and at(g.supporter, t) != g.support_node:
                    violations.append(Violation(
                        ViolationKind.SUPPORT_VIOLATED, unit1, g.location, t, index,
                        f"{unit1} on {g.location} while {g.supporter} is not on {g.support_node}"))

    order = {name: i for i, name in enumerate(gm.agent_names)}
    violations.sort(key=lambda v: (
        v.timestep is None,
        v.timestep if v.timestep is not None else 0,
        order.get(v.agent, len(order)) if v.agent is not None else -1,
        _KIND_ORDER[v.kind],
        v.constraint_index if v.constraint_index is not None else -1,
        v.message,
    ))
    if violations:
        logger.debug(f"Plan has {len(violations)} violation(s)")
    return violations
