#!/usr/bin/env python3
"""
PDDL Emitter

Writes a PDDL3 domain/problem pair for a GroundMission so external planners
can be run on the same mission.

Encoding:
- Objects: agents, nodes ``n<id>``, edges ``e<u>-<v>``
- One ``move`` action along the node/edge adjacency, guarded by numeric
  occupancy/capacity fluents
- Goals become ``exists`` disjunctions over the resolved agent set
- Visits, avoids and supports become ``sometime`` / ``always`` trajectory
  constraints

Waiting is the absence of an action here, so plan lengths are not comparable
with the built-in planner's makespan.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

from mission_analysis import GroundMission
from mission_model import GroundConstraint, Location, PredicateKind, ordered_successors
from utils.mission_utils import unique_pddl_names, write_text

logger = logging.getLogger(__name__)

DOMAIN_NAME = "ortacplus"
INDENT = "  "

DOMAIN_TEXT = """(define (domain ortacplus)
  (:requirements :strips :typing :equality :numeric-fluents :constraints :universal-preconditions :existential-preconditions)
  (:types
    agent location - object
    node edge - location
  )
  (:predicates
    (at ?a - agent ?l - location)
    (adjacent ?l1 ?l2 - location)
  )
  (:functions
    (occupancy ?l - location)
    (capacity ?l - location)
  )
  (:action move
    :parameters (?a - agent ?from ?to - location)
    :precondition (and (at ?a ?from) (adjacent ?from ?to) (< (occupancy ?to) (capacity ?to)))
    :effect (and (not (at ?a ?from)) (at ?a ?to) (decrease (occupancy ?from) 1) (increase (occupancy ?to) 1))
  )
)
"""


@dataclass(frozen=True)
class PddlPair:
    domain_text: str
    problem_text: str


def location_name(loc: Location) -> str:
    if loc.is_node:
        return f"n{loc.u}"
    return f"e{loc.u}-{loc.v}"


def emit_domain(gm: GroundMission) -> str:
    """The domain is the same for every mission."""
    return DOMAIN_TEXT


class _ProblemWriter:
    def __init__(self, gm: GroundMission):
        self.gm = gm
        reserved = [location_name(loc) for loc in gm.graph.locations]
        self.agent_names: Dict[str, str] = unique_pddl_names(gm.agent_names, reserved=reserved)

    def agent(self, name: str) -> str:
        return self.agent_names[name]

    def at(self, name: str, loc: Location) -> str:
        return f"(at {self.agent(name)} {location_name(loc)})"

    def goal_clause(self, g: GroundConstraint) -> str:
        options = " ".join(f"(= ?a {self.agent(name)})" for name in g.agents)
        return f"(exists (?a - agent) (and (or {options}) (at ?a {location_name(g.location)})))"

    def constraint_clause(self, g: GroundConstraint) -> str:
        if g.kind.is_visit:
            return f"(sometime (or {' '.join(self.at(name, g.location) for name in g.agents)}))"
        if g.kind.is_avoid:
            return f"(always (and {' '.join(f'(not {self.at(name, g.location)})' for name in g.agents)}))"
        if g.kind == PredicateKind.NODE_SUPPORTED_FROM:
            return (f"(always (forall (?a - agent) (imply (at ?a {location_name(g.location)}) "
                    f"(exists (?b - agent) (and (not (= ?b ?a)) (at ?b {location_name(g.support_node)}))))))")
        return f"(always (imply {self.at(g.agents[0], g.location)} {self.at(g.supporter, g.support_node)}))"

    def header(self) -> List[str]:
        lines = [f"; {DOMAIN_NAME} problem"]
        for original, renamed in self.agent_names.items():
            if original != renamed:
                lines.append(f"; agent {original} -> {renamed}")
        return lines

    def objects(self) -> List[str]:
        graph = self.gm.graph
        groups: List[Tuple[List[str], str]] = [
            ([self.agent(name) for name in self.gm.agent_names], "agent"),
            ([location_name(loc) for loc in graph.node_locations()], "node"),
            ([location_name(loc) for loc in graph.edge_locations()], "edge"),
        ]
        lines = [f"{INDENT}(:objects"]
        for names, type_name in groups:
            if names:
                lines.append(f"{INDENT * 2}{' '.join(names)} - {type_name}")
        lines.append(f"{INDENT})")
        return lines

    def init(self) -> List[str]:
        graph = self.gm.graph
        facts = [self.at(agent.name, agent.init) for agent in self.gm.agents]
        for loc in graph.locations:
            for nxt in ordered_successors(loc, graph):
                if nxt != loc:
                    facts.append(f"(adjacent {location_name(loc)} {location_name(nxt)})")
        occupancy = {loc: 0 for loc in graph.locations}
        for agent in self.gm.agents:
            occupancy[agent.init] = occupancy.get(agent.init, 0) + 1
        facts.extend(f"(= (occupancy {location_name(loc)}) {occupancy[loc]})" for loc in graph.locations)
        facts.extend(f"(= (capacity {location_name(loc)}) {graph.capacity_of(loc)})" for loc in graph.locations)
        return [f"{INDENT}(:init"] + [f"{INDENT * 2}{fact}" for fact in facts] + [f"{INDENT})"]

    def goal(self) -> List[str]:
        goals = [g for g in self.gm.ground if g.kind == PredicateKind.NODE_GOAL]
        if not goals:
            return [f"{INDENT}(:goal (and ))"]
        return ([f"{INDENT}(:goal (and"]
                + [f"{INDENT * 2}{self.goal_clause(g)}" for g in goals]
                + [f"{INDENT}))"])

    def constraints(self) -> List[str]:
        others = [g for g in self.gm.ground if g.kind != PredicateKind.NODE_GOAL]
        if not others:
            return []
        return ([f"{INDENT}(:constraints (and"]
                + [f"{INDENT * 2}{self.constraint_clause(g)}" for g in others]
                + [f"{INDENT}))"])

    def render(self, problem_name: str) -> str:
        lines = self.header()
        lines.append(f"(define (problem {problem_name})")
        lines.append(f"{INDENT}(:domain {DOMAIN_NAME})")
        lines.extend(self.objects())
        lines.extend(self.init())
        lines.extend(self.goal())
        lines.extend(self.constraints())
        lines.append(")")
        return "\n".join(lines) + "\n"


def emit_problem(gm: GroundMission, problem_name: str = "ortacplus-mission") -> str:
    """PDDL3 problem text for ``gm``; byte-identical for equal inputs."""
    return _ProblemWriter(gm).render(problem_name)


def emit_pddl(gm: GroundMission, problem_name: str = "ortacplus-mission") -> PddlPair:
    return PddlPair(emit_domain(gm), emit_problem(gm, problem_name))


def write_pddl_pair(pair: PddlPair, stem: str) -> Tuple[str, str]:
    """Write ``<stem>-domain.pddl`` and ``<stem>-problem.pddl``; OSError propagates.

    Returns:
        The two paths written
    """
    domain_path = f"{stem}-domain.pddl"
    problem_path = f"{stem}-problem.pddl"
    write_text(domain_path, pair.domain_text)
    write_text(problem_path, pair.problem_text)
    logger.info(f"Wrote PDDL pair for stem {stem}")
    return domain_path, problem_path
