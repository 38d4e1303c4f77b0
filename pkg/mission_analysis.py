#!/usr/bin/env python3
"""
Mission Analysis

Turns a parsed Mission into a GroundMission:
1. Resolves agent and location selectors (explicit lists, ontology tag queries,
   attribute filters)
2. Applies singleton sugar and and-expansion (one ground constraint per
   location of the first argument)
3. Runs static checks: initial capacities, ontology shape, static reachability
   of goals and visits

Filters are evaluated with three-valued logic: a comparison on a missing
attribute is unknown, and an unknown result at the top of the filter means
"no match".
"""

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

from mission_model import (
    Agent,
    And,
    AttrValue,
    Comparison,
    Constraint,
    ExplicitAgents,
    ExplicitEdges,
    ExplicitNodes,
    FilterExpr,
    FilterNode,
    Graph,
    GroundConstraint,
    InvalidEdgeError,
    Location,
    LocationConstraint,
    LocationKind,
    Mission,
    NodeSupportedFrom,
    Not,
    Ontology,
    Or,
    PredicateKind,
    Selector,
    Severity,
    SourceSpan,
    Support,
    TagAtom,
    TagQuery,
    matches,
)
from mission_parser import format_filter

logger = logging.getLogger(__name__)


class StaticCode(str, Enum):
    UNKNOWN_LOCATION = "UnknownLocation"
    UNKNOWN_AGENT = "UnknownAgent"
    UNKNOWN_TAG = "UnknownTag"
    EMPTY_SELECTOR = "EmptySelector"
    INIT_CAPACITY_EXCEEDED = "InitCapacityExceeded"
    TYPE_MISMATCH_IN_FILTER = "TypeMismatchInFilter"
    GOAL_UNREACHABLE_STATIC = "GoalUnreachableStatic"
    ONTOLOGY_CYCLE = "OntologyCycle"
    MISSING_FILTER_ATTRIBUTE = "MissingFilterAttribute"


@dataclass(frozen=True)
class StaticDiagnostic:
    severity: Severity
    code: StaticCode
    message: str
    span: Optional[SourceSpan] = None

    def __str__(self) -> str:
        where = f" {self.span}" if self.span else ""
        return f"{self.severity.value}{where} [{self.code.value}] {self.message}"


class StaticError(Exception):
    """Resolution failure for a single selector or constraint."""

    def __init__(self, diagnostic: StaticDiagnostic):
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


def _error(code: StaticCode, message: str, span: Optional[SourceSpan] = None) -> StaticError:
    return StaticError(StaticDiagnostic(Severity.ERROR, code, message, span))


@dataclass(frozen=True)
class GroundMission:
    """A mission whose constraints all name concrete agents and locations."""
    graph: Graph
    ontology: Ontology
    agents: Tuple[Agent, ...]
    ground: Tuple[GroundConstraint, ...]

    @cached_property
    def agent_names(self) -> Tuple[str, ...]:
        return tuple(a.name for a in self.agents)

    def agent(self, name: str) -> Optional[Agent]:
        for agent in self.agents:
            if agent.name == name:
                return agent
        return None

    @cached_property
    def avoided(self) -> Mapping[str, FrozenSet[Location]]:
        """Per-agent set of locations forbidden by avoid constraints."""
        forbidden: Dict[str, set] = {a.name: set() for a in self.agents}
        for g in self.ground:
            if g.kind.is_avoid:
                for name in g.agents:
                    forbidden[name].add(g.location)
        return {name: frozenset(locs) for name, locs in forbidden.items()}


@dataclass
class CheckResult:
    mission: Optional[GroundMission]
    diagnostics: List[StaticDiagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.mission is not None

    @property
    def errors(self) -> List[StaticDiagnostic]:
        return [d for d in self.diagnostics if d.severity == Severity.ERROR]


# ---------------------------------------------------------------------------
# Resolution
# ---------------------------------------------------------------------------

def _tag_values(attrs: Mapping[str, AttrValue]) -> List[str]:
    return [v.value for v in attrs.values() if v.is_tag]


def _effective_ontology(m: Mission) -> Tuple[Ontology, List[StaticDiagnostic]]:
    """Declared ontology plus undeclared agent/location tags registered as roots."""
    warnings: List[StaticDiagnostic] = []
    extra: List[str] = []

    def register(tag: str, owner: str, span: Optional[SourceSpan]) -> None:
        if tag in m.ontology or tag in extra:
            return
        extra.append(tag)
        warnings.append(StaticDiagnostic(
            Severity.WARNING, StaticCode.UNKNOWN_TAG,
            f"tag '{tag}' on {owner} is not declared in the ontology; registered as a root",
            span))

    for agent in m.agents:
        for tag in agent.tags():
            register(tag, f"agent {agent.name}", agent.span)
    for loc in m.graph.locations:
        for tag in _tag_values(m.graph.attributes_of(loc)):
            register(tag, f"location {loc}", None)

    return m.ontology.with_roots(extra), warnings


class MissionResolver:
    """Resolves selectors of one mission against its effective ontology.

    Warnings produced while resolving (unknown tags, missing filter
    attributes) accumulate in ``diagnostics``.
    """

    def __init__(self, m: Mission):
        self.mission = m
        self.ontology, self.diagnostics = _effective_ontology(m)
        self._order = {a.name: i for i, a in enumerate(m.agents)}

    # -- filters -----------------------------------------------------------

    def _compare(self, value: AttrValue, op: str, literal: AttrValue) -> bool:
        if op in ("<", "<=", ">", ">="):
            if not (value.is_number and literal.is_number):
                raise _error(StaticCode.TYPE_MISMATCH_IN_FILTER,
                             f"'{op}' needs numbers, got {value.kind.value} and {literal.kind.value}")
            a, b = value.value, literal.value
            return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]

        if value.is_number != literal.is_number:
            raise _error(StaticCode.TYPE_MISMATCH_IN_FILTER,
                         f"'{op}' compares {value.kind.value} with {literal.kind.value}")
        equal = value.value == literal.value
        return equal if op == "==" else not equal

    def _has_tag(self, attrs: Mapping[str, AttrValue], tag: str) -> bool:
        if tag not in self.ontology:
            raise _error(StaticCode.UNKNOWN_TAG, f"unknown tag '{tag}'")
        return any(self.ontology.descendant_or_equal(t, tag) for t in _tag_values(attrs))

    def evaluate(self, expr: FilterNode, attrs: Mapping[str, AttrValue], missing: set) -> Optional[bool]:
        """Kleene evaluation; ``None`` means unknown."""
        if isinstance(expr, Comparison):
            value = attrs.get(expr.attr)
            if value is None:
                missing.add(expr.attr)
                return None
            return self._compare(value, expr.op, expr.literal)
        if isinstance(expr, TagAtom):
            return self._has_tag(attrs, expr.tag)
        if isinstance(expr, Not):
            inner = self.evaluate(expr.operand, attrs, missing)
            return None if inner is None else not inner
        left = self.evaluate(expr.left, attrs, missing)
        right = self.evaluate(expr.right, attrs, missing)
        if isinstance(expr, And):
            if left is False or right is False:
                return False
            return None if left is None or right is None else True
        if left is True or right is True:
            return True
        return None if left is None or right is None else False

    def _filter(self, expr: FilterNode, candidates: Iterable[Tuple[str, Mapping[str, AttrValue]]]) -> List[str]:
        """Labels of candidates whose attributes satisfy ``expr``."""
        selected = []
        missing_on: Dict[str, List[str]] = defaultdict(list)
        for label, attrs in candidates:
            missing: set = set()
            if self.evaluate(expr, attrs, missing) is True:
                selected.append(label)
            for name in missing:
                missing_on[name].append(label)
        for name, labels in missing_on.items():
            self.diagnostics.append(StaticDiagnostic(
                Severity.WARNING, StaticCode.MISSING_FILTER_ATTRIBUTE,
                f"attribute '{name}' is missing on {', '.join(labels)}; treated as no match"))
        return selected

    # -- agents ------------------------------------------------------------

    def agents(self, sel: Selector) -> List[str]:
        m = self.mission
        if isinstance(sel, ExplicitAgents):
            for name in sel.names:
                if name not in self._order:
                    raise _error(StaticCode.UNKNOWN_AGENT, f"unknown agent '{name}'")
            names = set(sel.names)
        elif isinstance(sel, TagQuery):
            if sel.tag not in self.ontology:
                raise _error(StaticCode.UNKNOWN_TAG, f"unknown tag '{sel.tag}'")
            names = {a.name for a in m.agents if matches(a, sel.tag, self.ontology)}
        elif isinstance(sel, FilterExpr):
            names = set(self._filter(sel.expr, ((a.name, a.attrs) for a in m.agents)))
        else:
            raise _error(StaticCode.UNKNOWN_AGENT, "expected agents, got a location list")

        if not names:
            raise _error(StaticCode.EMPTY_SELECTOR, f"agent selector {_describe(sel)} selects no agent")
        return sorted(names, key=self._order.__getitem__)

    # -- locations ---------------------------------------------------------

    def locations(self, sel: Selector, kind: LocationKind) -> List[Location]:
        graph = self.mission.graph
        wanted = "nodes" if kind == LocationKind.NODE else "edges"

        if isinstance(sel, ExplicitNodes):
            if kind != LocationKind.NODE:
                raise _error(StaticCode.UNKNOWN_LOCATION, "node list given where edges are required")
            result = [Location.node(n) for n in sel.ids]
        elif isinstance(sel, ExplicitEdges):
            if kind != LocationKind.EDGE:
                raise _error(StaticCode.UNKNOWN_LOCATION, "edge list given where nodes are required")
            try:
                result = [Location.edge(u, v) for u, v in sel.edges]
            except InvalidEdgeError as e:
                raise _error(StaticCode.UNKNOWN_LOCATION, str(e))
        elif isinstance(sel, TagQuery):
            if sel.tag not in self.ontology:
                raise _error(StaticCode.UNKNOWN_TAG, f"unknown tag '{sel.tag}'")
            result = [loc for loc in graph.locations
                      if loc.kind == kind and self._has_tag(graph.attributes_of(loc), sel.tag)]
        elif isinstance(sel, FilterExpr):
            pool = [loc for loc in graph.locations if loc.kind == kind]
            by_label = {str(loc): loc for loc in pool}
            labels = self._filter(sel.expr, ((str(loc), self._location_attrs(loc)) for loc in pool))
            result = [by_label[label] for label in labels]
        else:
            raise _error(StaticCode.UNKNOWN_LOCATION, f"expected {wanted}, got an agent list")

        for loc in result:
            if not graph.has(loc):
                raise _error(StaticCode.UNKNOWN_LOCATION, f"unknown location {loc}")
        result = list(dict.fromkeys(result))
        if not result:
            raise _error(StaticCode.EMPTY_SELECTOR, f"location selector {_describe(sel)} selects no {wanted}")
        return result

    def _location_attrs(self, loc: Location) -> Mapping[str, AttrValue]:
        attrs = dict(self.mission.graph.attributes_of(loc))
        attrs.setdefault("capacity", AttrValue.number(self.mission.graph.capacity_of(loc)))
        return attrs

    # -- expansion ---------------------------------------------------------

    def node(self, node_id: int) -> Location:
        loc = Location.node(node_id)
        if not self.mission.graph.has(loc):
            raise _error(StaticCode.UNKNOWN_LOCATION, f"unknown node {node_id}")
        return loc

    def expand(self, c: Constraint, index: int = -1) -> List[GroundConstraint]:
        before = len(self.diagnostics)
        try:
            return self._expand(c, index)
        except StaticError as e:
            if e.diagnostic.span is None and c.span is not None:
                raise StaticError(replace(e.diagnostic, span=c.span)) from e
            raise
        finally:
            # warnings raised while resolving point at the constraint
            self.diagnostics[before:] = [
                replace(d, span=c.span) if d.span is None else d for d in self.diagnostics[before:]
            ]

    def _expand(self, c: Constraint, index: int) -> List[GroundConstraint]:
        if isinstance(c, Support):
            for name in (c.unit1, c.unit2):
                if name not in self._order:
                    raise _error(StaticCode.UNKNOWN_AGENT, f"unknown agent '{name}'")
            return [GroundConstraint(
                PredicateKind.SUPPORT, self.node(c.node1), (c.unit1,),
                support_node=self.node(c.node2), supporter=c.unit2, source=index)]

        if isinstance(c, NodeSupportedFrom):
            support = self.node(c.support_node)
            return [
                GroundConstraint(PredicateKind.NODE_SUPPORTED_FROM, loc, (), support_node=support, source=index)
                for loc in self.locations(c.nodes, LocationKind.NODE)
            ]

        kind = LocationKind.EDGE if c.kind.targets_edges else LocationKind.NODE
        locations = self.locations(c.locations, kind)
        agents = tuple(self.agents(c.agents))
        return [GroundConstraint(c.kind, loc, agents, source=index) for loc in locations]


def _describe(sel: Selector) -> str:
    if isinstance(sel, TagQuery):
        return f'"{sel.tag}"'
    if isinstance(sel, FilterExpr):
        return f'"{format_filter(sel.expr)}"'
    if isinstance(sel, ExplicitAgents):
        return "[" + ", ".join(sel.names) + "]"
    if isinstance(sel, ExplicitNodes):
        return "[" + ", ".join(str(n) for n in sel.ids) + "]"
    return "[" + ", ".join(f"({u}, {v})" for u, v in sel.edges) + "]"


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def resolve_agent_selector(sel: Selector, m: Mission) -> List[str]:
    """Agent names selected by ``sel``, in declaration order. Raises StaticError."""
    return MissionResolver(m).agents(sel)


def resolve_location_selector(sel: Selector, m: Mission, kind: LocationKind) -> List[Location]:
    """Locations of ``kind`` selected by ``sel``. Raises StaticError."""
    return MissionResolver(m).locations(sel, kind)


def and_expand(c: Constraint, m: Mission, index: int = -1) -> List[GroundConstraint]:
    """One ground constraint per location of the first argument. Raises StaticError."""
    return MissionResolver(m).expand(c, index)


def _reachability_warnings(gm: GroundMission, m: Mission) -> List[StaticDiagnostic]:
    warnings = []
    graph = gm.graph
    reach_cache: Dict[Tuple[Location, FrozenSet[Location]], Dict[Location, int]] = {}

    def can_reach(name: str, target: Location) -> bool:
        blocked = gm.avoided[name]
        key = (target, blocked)
        if key not in reach_cache:
            reach_cache[key] = graph.distances_to(target, blocked)
        return gm.agent(name).init in reach_cache[key]

    for g in gm.ground:
        if g.kind != PredicateKind.NODE_GOAL and not g.kind.is_visit:
            continue
        if not any(can_reach(name, g.location) for name in g.agents):
            what = "goal" if g.kind == PredicateKind.NODE_GOAL else "visit"
            warnings.append(StaticDiagnostic(
                Severity.WARNING, StaticCode.GOAL_UNREACHABLE_STATIC,
                f"no agent of [{', '.join(g.agents)}] can reach {what} location {g.location}",
                m.constraints[g.source].span if 0 <= g.source < len(m.constraints) else None))
    return warnings


def check_static(m: Mission) -> CheckResult:
    """Resolve every constraint and run the static sanity checks.

    Resolution errors do not stop the check; every constraint is tried so the
    report is complete.

    Returns:
        CheckResult whose ``mission`` is None when any Error diagnostic exists
    """
    resolver = MissionResolver(m)
    diagnostics: List[StaticDiagnostic] = []

    cycle = resolver.ontology.find_cycle()
    if cycle:
        diagnostics.append(StaticDiagnostic(
            Severity.ERROR, StaticCode.ONTOLOGY_CYCLE,
            f"ontology contains a cycle: {' -> '.join(cycle + cycle[:1])}"))

    for agent in m.agents:
        if not m.graph.has(agent.init):
            diagnostics.append(StaticDiagnostic(
                Severity.ERROR, StaticCode.UNKNOWN_LOCATION,
                f"agent {agent.name} starts on undeclared location {agent.init}", agent.span))

    ground: List[GroundConstraint] = []
    for index, c in enumerate(m.constraints):
        try:
            ground.extend(resolver.expand(c, index))
        except StaticError as e:
            diagnostics.append(e.diagnostic)

    occupancy = Counter(a.init for a in m.agents if m.graph.has(a.init))
    for loc, count in sorted(occupancy.items()):
        if count > m.graph.capacity_of(loc):
            first = next(a for a in m.agents if a.init == loc)
            diagnostics.append(StaticDiagnostic(
                Severity.ERROR, StaticCode.INIT_CAPACITY_EXCEEDED,
                f"{count} agents start on {loc} whose capacity is {m.graph.capacity_of(loc)}", first.span))

    diagnostics = resolver.diagnostics + diagnostics
    if any(d.severity == Severity.ERROR for d in diagnostics):
        logger.info(f"Static check failed with {sum(d.severity == Severity.ERROR for d in diagnostics)} error(s)")
        return CheckResult(None, diagnostics)

    gm = GroundMission(graph=m.graph, ontology=resolver.ontology, agents=tuple(m.agents), ground=tuple(ground))
    diagnostics.extend(_reachability_warnings(gm, m))
    logger.debug(f"Static check passed: {len(gm.ground)} ground constraints")
    return CheckResult(gm, diagnostics)


def ground_to_mission(gm: GroundMission) -> Mission:
    """Explicit Mission equivalent to ``gm``: every constraint names its single location and agents."""
    constraints: List[Constraint] = []
    for g in gm.ground:
        if g.kind == PredicateKind.SUPPORT:
            constraints.append(Support(g.agents[0], g.location.u, g.supporter, g.support_node.u))
        elif g.kind == PredicateKind.NODE_SUPPORTED_FROM:
            constraints.append(NodeSupportedFrom(ExplicitNodes((g.location.u,)), g.support_node.u))
        else:
            if g.location.is_edge:
                locations = ExplicitEdges((g.location.endpoints,))
            else:
                locations = ExplicitNodes((g.location.u,))
            constraints.append(LocationConstraint(g.kind, locations, ExplicitAgents(g.agents)))
    return Mission(graph=gm.graph, ontology=gm.ontology, agents=gm.agents, constraints=tuple(constraints))
