#!/usr/bin/env python3
"""
Mission Model

Core domain types shared by the whole toolchain:
- Graph of nodes and undirected edges (with capacities and attributes)
- Locations (an agent stands on a node OR on an edge)
- Agents, ontology tags, selectors and constraints
- Missions (parsed, unresolved) and plans (per-agent trajectories)

All types are immutable once built. The parser builds them, the analysis
module resolves them, the planner/validator/emitter consume them.
"""

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple, Union

import networkx as nx


DEFAULT_CAPACITY = 1


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class MissionError(Exception):
    """Base class for model-level errors."""


class InvalidEdgeError(MissionError, ValueError):
    """Raised for self-loop edges."""


class UnknownLocationError(MissionError, LookupError):
    """Raised when a location is not declared in the graph."""


class UnknownTagError(MissionError, LookupError):
    """Raised when a tag is not part of the ontology."""


# ---------------------------------------------------------------------------
# Source spans and severities (shared by parser and analysis diagnostics)
# ---------------------------------------------------------------------------

class Severity(str, Enum):
    """Diagnostic severity."""
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class SourceSpan:
    """1-based line/column position of a piece of mission text."""
    line: int
    column: int
    length: int = 0

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


# ---------------------------------------------------------------------------
# Graph elements
# ---------------------------------------------------------------------------

EdgeId = Tuple[int, int]


def normalize_edge(u: int, v: int) -> EdgeId:
    """Return the canonical (smaller id first) form of an undirected edge.

    Examples:
        >>> normalize_edge(9, 8)
        (8, 9)
    """
    if u == v:
        raise InvalidEdgeError(f"self-loop edge ({u}, {v}) is not allowed")
    return (u, v) if u < v else (v, u)


class LocationKind(IntEnum):
    NODE = 0
    EDGE = 1


@dataclass(frozen=True, order=True)
class Location:
    """A node or an edge of the mission graph.

    Ordering is canonical: all nodes (by id) before all edges (by endpoints).
    """
    kind: LocationKind
    u: int
    v: int = -1

    @classmethod
    def node(cls, node_id: int) -> "Location":
        return cls(LocationKind.NODE, node_id)

    @classmethod
    def edge(cls, u: int, v: int) -> "Location":
        a, b = normalize_edge(u, v)
        return cls(LocationKind.EDGE, a, b)

    @property
    def is_node(self) -> bool:
        return self.kind == LocationKind.NODE

    @property
    def is_edge(self) -> bool:
        return self.kind == LocationKind.EDGE

    @property
    def endpoints(self) -> EdgeId:
        if not self.is_edge:
            raise ValueError(f"{self} is not an edge")
        return (self.u, self.v)

    def token(self) -> str:
        """Plan-file encoding: ``n:9`` or ``e:8-9``."""
        if self.is_node:
            return f"n:{self.u}"
        return f"e:{self.u}-{self.v}"

    @classmethod
    def from_token(cls, text: str) -> "Location":
        """Parse the plan-file encoding produced by :meth:`token`."""
        prefix, sep, body = text.partition(":")
        if not sep:
            raise ValueError(f"malformed location '{text}'")
        try:
            if prefix == "n":
                return cls.node(int(body))
            if prefix == "e":
                left, dash, right = body.partition("-")
                if not dash:
                    raise ValueError(f"malformed edge location '{text}'")
                return cls.edge(int(left), int(right))
        except InvalidEdgeError as e:
            raise ValueError(str(e)) from e
        raise ValueError(f"malformed location '{text}'")

    def __str__(self) -> str:
        if self.is_node:
            return str(self.u)
        return f"({self.u}, {self.v})"


# ---------------------------------------------------------------------------
# Attributes
# ---------------------------------------------------------------------------

class AttrKind(str, Enum):
    NUMBER = "number"
    TEXT = "text"
    TAG = "tag"


@dataclass(frozen=True)
class AttrValue:
    """An attribute value: a number, a quoted text, or an ontology tag."""
    kind: AttrKind
    value: Union[int, float, str]

    @classmethod
    def number(cls, value: Union[int, float]) -> "AttrValue":
        return cls(AttrKind.NUMBER, value)

    @classmethod
    def text(cls, value: str) -> "AttrValue":
        return cls(AttrKind.TEXT, value)

    @classmethod
    def tag(cls, name: str) -> "AttrValue":
        return cls(AttrKind.TAG, name)

    @property
    def is_number(self) -> bool:
        return self.kind == AttrKind.NUMBER

    @property
    def is_tag(self) -> bool:
        return self.kind == AttrKind.TAG


Attributes = Mapping[str, AttrValue]


@dataclass(frozen=True)
class Graph:
    """Undirected mission graph.

    Capacity defaults to 1 for every location not listed in ``capacity``.
    """
    nodes: FrozenSet[int] = frozenset()
    edges: FrozenSet[EdgeId] = frozenset()
    capacity: Mapping[Location, int] = field(default_factory=dict)
    attrs: Mapping[Location, Attributes] = field(default_factory=dict)

    def __post_init__(self):
        for u, v in self.edges:
            if u >= v:
                raise InvalidEdgeError(f"edge ({u}, {v}) is not in canonical order")
            if u not in self.nodes or v not in self.nodes:
                raise UnknownLocationError(f"edge ({u}, {v}) has an undeclared endpoint")
        for loc, cap in self.capacity.items():
            if cap < 1:
                raise ValueError(f"capacity of {loc} must be positive, got {cap}")

    def has(self, loc: Location) -> bool:
        if loc.is_node:
            return loc.u in self.nodes
        return (loc.u, loc.v) in self.edges

    def capacity_of(self, loc: Location) -> int:
        return self.capacity.get(loc, DEFAULT_CAPACITY)

    def attributes_of(self, loc: Location) -> Attributes:
        return self.attrs.get(loc, {})

    @cached_property
    def locations(self) -> Tuple[Location, ...]:
        """All locations in canonical order."""
        nodes = [Location.node(n) for n in sorted(self.nodes)]
        edges = [Location(LocationKind.EDGE, u, v) for u, v in sorted(self.edges)]
        return tuple(nodes + edges)

    def node_locations(self) -> Tuple[Location, ...]:
        return tuple(loc for loc in self.locations if loc.is_node)

    def edge_locations(self) -> Tuple[Location, ...]:
        return tuple(loc for loc in self.locations if loc.is_edge)

    @cached_property
    def _incidence(self) -> Dict[int, Tuple[Location, ...]]:
        incident: Dict[int, List[Location]] = {n: [] for n in self.nodes}
        for u, v in sorted(self.edges):
            edge = Location(LocationKind.EDGE, u, v)
            incident[u].append(edge)
            incident[v].append(edge)
        return {n: tuple(edges) for n, edges in incident.items()}

    @cached_property
    def location_graph(self) -> nx.Graph:
        """Successor relation as a networkx graph (node <-> incident edge)."""
        g = nx.Graph()
        g.add_nodes_from(self.locations)
        for u, v in self.edges:
            edge = Location(LocationKind.EDGE, u, v)
            g.add_edge(Location.node(u), edge)
            g.add_edge(Location.node(v), edge)
        return g

    def distances_to(
        self,
        target: Location,
        blocked: Iterable[Location] = ()
    ) -> Dict[Location, int]:
        """Step distances from every location to ``target``.

        Locations in ``blocked`` can neither be entered nor left. Unreachable
        locations are absent from the result.
        """
        blocked = frozenset(blocked)
        if target in blocked or not self.has(target):
            return {}
        view = nx.restricted_view(self.location_graph, blocked, [])
        return dict(nx.single_source_shortest_path_length(view, target))


def successors(loc: Location, g: Graph) -> FrozenSet[Location]:
    """Locations reachable from ``loc`` in one timestep (waiting included).

    Node(n) -> itself and every incident edge; Edge(u,v) -> itself and both endpoints.
    """
    if not g.has(loc):
        raise UnknownLocationError(f"location {loc} is not declared")
    if loc.is_node:
        return frozenset((loc,) + g._incidence[loc.u])
    return frozenset((loc, Location.node(loc.u), Location.node(loc.v)))


def ordered_successors(loc: Location, g: Graph) -> Tuple[Location, ...]:
    """:func:`successors` in canonical order."""
    return tuple(sorted(successors(loc, g)))


# ---------------------------------------------------------------------------
# Ontology
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Ontology:
    """Forest of attribute tags. A descendant tag satisfies a query for any ancestor."""
    tags: FrozenSet[str] = frozenset()
    parent: Mapping[str, str] = field(default_factory=dict)

    def __contains__(self, tag: str) -> bool:
        return tag in self.tags

    @cached_property
    def hierarchy(self) -> nx.DiGraph:
        """parent -> child edges"""
        g = nx.DiGraph()
        g.add_nodes_from(self.tags)
        g.add_edges_from((p, c) for c, p in self.parent.items())
        return g

    def is_acyclic(self) -> bool:
        return nx.is_directed_acyclic_graph(self.hierarchy)

    def find_cycle(self) -> List[str]:
        try:
            return [u for u, _ in nx.find_cycle(self.hierarchy)]
        except nx.NetworkXNoCycle:
            return []

    def descendant_or_equal(self, tag: str, ancestor: str) -> bool:
        seen = set()
        current: Optional[str] = tag
        while current is not None and current not in seen:
            if current == ancestor:
                return True
            seen.add(current)
            current = self.parent.get(current)
        return False

    def roots(self) -> List[str]:
        return sorted(t for t in self.tags if t not in self.parent)

    def children(self, tag: str) -> List[str]:
        return sorted(c for c, p in self.parent.items() if p == tag)

    def with_roots(self, extra: Iterable[str]) -> "Ontology":
        """Copy of the ontology with ``extra`` tags added as roots."""
        new_tags = frozenset(extra) - self.tags
        if not new_tags:
            return self
        return Ontology(tags=self.tags | new_tags, parent=dict(self.parent))


# ---------------------------------------------------------------------------
# Agents
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Agent:
    name: str
    init: Location
    attrs: Attributes = field(default_factory=dict)
    span: Optional[SourceSpan] = field(default=None, compare=False)

    def tags(self) -> List[str]:
        return [value.value for value in self.attrs.values() if value.is_tag]


def matches(agent: Agent, tag: str, ont: Ontology) -> bool:
    """True iff one of the agent's tag attributes is ``tag`` or a descendant of it."""
    if tag not in ont:
        raise UnknownTagError(f"unknown tag '{tag}'")
    return any(ont.descendant_or_equal(t, tag) for t in agent.tags())


# ---------------------------------------------------------------------------
# Selectors and filter expressions
# ---------------------------------------------------------------------------

COMPARISON_OPS = ("<", "<=", ">", ">=", "==", "!=")


@dataclass(frozen=True)
class Comparison:
    attr: str
    op: str
    literal: AttrValue


@dataclass(frozen=True)
class TagAtom:
    tag: str


@dataclass(frozen=True)
class Not:
    operand: "FilterNode"


@dataclass(frozen=True)
class And:
    left: "FilterNode"
    right: "FilterNode"


@dataclass(frozen=True)
class Or:
    left: "FilterNode"
    right: "FilterNode"


FilterNode = Union[Comparison, TagAtom, Not, And, Or]


@dataclass(frozen=True)
class ExplicitAgents:
    names: Tuple[str, ...]


@dataclass(frozen=True)
class ExplicitNodes:
    ids: Tuple[int, ...]


@dataclass(frozen=True)
class ExplicitEdges:
    edges: Tuple[EdgeId, ...]


@dataclass(frozen=True)
class TagQuery:
    tag: str


@dataclass(frozen=True)
class FilterExpr:
    expr: FilterNode


Selector = Union[ExplicitAgents, ExplicitNodes, ExplicitEdges, TagQuery, FilterExpr]


# ---------------------------------------------------------------------------
# Constraints
# ---------------------------------------------------------------------------

class PredicateKind(str, Enum):
    """Mission predicates; values are the surface names."""
    NODE_GOAL = "node_goal"
    NODE_VISIT = "node_visit"
    EDGE_VISIT = "edge_visit"
    NODE_AVOID = "node_avoid"
    EDGE_AVOID = "edge_avoid"
    NODE_SUPPORTED_FROM = "node_supported_from"
    SUPPORT = "support"

    @property
    def targets_edges(self) -> bool:
        return self in (PredicateKind.EDGE_VISIT, PredicateKind.EDGE_AVOID)

    @property
    def is_visit(self) -> bool:
        return self in (PredicateKind.NODE_VISIT, PredicateKind.EDGE_VISIT)

    @property
    def is_avoid(self) -> bool:
        return self in (PredicateKind.NODE_AVOID, PredicateKind.EDGE_AVOID)


LOCATION_PREDICATES = (
    PredicateKind.NODE_GOAL,
    PredicateKind.NODE_VISIT,
    PredicateKind.EDGE_VISIT,
    PredicateKind.NODE_AVOID,
    PredicateKind.EDGE_AVOID,
)


@dataclass(frozen=True)
class LocationConstraint:
    """node_goal / node_visit / edge_visit / node_avoid / edge_avoid."""
    kind: PredicateKind
    locations: Selector
    agents: Selector
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class NodeSupportedFrom:
    """Declarative support: any agent on one of ``nodes`` needs another agent on ``support_node``."""
    nodes: Selector
    support_node: int
    span: Optional[SourceSpan] = field(default=None, compare=False)

    kind = PredicateKind.NODE_SUPPORTED_FROM


@dataclass(frozen=True)
class Support:
    """Imperative support: when unit1 is on node1, unit2 must be on node2."""
    unit1: str
    node1: int
    unit2: str
    node2: int
    span: Optional[SourceSpan] = field(default=None, compare=False)

    kind = PredicateKind.SUPPORT


Constraint = Union[LocationConstraint, NodeSupportedFrom, Support]


@dataclass(frozen=True)
class GroundConstraint:
    """A constraint about exactly one location with an explicit agent set.

    For SUPPORT, ``agents`` is ``(unit1,)``, ``support_node`` is node2 and
    ``supporter`` is unit2. For NODE_SUPPORTED_FROM, ``agents`` is empty.
    """
    kind: PredicateKind
    location: Location
    agents: Tuple[str, ...] = ()
    support_node: Optional[Location] = None
    supporter: Optional[str] = None
    source: int = field(default=-1, compare=False)

    def render(self) -> str:
        """Canonical predicate syntax, as printed by ``ortacplus expand``."""
        if self.kind == PredicateKind.SUPPORT:
            return f"support({self.agents[0]}, {self.location}, {self.supporter}, {self.support_node})"
        if self.kind == PredicateKind.NODE_SUPPORTED_FROM:
            return f"node_supported_from({self.location}, {self.support_node})"
        return f"{self.kind.value}({self.location}, [{', '.join(self.agents)}])"

    def __str__(self) -> str:
        return self.render()


# ---------------------------------------------------------------------------
# Missions and plans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Mission:
    """A parsed mission: geography, resources, operations."""
    graph: Graph = field(default_factory=Graph)
    ontology: Ontology = field(default_factory=Ontology)
    agents: Tuple[Agent, ...] = ()
    constraints: Tuple[Constraint, ...] = ()

    def agent(self, name: str) -> Optional[Agent]:
        for agent in self.agents:
            if agent.name == name:
                return agent
        return None


@dataclass(frozen=True)
class Plan:
    """Per-agent trajectories over timesteps 0..horizon (``t_initial`` = 0)."""
    horizon: int
    traj: Mapping[str, Tuple[Location, ...]]

    @property
    def t_initial(self) -> int:
        return 0

    @property
    def t_final(self) -> int:
        return self.horizon

    def loc(self, agent: str, t: int) -> Location:
        return self.traj[agent][t]
