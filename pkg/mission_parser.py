#!/usr/bin/env python3
"""
Mission Parser

Lexes and parses `.ortac` mission files into an unresolved Mission, and prints
missions back in canonical form.

Grammar (sections in any order):

    mission    := section* ;
    section    := graphSec | ontologySec | agentDecl | constraintsSec ;
    graphSec   := "graph" "{" graphItem* "}" ;
    graphItem  := "nodes" "{" nodeRange ("," nodeRange)* "}"
                | "node" INT "{" propList "}"
                | "edge" "(" INT "," INT ")" "{" propList "}" ;
    ontologySec:= "ontology" "{" ontoNode* "}" ;
    ontoNode   := IDENT ("{" ontoNode* "}")? ;
    agentDecl  := "agent" IDENT "{" "init" ":" locRef ("," prop)* "}" ;
    constraintsSec := "constraints" "{" predicate* "}" ;
    predicate  := IDENT "(" arg ("," arg)* ")" ;

Quoted predicate arguments are read as attribute filters ("width < 10") and
fall back to a plain tag query ("UGV") when they are a single tag or do not
parse as a filter.
"""

import bisect
import logging
import math
import re
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from typing import Dict, List, Optional, Tuple, Union

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
    InvalidEdgeError,
    Location,
    LocationConstraint,
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
    normalize_edge,
)

logger = logging.getLogger(__name__)

MAX_INT = 2 ** 31 - 1
MAX_NODES = 100_000

KEYWORDS = frozenset({
    "graph", "nodes", "node", "edge", "ontology", "agent", "constraints", "init", "capacity",
})
LOGIC_WORDS = frozenset({"and", "or", "not"})


# ---------------------------------------------------------------------------
# Tokens and diagnostics
# ---------------------------------------------------------------------------

class TokenKind(str, Enum):
    IDENT = "ident"
    KEYWORD = "keyword"
    INT = "int"
    DECIMAL = "decimal"
    STRING = "string"
    PUNCT = "punct"
    OPERATOR = "operator"
    EOF = "eof"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    span: SourceSpan
    value: Union[int, float, str, None] = None

    def describe(self) -> str:
        if self.kind == TokenKind.EOF:
            return "end of input"
        if self.kind == TokenKind.STRING:
            return "string literal"
        return f"'{self.text}'"


class ParseCode(str, Enum):
    LEX_ERROR = "LexError"
    SYNTAX_ERROR = "SyntaxError"
    DUPLICATE_DECLARATION = "DuplicateDeclaration"
    INTEGER_OVERFLOW = "IntegerOverflow"
    DECIMAL_OVERFLOW = "DecimalOverflow"
    TOO_MANY_NODES = "TooManyNodes"
    INVALID_EDGE = "InvalidEdge"
    UNKNOWN_LOCATION = "UnknownLocation"
    UNKNOWN_AGENT = "UnknownAgent"


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: Severity
    span: SourceSpan
    message: str
    code: ParseCode = ParseCode.SYNTAX_ERROR

    def __str__(self) -> str:
        return f"{self.severity.value} {self.span} [{self.code.value}] {self.message}"


@dataclass
class TokenizeResult:
    tokens: List[Token]
    diagnostics: List[ParseDiagnostic]

    @property
    def ok(self) -> bool:
        return not any(d.severity == Severity.ERROR for d in self.diagnostics)


@dataclass
class ParseResult:
    mission: Optional[Mission]
    diagnostics: List[ParseDiagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.mission is not None


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<open_comment>/\*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<open_string>")
  | (?P<decimal>\d+\.\d+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<operator><=|>=|==|!=|<|>)
  | (?P<punct>\.\.|[(){}\[\],:.\-])
""", re.VERBOSE | re.DOTALL)


class _LineIndex:
    """Maps character offsets to 1-based line/column positions."""

    def __init__(self, text: str):
        self.starts = [0] + [m.end() for m in re.finditer(r"\n", text)]

    def span(self, offset: int, length: int = 0) -> SourceSpan:
        row = bisect.bisect_right(self.starts, offset) - 1
        return SourceSpan(row + 1, offset - self.starts[row] + 1, length)


def _shorten(lexeme: str) -> str:
    return lexeme if len(lexeme) <= 24 else f"{lexeme[:12]}...{lexeme[-6:]}"


def _unescape(body: str) -> str:
    return re.sub(r"\\(.)", r"\1", body)


def tokenize(text: str) -> TokenizeResult:
    """Split mission text into tokens.

    ``//`` and ``/* */`` comments are skipped. Lexical errors are returned as
    diagnostics; an unterminated string or comment stops the scan.

    Args:
        text: Mission (or filter) text

    Returns:
        TokenizeResult with tokens (without a trailing EOF) and diagnostics
    """
    index = _LineIndex(text)
    tokens: List[Token] = []
    diagnostics: List[ParseDiagnostic] = []
    pos = 0

    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            diagnostics.append(ParseDiagnostic(
                Severity.ERROR, index.span(pos, 1),
                f"illegal character '{text[pos]}'", ParseCode.LEX_ERROR))
            pos += 1
            continue

        group = m.lastgroup
        lexeme = m.group()
        span = index.span(pos, len(lexeme))

        if group == "open_string":
            diagnostics.append(ParseDiagnostic(
                Severity.ERROR, index.span(pos, 1),
                "unterminated string literal", ParseCode.LEX_ERROR))
            break
        if group == "open_comment":
            diagnostics.append(ParseDiagnostic(
                Severity.ERROR, index.span(pos, 2),
                "unterminated block comment", ParseCode.LEX_ERROR))
            break

        if group == "string":
            tokens.append(Token(TokenKind.STRING, lexeme, span, _unescape(lexeme[1:-1])))
        elif group == "decimal":
            value = float(lexeme)
            if not math.isfinite(value):
                diagnostics.append(ParseDiagnostic(
                    Severity.ERROR, span, f"decimal literal {_shorten(lexeme)} is out of range",
                    ParseCode.DECIMAL_OVERFLOW))
            tokens.append(Token(TokenKind.DECIMAL, lexeme, span, value))
        elif group == "int":
            try:
                value = int(lexeme)
            except ValueError:
                # too many digits for int(); any value above MAX_INT is reported by the parser
                value = MAX_INT + 1
            tokens.append(Token(TokenKind.INT, lexeme, span, value))
        elif group == "ident":
            if lexeme in KEYWORDS:
                tokens.append(Token(TokenKind.KEYWORD, lexeme, span, lexeme))
            elif lexeme in LOGIC_WORDS:
                tokens.append(Token(TokenKind.OPERATOR, lexeme, span, lexeme))
            else:
                tokens.append(Token(TokenKind.IDENT, lexeme, span, lexeme))
        elif group == "operator":
            tokens.append(Token(TokenKind.OPERATOR, lexeme, span, lexeme))
        elif group == "punct":
            tokens.append(Token(TokenKind.PUNCT, lexeme, span, lexeme))
        # whitespace and comments produce nothing

        pos = m.end()

    return TokenizeResult(tokens, diagnostics)


# ---------------------------------------------------------------------------
# Filter expressions
# ---------------------------------------------------------------------------

class _SyntaxFailure(Exception):
    def __init__(self, diagnostic: ParseDiagnostic):
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


class _TokenStream:
    """Cursor over a token list with an EOF sentinel."""

    def __init__(self, tokens: List[Token], end_span: SourceSpan):
        self.tokens = tokens
        self.eof = Token(TokenKind.EOF, "", end_span)
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        i = self.pos + ahead
        return self.tokens[i] if i < len(self.tokens) else self.eof

    def advance(self) -> Token:
        token = self.peek()
        if token.kind != TokenKind.EOF:
            self.pos += 1
        return token

    def at(self, kind: TokenKind, text: Optional[str] = None) -> bool:
        token = self.peek()
        return token.kind == kind and (text is None or token.text == text)

    def accept(self, kind: TokenKind, text: Optional[str] = None) -> Optional[Token]:
        if self.at(kind, text):
            return self.advance()
        return None

    def fail(self, expected: str, token: Optional[Token] = None) -> "_SyntaxFailure":
        token = token or self.peek()
        return _SyntaxFailure(ParseDiagnostic(
            Severity.ERROR, token.span,
            f"expected {expected}, found {token.describe()}", ParseCode.SYNTAX_ERROR))

    def expect(self, kind: TokenKind, text: Optional[str] = None, expected: Optional[str] = None) -> Token:
        if self.at(kind, text):
            return self.advance()
        raise self.fail(expected or (f"'{text}'" if text else kind.value))


def _parse_filter_tokens(stream: _TokenStream) -> FilterNode:
    def parse_or() -> FilterNode:
        node = parse_and()
        while stream.accept(TokenKind.OPERATOR, "or"):
            node = Or(node, parse_and())
        return node

    def parse_and() -> FilterNode:
        node = parse_unary()
        while stream.accept(TokenKind.OPERATOR, "and"):
            node = And(node, parse_unary())
        return node

    def parse_unary() -> FilterNode:
        if stream.accept(TokenKind.OPERATOR, "not"):
            return Not(parse_unary())
        if stream.accept(TokenKind.PUNCT, "("):
            node = parse_or()
            stream.expect(TokenKind.PUNCT, ")")
            return node
        name = stream.peek()
        if name.kind not in (TokenKind.IDENT, TokenKind.KEYWORD):
            raise stream.fail("attribute or tag name")
        stream.advance()
        op = stream.peek()
        if op.kind == TokenKind.OPERATOR and op.text not in LOGIC_WORDS:
            stream.advance()
            return Comparison(name.text, op.text, parse_literal())
        return TagAtom(name.text)

    def parse_literal() -> AttrValue:
        negative = stream.accept(TokenKind.PUNCT, "-") is not None
        token = stream.peek()
        if token.kind in (TokenKind.INT, TokenKind.DECIMAL):
            stream.advance()
            return AttrValue.number(-token.value if negative else token.value)
        if negative:
            raise stream.fail("number")
        if token.kind == TokenKind.STRING:
            stream.advance()
            return AttrValue.text(token.value)
        if token.kind == TokenKind.IDENT:
            stream.advance()
            return AttrValue.tag(token.text)
        raise stream.fail("literal")

    node = parse_or()
    if stream.peek().kind != TokenKind.EOF:
        raise stream.fail("end of filter")
    return node


def parse_filter(text: str) -> Optional[FilterNode]:
    """Parse an attribute filter such as ``width < 10 and not paved``.

    Returns:
        The expression tree, or None when ``text`` is not a valid filter
    """
    lexed = tokenize(text)
    if not lexed.ok or not lexed.tokens:
        return None
    try:
        return _parse_filter_tokens(_TokenStream(lexed.tokens, SourceSpan(1, len(text) + 1)))
    except _SyntaxFailure:
        return None


def string_selector(text: str) -> Selector:
    """Selector for a quoted predicate argument: filter first, tag otherwise."""
    expr = parse_filter(text)
    if expr is None:
        return TagQuery(text)
    if isinstance(expr, TagAtom):
        return TagQuery(expr.tag)
    return FilterExpr(expr)


# ---------------------------------------------------------------------------
# Mission parser
# ---------------------------------------------------------------------------

@dataclass
class _Arg:
    """Untyped predicate argument, interpreted once the predicate is known."""
    kind: str  # int | pair | ident | string | list
    span: SourceSpan
    value: object = None
    items: List["_Arg"] = field(default_factory=list)


@dataclass
class _AgentDraft:
    name: str
    init: Optional[Location]
    attrs: Dict[str, AttrValue]
    span: SourceSpan


def _next_tag_name(attrs: Dict[str, AttrValue]) -> str:
    if "tag" not in attrs:
        return "tag"
    n = 2
    while f"tag_{n}" in attrs:
        n += 1
    return f"tag_{n}"


class _MissionParser:
    def __init__(self, text: str, tokens: List[Token]):
        index = _LineIndex(text)
        self.stream = _TokenStream(tokens, index.span(len(text)))
        self.diagnostics: List[ParseDiagnostic] = []

        self.range_nodes: Dict[int, SourceSpan] = {}
        self.node_blocks: Dict[int, SourceSpan] = {}
        self.capacity: Dict[Location, int] = {}
        self.attrs: Dict[Location, Dict[str, AttrValue]] = {}
        self.edges: Dict[Tuple[int, int], SourceSpan] = {}
        self.tag_parent: Dict[str, Optional[str]] = {}
        self.agents: Dict[str, _AgentDraft] = {}
        self.constraints: List[Constraint] = []
        self.post_attributes: List[Tuple[Token, str, AttrValue]] = []

    # -- helpers -----------------------------------------------------------

    def error(self, span: SourceSpan, message: str, code: ParseCode) -> None:
        self.diagnostics.append(ParseDiagnostic(Severity.ERROR, span, message, code))

    def integer(self, token: Token) -> int:
        if token.value > MAX_INT:
            self.error(token.span, f"integer literal {_shorten(token.text)} is out of range", ParseCode.INTEGER_OVERFLOW)
        return token.value

    def expect_int(self) -> Token:
        token = self.stream.expect(TokenKind.INT, expected="integer")
        self.integer(token)
        return token

    # -- entry -------------------------------------------------------------

    def parse(self) -> Optional[Mission]:
        s = self.stream
        try:
            while s.peek().kind != TokenKind.EOF:
                token = s.peek()
                if s.accept(TokenKind.KEYWORD, "graph"):
                    self.graph_section()
                elif s.accept(TokenKind.KEYWORD, "ontology"):
                    self.ontology_section()
                elif s.accept(TokenKind.KEYWORD, "agent"):
                    self.agent_decl()
                elif s.accept(TokenKind.KEYWORD, "constraints"):
                    self.constraints_section()
                else:
                    raise s.fail("'graph', 'ontology', 'agent' or 'constraints'", token)
        except _SyntaxFailure as failure:
            self.diagnostics.append(failure.diagnostic)
            return None

        self.apply_post_attributes()
        graph = self.build_graph()
        if any(d.severity == Severity.ERROR for d in self.diagnostics):
            return None

        agents = tuple(
            Agent(d.name, d.init, dict(d.attrs), span=d.span) for d in self.agents.values()
        )
        ontology = Ontology(
            tags=frozenset(self.tag_parent),
            parent={t: p for t, p in self.tag_parent.items() if p is not None},
        )
        return Mission(graph=graph, ontology=ontology, agents=agents, constraints=tuple(self.constraints))

    # -- graph -------------------------------------------------------------

    def graph_section(self) -> None:
        s = self.stream
        s.expect(TokenKind.PUNCT, "{")
        while not s.accept(TokenKind.PUNCT, "}"):
            if s.accept(TokenKind.KEYWORD, "nodes"):
                self.node_ranges()
            elif s.accept(TokenKind.KEYWORD, "node"):
                self.node_block()
            elif s.accept(TokenKind.KEYWORD, "edge"):
                self.edge_block()
            else:
                raise s.fail("'nodes', 'node', 'edge' or '}'")

    def node_ranges(self) -> None:
        s = self.stream
        s.expect(TokenKind.PUNCT, "{")
        while True:
            first = self.expect_int()
            last = first
            if s.accept(TokenKind.PUNCT, ".."):
                last = self.expect_int()
                if last.value < first.value:
                    self.error(first.span, f"empty node range {first.value}..{last.value}",
                               ParseCode.SYNTAX_ERROR)
            count = last.value - first.value + 1
            if len(self.range_nodes) + count > MAX_NODES:
                self.error(first.span, f"node range {first.text}..{_shorten(last.text)} exceeds the limit of "
                           f"{MAX_NODES} nodes declared by ranges", ParseCode.TOO_MANY_NODES)
                count = 0
            for n in range(first.value, first.value + max(count, 0)):
                if n in self.range_nodes:
                    self.error(first.span, f"node {n} is declared twice", ParseCode.DUPLICATE_DECLARATION)
                else:
                    self.range_nodes[n] = first.span
            if not s.accept(TokenKind.PUNCT, ","):
                break
        s.expect(TokenKind.PUNCT, "}")

    def node_block(self) -> None:
        token = self.expect_int()
        n = token.value
        if n in self.node_blocks:
            self.error(token.span, f"node {n} is declared twice", ParseCode.DUPLICATE_DECLARATION)
        self.node_blocks[n] = token.span
        self.location_props(Location.node(n))

    def edge_block(self) -> None:
        s = self.stream
        start = s.expect(TokenKind.PUNCT, "(")
        u = self.expect_int()
        s.expect(TokenKind.PUNCT, ",")
        v = self.expect_int()
        s.expect(TokenKind.PUNCT, ")")
        try:
            edge = normalize_edge(u.value, v.value)
        except InvalidEdgeError as e:
            self.error(start.span, str(e), ParseCode.INVALID_EDGE)
            self.prop_list()
            return
        if edge in self.edges:
            self.error(start.span, f"edge {edge} is declared twice", ParseCode.DUPLICATE_DECLARATION)
        self.edges[edge] = start.span
        self.location_props(Location.edge(*edge))

    def location_props(self, loc: Location) -> None:
        props = self.prop_list()
        attrs = self.attrs.setdefault(loc, {})
        for name_token, value in props:
            if name_token.text == "capacity":
                if not value.is_number or not isinstance(value.value, int) or value.value < 1:
                    self.error(name_token.span, "capacity must be a positive integer", ParseCode.SYNTAX_ERROR)
                    continue
                self.capacity[loc] = value.value
            else:
                attrs[name_token.text] = value
        if not attrs:
            del self.attrs[loc]

    def prop_list(self) -> List[Tuple[Token, AttrValue]]:
        s = self.stream
        s.expect(TokenKind.PUNCT, "{")
        props: List[Tuple[Token, AttrValue]] = []
        if s.accept(TokenKind.PUNCT, "}"):
            return props
        while True:
            props.append(self.prop())
            if not s.accept(TokenKind.PUNCT, ","):
                break
        s.expect(TokenKind.PUNCT, "}")
        self.check_unique_props(props)
        return props

    def check_unique_props(self, props: List[Tuple[Token, AttrValue]]) -> None:
        seen = set()
        for name_token, _ in props:
            if name_token.text in seen:
                self.error(name_token.span, f"property '{name_token.text}' is given twice",
                           ParseCode.DUPLICATE_DECLARATION)
            seen.add(name_token.text)

    def prop(self) -> Tuple[Token, AttrValue]:
        s = self.stream
        name = s.peek()
        if name.kind not in (TokenKind.IDENT, TokenKind.KEYWORD):
            raise s.fail("property name")
        s.advance()
        s.expect(TokenKind.PUNCT, ":")
        return name, self.value()

    def value(self) -> AttrValue:
        s = self.stream
        negative = s.accept(TokenKind.PUNCT, "-") is not None
        token = s.peek()
        if token.kind == TokenKind.INT:
            s.advance()
            value = self.integer(token)
            return AttrValue.number(-value if negative else value)
        if token.kind == TokenKind.DECIMAL:
            s.advance()
            return AttrValue.number(-token.value if negative else token.value)
        if negative:
            raise s.fail("number")
        if token.kind == TokenKind.STRING:
            s.advance()
            return AttrValue.text(token.value)
        if token.kind == TokenKind.IDENT:
            s.advance()
            return AttrValue.tag(token.text)
        raise s.fail("value")

    def loc_ref(self) -> Location:
        s = self.stream
        if s.at(TokenKind.INT):
            return Location.node(self.expect_int().value)
        start = s.expect(TokenKind.PUNCT, "(", expected="node or edge")
        u = self.expect_int()
        s.expect(TokenKind.PUNCT, ",")
        v = self.expect_int()
        s.expect(TokenKind.PUNCT, ")")
        try:
            return Location.edge(u.value, v.value)
        except InvalidEdgeError as e:
            raise _SyntaxFailure(ParseDiagnostic(Severity.ERROR, start.span, str(e), ParseCode.INVALID_EDGE))

    def build_graph(self) -> Optional[Graph]:
        nodes = set(self.range_nodes) | set(self.node_blocks)
        for (u, v), span in self.edges.items():
            for endpoint in (u, v):
                if endpoint not in nodes:
                    self.error(span, f"edge ({u}, {v}) references undeclared node {endpoint}",
                               ParseCode.UNKNOWN_LOCATION)
        if any(d.severity == Severity.ERROR for d in self.diagnostics):
            return None
        return Graph(
            nodes=frozenset(nodes),
            edges=frozenset(self.edges),
            capacity=dict(self.capacity),
            attrs={loc: dict(a) for loc, a in self.attrs.items()},
        )

    # -- ontology ----------------------------------------------------------

    def ontology_section(self) -> None:
        s = self.stream
        s.expect(TokenKind.PUNCT, "{")
        while not s.accept(TokenKind.PUNCT, "}"):
            self.onto_node(None)

    def onto_node(self, parent: Optional[str]) -> None:
        s = self.stream
        token = s.expect(TokenKind.IDENT, expected="tag name")
        if token.text in self.tag_parent:
            self.error(token.span, f"tag '{token.text}' is declared twice", ParseCode.DUPLICATE_DECLARATION)
        else:
            self.tag_parent[token.text] = parent
        if s.accept(TokenKind.PUNCT, "{"):
            while not s.accept(TokenKind.PUNCT, "}"):
                self.onto_node(token.text)

    # -- agents ------------------------------------------------------------

    def agent_decl(self) -> None:
        s = self.stream
        name = s.expect(TokenKind.IDENT, expected="agent name")
        s.expect(TokenKind.PUNCT, "{")
        s.expect(TokenKind.KEYWORD, "init")
        s.expect(TokenKind.PUNCT, ":")
        init = self.loc_ref()
        props: List[Tuple[Token, AttrValue]] = []
        while s.accept(TokenKind.PUNCT, ","):
            props.append(self.prop())
        s.expect(TokenKind.PUNCT, "}")
        self.check_unique_props(props)
        self.declare_agent(name, init, {p.text: v for p, v in props})

    def declare_agent(self, name: Token, init: Location, attrs: Dict[str, AttrValue]) -> None:
        if name.text in self.agents:
            self.error(name.span, f"agent '{name.text}' is declared twice", ParseCode.DUPLICATE_DECLARATION)
            return
        self.agents[name.text] = _AgentDraft(name.text, init, attrs, name.span)

    def apply_post_attributes(self) -> None:
        for token, attr_name, value in self.post_attributes:
            draft = self.agents.get(token.text)
            if draft is None:
                self.error(token.span, f"attribute() on undeclared agent '{token.text}'", ParseCode.UNKNOWN_AGENT)
                continue
            if attr_name is None:
                attr_name = _next_tag_name(draft.attrs)
            draft.attrs[attr_name] = value

    # -- constraints -------------------------------------------------------

    def constraints_section(self) -> None:
        s = self.stream
        s.expect(TokenKind.PUNCT, "{")
        while not s.accept(TokenKind.PUNCT, "}"):
            self.predicate()

    def predicate(self) -> None:
        s = self.stream
        name = s.expect(TokenKind.IDENT, expected="predicate name")
        s.expect(TokenKind.PUNCT, "(")
        args = [self.arg()]
        while s.accept(TokenKind.PUNCT, ","):
            args.append(self.arg())
        s.expect(TokenKind.PUNCT, ")")

        if name.text == "agent_define":
            self.agent_define(name, args)
        elif name.text == "attribute":
            self.attribute(name, args)
        else:
            try:
                kind = PredicateKind(name.text)
            except ValueError:
                raise _SyntaxFailure(ParseDiagnostic(
                    Severity.ERROR, name.span, f"unknown predicate '{name.text}'", ParseCode.SYNTAX_ERROR))
            self.constraints.append(self.build_constraint(kind, name, args))

    def arg(self) -> _Arg:
        s = self.stream
        token = s.peek()
        if token.kind == TokenKind.INT:
            return _Arg("int", token.span, self.expect_int().value)
        if token.kind == TokenKind.IDENT:
            s.advance()
            return _Arg("ident", token.span, token.text)
        if token.kind == TokenKind.STRING:
            s.advance()
            return _Arg("string", token.span, token.value)
        if token.kind == TokenKind.DECIMAL:
            s.advance()
            return _Arg("decimal", token.span, token.value)
        if s.accept(TokenKind.PUNCT, "("):
            u = self.expect_int()
            s.expect(TokenKind.PUNCT, ",")
            v = self.expect_int()
            s.expect(TokenKind.PUNCT, ")")
            try:
                edge = normalize_edge(u.value, v.value)
            except InvalidEdgeError as e:
                raise _SyntaxFailure(ParseDiagnostic(Severity.ERROR, token.span, str(e), ParseCode.INVALID_EDGE))
            return _Arg("pair", token.span, edge)
        if s.accept(TokenKind.PUNCT, "["):
            items: List[_Arg] = []
            if not s.accept(TokenKind.PUNCT, "]"):
                items.append(self.arg())
                while s.accept(TokenKind.PUNCT, ","):
                    items.append(self.arg())
                s.expect(TokenKind.PUNCT, "]")
            return _Arg("list", token.span, items=items)
        raise s.fail("predicate argument")

    @staticmethod
    def arity(name: Token, args: List[_Arg], *allowed: int) -> None:
        if len(args) not in allowed:
            expected = " or ".join(str(n) for n in allowed)
            raise _SyntaxFailure(ParseDiagnostic(
                Severity.ERROR, name.span,
                f"{name.text} expects {expected} arguments, got {len(args)}", ParseCode.SYNTAX_ERROR))

    @staticmethod
    def bad_arg(arg: _Arg, expected: str) -> _SyntaxFailure:
        return _SyntaxFailure(ParseDiagnostic(
            Severity.ERROR, arg.span, f"expected {expected}", ParseCode.SYNTAX_ERROR))

    def build_constraint(self, kind: PredicateKind, name: Token, args: List[_Arg]) -> Constraint:
        if kind == PredicateKind.SUPPORT:
            self.arity(name, args, 4)
            unit1, node1, unit2, node2 = args
            for arg, expected in ((unit1, "ident"), (node1, "int"), (unit2, "ident"), (node2, "int")):
                if arg.kind != expected:
                    raise self.bad_arg(arg, "agent name" if expected == "ident" else "node")
            return Support(unit1.value, node1.value, unit2.value, node2.value, span=name.span)

        self.arity(name, args, 2)
        if kind == PredicateKind.NODE_SUPPORTED_FROM:
            if args[1].kind != "int":
                raise self.bad_arg(args[1], "a single support node")
            return NodeSupportedFrom(self.location_selector(args[0], edges=False), args[1].value, span=name.span)

        return LocationConstraint(
            kind,
            self.location_selector(args[0], edges=kind.targets_edges),
            self.agent_selector(args[1]),
            span=name.span,
        )

    def location_selector(self, arg: _Arg, edges: bool) -> Selector:
        if arg.kind == "int":
            return ExplicitNodes((arg.value,))
        if arg.kind == "pair":
            return ExplicitEdges((arg.value,))
        if arg.kind == "string":
            return string_selector(arg.value)
        if arg.kind == "list":
            kinds = {item.kind for item in arg.items}
            if not kinds:
                return ExplicitEdges(()) if edges else ExplicitNodes(())
            if kinds == {"int"}:
                return ExplicitNodes(tuple(item.value for item in arg.items))
            if kinds == {"pair"}:
                return ExplicitEdges(tuple(item.value for item in arg.items))
            raise self.bad_arg(arg, "a list of nodes or a list of edges")
        raise self.bad_arg(arg, "node, edge, list or quoted filter")

    def agent_selector(self, arg: _Arg) -> Selector:
        if arg.kind == "ident":
            return ExplicitAgents((arg.value,))
        if arg.kind == "string":
            return string_selector(arg.value)
        if arg.kind == "list":
            if any(item.kind != "ident" for item in arg.items):
                raise self.bad_arg(arg, "a list of agent names")
            return ExplicitAgents(tuple(item.value for item in arg.items))
        raise self.bad_arg(arg, "agent name, list of agents or quoted filter")

    def agent_define(self, name: Token, args: List[_Arg]) -> None:
        self.arity(name, args, 2, 3)
        agent, init = args[0], args[1]
        if agent.kind != "ident":
            raise self.bad_arg(agent, "agent name")
        if init.kind == "int":
            location = Location.node(init.value)
        elif init.kind == "pair":
            location = Location.edge(*init.value)
        else:
            raise self.bad_arg(init, "initial node or edge")

        attrs: Dict[str, AttrValue] = {}
        if len(args) == 3:
            tags = args[2].items if args[2].kind == "list" else [args[2]]
            for tag in tags:
                if tag.kind != "ident":
                    raise self.bad_arg(tag, "tag name")
                attrs[_next_tag_name(attrs)] = AttrValue.tag(tag.value)

        token = Token(TokenKind.IDENT, agent.value, agent.span, agent.value)
        self.declare_agent(token, location, attrs)

    def attribute(self, name: Token, args: List[_Arg]) -> None:
        self.arity(name, args, 2, 3)
        agent = args[0]
        if agent.kind != "ident":
            raise self.bad_arg(agent, "agent name")
        token = Token(TokenKind.IDENT, agent.value, agent.span, agent.value)
        if len(args) == 2:
            if args[1].kind != "ident":
                raise self.bad_arg(args[1], "tag name")
            self.post_attributes.append((token, None, AttrValue.tag(args[1].value)))
            return
        attr_name, raw = args[1], args[2]
        if attr_name.kind != "ident":
            raise self.bad_arg(attr_name, "attribute name")
        if raw.kind in ("int", "decimal"):
            value = AttrValue.number(raw.value)
        elif raw.kind == "string":
            value = AttrValue.text(raw.value)
        elif raw.kind == "ident":
            value = AttrValue.tag(raw.value)
        else:
            raise self.bad_arg(raw, "attribute value")
        self.post_attributes.append((token, attr_name.value, value))


def parse_mission(text: str) -> ParseResult:
    """Parse mission text.

    Selectors stay unresolved; cross-references to agents and locations
    inside constraints are checked later by the analysis module.

    Returns:
        ParseResult whose ``mission`` is None when any Error diagnostic exists
    """
    lexed = tokenize(text)
    if not lexed.ok:
        return ParseResult(None, lexed.diagnostics)

    parser = _MissionParser(text, lexed.tokens)
    mission = parser.parse()
    diagnostics = lexed.diagnostics + parser.diagnostics
    if mission is not None:
        logger.debug(f"Parsed mission: {len(mission.agents)} agents, {len(mission.constraints)} constraints")
    return ParseResult(mission, diagnostics)


# ---------------------------------------------------------------------------
# Printer
# ---------------------------------------------------------------------------

def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def format_number(value: Union[int, float]) -> str:
    if isinstance(value, int):
        return str(value)
    text = format(Decimal(repr(value)), "f")
    return text if "." in text else text + ".0"


def format_value(value: AttrValue) -> str:
    if value.is_number:
        return format_number(value.value)
    if value.is_tag:
        return value.value
    return _quote(value.value)


def format_filter(node: FilterNode) -> str:
    """Canonical text of a filter; reparses to an equal tree."""
    if isinstance(node, Comparison):
        return f"{node.attr} {node.op} {format_value(node.literal)}"
    if isinstance(node, TagAtom):
        return node.tag
    if isinstance(node, Not):
        inner = format_filter(node.operand)
        if isinstance(node.operand, (And, Or)):
            inner = f"({inner})"
        return f"not {inner}"
    if isinstance(node, And):
        left = format_filter(node.left)
        right = format_filter(node.right)
        if isinstance(node.left, Or):
            left = f"({left})"
        if isinstance(node.right, (And, Or)):
            right = f"({right})"
        return f"{left} and {right}"
    left = format_filter(node.left)
    right = format_filter(node.right)
    if isinstance(node.right, Or):
        right = f"({right})"
    return f"{left} or {right}"


def _format_list(items: List[str]) -> str:
    if len(items) == 1:
        return items[0]
    return "[" + ", ".join(items) + "]"


def format_selector(sel: Selector) -> str:
    if isinstance(sel, ExplicitAgents):
        return _format_list(list(sel.names))
    if isinstance(sel, ExplicitNodes):
        return _format_list([str(n) for n in sel.ids])
    if isinstance(sel, ExplicitEdges):
        return _format_list([f"({u}, {v})" for u, v in sel.edges])
    if isinstance(sel, TagQuery):
        return _quote(sel.tag)
    return _quote(format_filter(sel.expr))


def format_constraint(c: Constraint) -> str:
    if isinstance(c, Support):
        return f"support({c.unit1}, {c.node1}, {c.unit2}, {c.node2})"
    if isinstance(c, NodeSupportedFrom):
        return f"node_supported_from({format_selector(c.nodes)}, {c.support_node})"
    return f"{c.kind.value}({format_selector(c.locations)}, {format_selector(c.agents)})"


def _node_runs(ids: List[int]) -> List[str]:
    runs: List[str] = []
    i = 0
    while i < len(ids):
        j = i
        while j + 1 < len(ids) and ids[j + 1] == ids[j] + 1:
            j += 1
        if j - i >= 2:
            runs.append(f"{ids[i]}..{ids[j]}")
        else:
            runs.extend(str(n) for n in ids[i:j + 1])
        i = j + 1
    return runs


def _format_props(graph: Graph, loc: Location) -> str:
    props = []
    if loc in graph.capacity:
        props.append(f"capacity: {graph.capacity[loc]}")
    props.extend(f"{name}: {format_value(v)}" for name, v in graph.attributes_of(loc).items())
    return "{ " + ", ".join(props) + " }" if props else "{}"


def print_mission(m: Mission) -> str:
    """Canonical text of a mission; ``parse_mission(print_mission(m))`` equals ``m``."""
    lines: List[str] = ["graph {"]
    graph = m.graph
    if graph.nodes:
        lines.append("  nodes { " + ", ".join(_node_runs(sorted(graph.nodes))) + " }")
    for loc in graph.node_locations():
        if loc in graph.capacity or graph.attributes_of(loc):
            lines.append(f"  node {loc.u} {_format_props(graph, loc)}")
    for loc in graph.edge_locations():
        lines.append(f"  edge ({loc.u}, {loc.v}) {_format_props(graph, loc)}")
    lines.append("}")
    lines.append("")

    lines.append("ontology {")

    def emit_tag(tag: str, depth: int) -> None:
        children = m.ontology.children(tag)
        pad = "  " * depth
        if not children:
            lines.append(f"{pad}{tag}")
            return
        lines.append(f"{pad}{tag} {{")
        for child in children:
            emit_tag(child, depth + 1)
        lines.append(f"{pad}}}")

    for root in m.ontology.roots():
        emit_tag(root, 1)
    lines.append("}")
    lines.append("")

    for agent in m.agents:
        parts = [f"init: {agent.init}"]
        parts.extend(f"{name}: {format_value(v)}" for name, v in agent.attrs.items())
        lines.append(f"agent {agent.name} {{ " + ", ".join(parts) + " }")
    if m.agents:
        lines.append("")

    lines.append("constraints {")
    for c in m.constraints:
        lines.append(f"  {format_constraint(c)}")
    lines.append("}")
    return "\n".join(lines) + "\n"
