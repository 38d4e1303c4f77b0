#!/usr/bin/env python3
"""
Tests for the mission lexer, parser and canonical printer.
"""

import random

import pytest

from mission_factory import load_mission, random_text_mission
from mission_model import (
    And,
    AttrValue,
    Comparison,
    ExplicitAgents,
    ExplicitEdges,
    ExplicitNodes,
    FilterExpr,
    Location,
    LocationConstraint,
    Mission,
    NodeSupportedFrom,
    Not,
    Or,
    PredicateKind,
    Severity,
    Support,
    TagAtom,
    TagQuery,
)
from mission_parser import (
    ParseCode,
    TokenKind,
    format_filter,
    parse_filter,
    parse_mission,
    print_mission,
    tokenize,
)

FIXTURES = ["goma.ortac", "p3_goal.ortac", "p3_swap.ortac", "p3_anonymous.ortac", "ugv.ortac"]


def _codes(result):
    return [d.code for d in result.diagnostics]


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

def test_tokenize_predicate():
    result = tokenize('node_goal(14, "UGV")')
    assert result.ok
    assert [(t.kind, t.value) for t in result.tokens] == [
        (TokenKind.IDENT, "node_goal"),
        (TokenKind.PUNCT, "("),
        (TokenKind.INT, 14),
        (TokenKind.PUNCT, ","),
        (TokenKind.STRING, "UGV"),
        (TokenKind.PUNCT, ")"),
    ]
    assert str(result.tokens[2].span) == "1:11"


def test_tokenize_empty():
    result = tokenize("")
    assert result.tokens == []
    assert result.diagnostics == []


def test_tokenize_unterminated_string():
    result = tokenize('"unterminated')
    assert not result.ok
    [diagnostic] = result.diagnostics
    assert diagnostic.message == "unterminated string literal"
    assert str(diagnostic.span) == "1:1"
    assert diagnostic.code == ParseCode.LEX_ERROR


def test_tokenize_skips_comments_and_reads_keywords():
    text = "// header\nnodes { 1..20 } /* block\ncomment */ capacity: 2.5 width <= 10"
    result = tokenize(text)
    assert result.ok
    kinds = [(t.kind, t.text) for t in result.tokens]
    assert kinds == [
        (TokenKind.KEYWORD, "nodes"), (TokenKind.PUNCT, "{"), (TokenKind.INT, "1"), (TokenKind.PUNCT, ".."),
        (TokenKind.INT, "20"), (TokenKind.PUNCT, "}"), (TokenKind.KEYWORD, "capacity"), (TokenKind.PUNCT, ":"),
        (TokenKind.DECIMAL, "2.5"), (TokenKind.IDENT, "width"), (TokenKind.OPERATOR, "<="), (TokenKind.INT, "10"),
    ]
    assert result.tokens[0].span.line == 2
    assert result.tokens[6].span.line == 3


def test_tokenize_errors():
    illegal = tokenize("node 1 @ 2")
    assert [d.code for d in illegal.diagnostics] == [ParseCode.LEX_ERROR]
    assert str(illegal.diagnostics[0].span) == "1:8"

    comment = tokenize("graph { /* never closed")
    assert comment.diagnostics[0].message == "unterminated block comment"


def test_string_escapes():
    result = tokenize(r'"say \"hi\" \\ ok"')
    assert result.tokens[0].value == 'say "hi" \\ ok'


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def test_parse_goma_fixture():
    """The Goma mission has 8 agents and a declarative support constraint"""
    m = load_mission("goma.ortac")
    assert [a.name for a in m.agents] == ["unit1", "unit2", "unit3", "unit4", "c1", "c2", "c3", "c4"]
    assert NodeSupportedFrom(ExplicitNodes((3,)), 18) in m.constraints
    assert LocationConstraint(PredicateKind.EDGE_AVOID, ExplicitEdges(((8, 9),)), ExplicitAgents(("unit1",))) \
        in m.constraints
    assert m.graph.capacity_of(Location.node(9)) == 4
    assert m.graph.capacity_of(Location.node(11)) == 2
    assert m.graph.attributes_of(Location.node(11))["site"] == AttrValue.tag("airport")

    c1 = m.agent("c1")
    assert c1.init == Location.node(9)
    assert c1.tags() == ["company", "VBCI"]
    assert m.agent("unit2").attrs["tag"] == AttrValue.tag("night_vision")


def test_parse_minimal_mission():
    result = parse_mission("graph { nodes {1..3} edge(1,2){} edge(2,3){} }")
    assert result.ok
    assert result.mission.agents == ()
    assert result.mission.constraints == ()
    assert result.mission.graph.nodes == {1, 2, 3}


def test_parse_defers_unknown_init_location():
    """An undeclared init node is reported by the analysis, not the parser"""
    result = parse_mission("agent u1 { init: 99 }")
    assert result.ok
    assert result.mission.agent("u1").init == Location.node(99)


def test_parse_selectors():
    text = """
    graph { nodes { 1..4 } edge (1, 2) { width: 8 } edge (2, 3) { width: 12 } }
    agent a { init: 1, kind: wheeled }
    agent b { init: (2, 3) }
    constraints {
        node_goal([3, 4], [a, b])
        edge_visit((3, 2), a)
        edge_avoid("width < 10", "wheeled")
        node_avoid([], a)
        node_visit("site == \\"depot\\" or paved", b)
        support(a, 1, b, 4)
    }
    """
    result = parse_mission(text)
    assert result.ok, [str(d) for d in result.diagnostics]
    c = result.mission.constraints
    assert c[0] == LocationConstraint(PredicateKind.NODE_GOAL, ExplicitNodes((3, 4)), ExplicitAgents(("a", "b")))
    assert c[1] == LocationConstraint(PredicateKind.EDGE_VISIT, ExplicitEdges(((2, 3),)), ExplicitAgents(("a",)))
    assert c[2] == LocationConstraint(
        PredicateKind.EDGE_AVOID,
        FilterExpr(Comparison("width", "<", AttrValue.number(10))),
        TagQuery("wheeled"))
    assert c[3].locations == ExplicitNodes(())
    assert c[4].locations == FilterExpr(Or(Comparison("site", "==", AttrValue.text("depot")), TagAtom("paved")))
    assert c[5] == Support("a", 1, "b", 4)
    assert result.mission.agent("b").init == Location.edge(2, 3)


@pytest.mark.parametrize("text, code", [
    ("graph { nodes { 1..3 } edge (1, 2) {} }\nconstraints { node_goal(3 a) }", ParseCode.SYNTAX_ERROR),
    ("graph { nodes { 1..3, 2 } }", ParseCode.DUPLICATE_DECLARATION),
    ("graph { nodes { 1..2 } edge (1, 2) {} edge (2, 1) {} }", ParseCode.DUPLICATE_DECLARATION),
    ("graph { nodes { 1 } } agent a { init: 1 } agent a { init: 1 }", ParseCode.DUPLICATE_DECLARATION),
    ("graph { nodes { 1 } node 1 {} node 1 {} }", ParseCode.DUPLICATE_DECLARATION),
    ("ontology { UGV { wheeled } wheeled }", ParseCode.DUPLICATE_DECLARATION),
    ("graph { nodes { 99999999999 } }", ParseCode.INTEGER_OVERFLOW),
    ("graph { nodes { " + "9" * 5000 + " } }", ParseCode.INTEGER_OVERFLOW),
    ("graph { node 1 { width: " + "9" * 400 + ".5 } }", ParseCode.DECIMAL_OVERFLOW),
    ("graph { nodes { 1..2000000000 } }", ParseCode.TOO_MANY_NODES),
    ("graph { nodes { 1..60000, 70001..110001 } }", ParseCode.TOO_MANY_NODES),
    ("graph { nodes { 1..3 } edge (3, 3) {} }", ParseCode.INVALID_EDGE),
    ("graph { nodes { 1..3 } edge (3, 7) {} }", ParseCode.UNKNOWN_LOCATION),
    ("graph { nodes { 1 } } constraints { attribute(ghost, night_vision) }", ParseCode.UNKNOWN_AGENT),
    ("constraints { node_teleport(1, a) }", ParseCode.SYNTAX_ERROR),
    ("constraints { node_goal(1, a, b) }", ParseCode.SYNTAX_ERROR),
    ("constraints { node_supported_from(3, [18, 19]) }", ParseCode.SYNTAX_ERROR),
    ("graph { node 1 { capacity: 0 } }", ParseCode.SYNTAX_ERROR),
])
def test_parse_errors(text, code):
    result = parse_mission(text)
    assert result.mission is None
    assert code in _codes(result)
    assert all(d.severity == Severity.ERROR for d in result.diagnostics)


def test_syntax_error_has_expected_token_and_span():
    result = parse_mission("graph {\n  nodes { 1..3 }\n}\nconstraints {\n  node_goal(3 a)\n}\n")
    [diagnostic] = result.diagnostics
    assert diagnostic.message == "expected ')', found 'a'"
    assert (diagnostic.span.line, diagnostic.span.column) == (5, 15)


def test_huge_node_range_is_rejected_before_expansion():
    result = parse_mission("graph { nodes { 1..2000000000 } }")
    [diagnostic] = result.diagnostics
    assert diagnostic.code == ParseCode.TOO_MANY_NODES
    assert (diagnostic.span.line, diagnostic.span.column) == (1, 17)


def test_non_finite_decimal_is_an_error():
    result = parse_mission("graph { node 1 { width: " + "9" * 400 + ".5 } }")
    assert result.mission is None
    [diagnostic] = result.diagnostics
    assert diagnostic.code == ParseCode.DECIMAL_OVERFLOW
    assert (diagnostic.span.line, diagnostic.span.column) == (1, 25)
    assert "..." in diagnostic.message


def test_diagnostic_spans_lie_within_input():
    text = 'graph { nodes { 1..3 } edge (1, 9) {} }\nconstraints { node_goal("UGV) }'
    result = parse_mission(text)
    lines = text.split("\n")
    for d in result.diagnostics:
        assert 1 <= d.span.line <= len(lines)
        assert 1 <= d.span.column <= len(lines[d.span.line - 1]) + 1


def test_agent_define_and_attribute():
    text = """
    graph { nodes { 1..2 } }
    constraints {
        agent_define(c1, 1, [company, VBCI])
        attribute(c1, night_vision)
        attribute(c1, speed, 2.5)
        agent_define(scout, 2)
    }
    """
    m = parse_mission(text).mission
    assert dict(m.agent("c1").attrs) == {
        "tag": AttrValue.tag("company"),
        "tag_2": AttrValue.tag("VBCI"),
        "tag_3": AttrValue.tag("night_vision"),
        "speed": AttrValue.number(2.5),
    }
    assert m.agent("scout").attrs == {}
    assert m.constraints == ()


# ---------------------------------------------------------------------------
# Filters
# ---------------------------------------------------------------------------

def test_parse_filter_precedence():
    assert parse_filter("a or b and not c") == Or(TagAtom("a"), And(TagAtom("b"), Not(TagAtom("c"))))
    assert parse_filter("(a or b) and c") == And(Or(TagAtom("a"), TagAtom("b")), TagAtom("c"))
    assert parse_filter("speed >= -1.5") == Comparison("speed", ">=", AttrValue.number(-1.5))
    assert parse_filter("vehicle == VBCI") == Comparison("vehicle", "==", AttrValue.tag("VBCI"))


def test_parse_filter_rejects_garbage():
    assert parse_filter("") is None
    assert parse_filter("width <") is None
    assert parse_filter("a b") is None
    assert parse_filter("(a") is None


def test_format_filter_reparses():
    for expr in [
        And(Or(TagAtom("a"), TagAtom("b")), TagAtom("c")),
        Or(TagAtom("a"), Or(TagAtom("b"), TagAtom("c"))),
        Not(And(TagAtom("a"), Comparison("w", "<", AttrValue.number(3)))),
        And(TagAtom("a"), And(TagAtom("b"), TagAtom("c"))),
    ]:
        assert parse_filter(format_filter(expr)) == expr


# ---------------------------------------------------------------------------
# Printer
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("name", FIXTURES)
def test_round_trip_fixtures(name):
    """parse(print(m)) == m, and printing is a fixpoint"""
    m = load_mission(name)
    text = print_mission(m)
    again = parse_mission(text)
    assert again.ok, [str(d) for d in again.diagnostics]
    assert again.mission == m
    assert print_mission(again.mission) == text


def test_round_trip_random_missions():
    rng = random.Random(20240611)
    for _ in range(100):
        m = random_text_mission(rng)
        text = print_mission(m)
        result = parse_mission(text)
        assert result.ok, (text, [str(d) for d in result.diagnostics])
        assert result.mission == m, text


def test_print_empty_mission():
    text = print_mission(Mission())
    assert text == "graph {\n}\n\nontology {\n}\n\nconstraints {\n}\n"
    assert parse_mission(text).mission == Mission()


def test_print_canonical_edge_order():
    m = parse_mission("graph { nodes { 8..9 } edge (9, 8) {} }").mission
    assert "  edge (8, 9) {}" in print_mission(m).splitlines()


def test_print_goma_excerpt():
    text = print_mission(load_mission("goma.ortac"))
    assert "  nodes { 1..20 }" in text
    assert "  node 9 { capacity: 4, site: intersection }" in text
    assert "agent c1 { init: 9, tag: company, tag_2: VBCI }" in text
    assert "agent unit2 { init: 2, type: section, tag: night_vision }" in text
    assert '  edge_avoid("width < 6", "VBCI")' in text
    assert "  node_supported_from(3, 18)" in text


def test_large_finite_decimal_round_trips():
    m = parse_mission("graph { node 1 { width: 1" + "0" * 300 + ".5 } }").mission
    assert m.graph.attributes_of(Location.node(1))["width"].value == 1e300
    text = print_mission(m)
    again = parse_mission(text)
    assert again.ok, [str(d) for d in again.diagnostics]
    assert again.mission == m
    assert print_mission(again.mission) == text
