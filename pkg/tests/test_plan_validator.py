#!/usr/bin/env python3
"""
Validator tests: hand-built plans, plumbing violations, canonical ordering
and a mutation harness over planner output.
"""

import random
from collections import Counter

import pytest

from mission_analysis import check_static
from mission_factory import load_ground
from mission_model import Location, Plan, successors
from mission_parser import parse_mission
from mission_planner import Solved, plan
from plan_validator import Violation, ViolationKind, validate

N = Location.node
E = Location.edge

P3_HEAD = "graph { nodes { 1..3 } edge (1, 2) {} edge (2, 3) {} }\n"


def _ground(text: str):
    parsed = parse_mission(text)
    assert parsed.ok, [str(d) for d in parsed.diagnostics]
    result = check_static(parsed.mission)
    assert result.ok, [str(d) for d in result.diagnostics]
    return result.mission


def _kinds(violations):
    return [v.kind for v in violations]


@pytest.fixture(scope="module")
def goma():
    gm = load_ground("goma.ortac")
    outcome = plan(gm)
    assert isinstance(outcome, Solved)
    return gm, outcome.plan


@pytest.fixture(scope="module")
def ugv():
    gm = load_ground("ugv.ortac")
    outcome = plan(gm)
    assert isinstance(outcome, Solved)
    return gm, outcome.plan


def test_planner_output_is_valid(goma, ugv):
    for gm, p in (goma, ugv):
        assert validate(p, gm) == []


def test_capacity_exceeded_on_p3():
    """Two agents meeting on node 2 at t=1"""
    gm = _ground(P3_HEAD + "agent a { init: (1, 2) }\nagent b { init: (2, 3) }")
    p = Plan(horizon=1, traj={"a": (E(1, 2), N(2)), "b": (E(2, 3), N(2))})
    [v] = validate(p, gm)
    assert v.kind == ViolationKind.CAPACITY_EXCEEDED
    assert v.location == N(2)
    assert v.timestep == 1
    assert v.agent is None


def test_support_violated_at_t5():
    gm = _ground("""
        graph { nodes { 1..3, 18 } edge (1, 2) {} edge (2, 3) {} edge (3, 18) {} }
        agent u { init: 1 }
        constraints { node_supported_from(3, 18) }
    """)
    p = Plan(horizon=5, traj={"u": (N(1), E(1, 2), N(2), N(2), E(2, 3), N(3))})
    assert validate(p, gm) == [Violation(
        ViolationKind.SUPPORT_VIOLATED, "u", N(3), 5, 0, "u on 3 without support on 18")]


def test_zero_horizon_goal_at_init():
    gm = _ground(P3_HEAD + "agent a { init: 3 }\nconstraints { node_goal(3, a) }")
    assert validate(Plan(horizon=0, traj={"a": (N(3),)}), gm) == []


def test_avoid_reported_per_timestep():
    gm = _ground(P3_HEAD + "agent a { init: 1 }\nconstraints { edge_avoid((1, 2), a) }")
    p = Plan(horizon=3, traj={"a": (N(1), E(1, 2), E(1, 2), N(2))})
    violations = validate(p, gm)
    assert _kinds(violations) == [ViolationKind.AVOID_VIOLATED] * 2
    assert [v.timestep for v in violations] == [1, 2]


def test_imperative_support_violation():
    gm = _ground(P3_HEAD + "agent a { init: 1 }\nagent b { init: 3 }\nconstraints { support(a, 1, b, 2) }")
    p = Plan(horizon=2, traj={"a": (N(1), N(1), N(1)), "b": (N(3), E(2, 3), N(2))})
    violations = validate(p, gm)
    assert [(v.kind, v.agent, v.timestep) for v in violations] == [
        (ViolationKind.SUPPORT_VIOLATED, "a", 0),
        (ViolationKind.SUPPORT_VIOLATED, "a", 1),
    ]


def test_visit_is_untimed_and_sorted_last():
    gm = load_ground("goma.ortac")
    waiting = Plan(horizon=0, traj={a.name: (a.init,) for a in gm.agents})
    violations = validate(waiting, gm)
    assert _kinds(violations) == [ViolationKind.GOAL_UNSATISFIED, ViolationKind.VISIT_UNSATISFIED]
    assert violations[0].timestep == 0
    assert violations[0].constraint_index == 0
    assert violations[1].timestep is None
    assert violations[1].location == N(9)


def test_illegal_move_and_bad_init():
    gm = _ground(P3_HEAD + "agent a { init: 1 }")
    p = Plan(horizon=2, traj={"a": (N(2), N(2), N(3))})
    violations = validate(p, gm)
    assert [(v.kind, v.timestep) for v in violations] == [
        (ViolationKind.BAD_INIT, 0), (ViolationKind.ILLEGAL_MOVE, 2)]


def test_undeclared_locations():
    gm = _ground(P3_HEAD + "agent a { init: 1 }")
    p = Plan(horizon=1, traj={"a": (N(7), N(8))})
    assert [(v.kind, v.timestep) for v in validate(p, gm)] == [
        (ViolationKind.BAD_INIT, 0), (ViolationKind.ILLEGAL_MOVE, 1)]


def test_horizon_mismatch_plumbing():
    gm = _ground(P3_HEAD + "agent a { init: 1 }\nagent b { init: 3 }")
    p = Plan(horizon=2, traj={"a": (N(1),), "ghost": (N(2), N(2), N(2))})
    violations = validate(p, gm)
    mismatches = [v for v in violations if v.kind == ViolationKind.HORIZON_MISMATCH]
    assert {v.agent for v in mismatches} == {"a", "b", "ghost"}
    # short trajectories are padded by waiting, so nothing else is wrong
    assert len(violations) == 3


def test_validate_is_deterministic(goma):
    gm, p = goma
    broken = Plan(horizon=p.horizon, traj={name: steps[:1] * len(steps) for name, steps in p.traj.items()})
    assert validate(broken, gm) == validate(broken, gm)


def test_violation_to_dict_key_order():
    v = Violation(ViolationKind.AVOID_VIOLATED, "unit1", E(8, 9), 3, 2, "unit1 is on avoided (8, 9)")
    assert list(v.to_dict()) == ["kind", "agent", "location", "timestep", "constraint_index", "message"]
    assert v.to_dict()["location"] == "e:8-9"
    assert Violation(ViolationKind.VISIT_UNSATISFIED).to_dict()["location"] is None


def test_list_constraint_matches_its_expansion():
    as_list = _ground(P3_HEAD + "agent a { init: 1 }\nconstraints { node_avoid([2, 3], a) node_goal(1, a) }")
    expanded = _ground(P3_HEAD + "agent a { init: 1 }\n"
                       "constraints { node_avoid(2, a) node_avoid(3, a) node_goal(1, a) }")
    rng = random.Random(3)
    for _ in range(50):
        steps = [N(1)]
        for _ in range(6):
            steps.append(rng.choice(sorted(successors(steps[-1], as_list.graph))))
        p = Plan(horizon=6, traj={"a": tuple(steps)})

        def strip(violations):
            return [(v.kind, v.agent, v.location, v.timestep) for v in violations]

        assert strip(validate(p, as_list)) == strip(validate(p, expanded))


# ---------------------------------------------------------------------------
# Mutation harness
# ---------------------------------------------------------------------------

def _illegal_move(rng: random.Random, gm, p: Plan, name: str):
    steps = list(p.traj[name])
    t = rng.randint(1, p.horizon)
    allowed = successors(steps[t - 1], gm.graph)
    steps[t] = rng.choice([loc for loc in gm.graph.locations if loc not in allowed])
    return Plan(p.horizon, {**p.traj, name: tuple(steps)}), (ViolationKind.ILLEGAL_MOVE, name, t)


def _mutate(rng: random.Random, gm, p: Plan):
    """One random mutation of a valid plan and the violation that must catch it."""
    name = rng.choice(list(gm.agent_names))
    traj = dict(p.traj)
    steps = list(traj[name])
    roll = rng.randrange(6)

    if roll == 0:
        return _illegal_move(rng, gm, p, name)

    if roll == 1:
        steps[0] = rng.choice([loc for loc in gm.graph.locations if loc != steps[0]])
        traj[name] = tuple(steps)
        return Plan(p.horizon, traj), (ViolationKind.BAD_INIT, name, 0)

    if roll == 2:
        horizon = p.horizon + rng.choice([-1, 1, 2])
        return Plan(horizon, traj), (ViolationKind.HORIZON_MISMATCH, name, None)

    if roll == 3:
        del traj[name]
        return Plan(p.horizon, traj), (ViolationKind.HORIZON_MISMATCH, name, None)

    if roll == 4:
        # move onto a location another agent already fills
        t = rng.randint(0, p.horizon)
        occupancy = Counter(p.loc(other, t) for other in gm.agent_names)
        full = sorted(loc for loc, count in occupancy.items()
                      if count == gm.graph.capacity_of(loc) and loc != steps[t])
        if full:
            steps[t] = rng.choice(full)
            traj[name] = tuple(steps)
            return Plan(p.horizon, traj), (ViolationKind.CAPACITY_EXCEEDED, None, t)
        return _illegal_move(rng, gm, p, name)

    avoids = [g for g in gm.ground if g.kind.is_avoid]
    g = rng.choice(avoids)
    name = rng.choice(g.agents)
    steps = list(traj[name])
    t = rng.randint(0, p.horizon)
    steps[t] = g.location
    traj[name] = tuple(steps)
    return Plan(p.horizon, traj), (ViolationKind.AVOID_VIOLATED, name, t)


@pytest.mark.parametrize("fixture_name", ["goma", "ugv"])
def test_mutations_are_caught(fixture_name, request):
    """Every single mutation of a valid plan yields a violation of the matching kind"""
    gm, p = request.getfixturevalue(fixture_name)
    rng = random.Random(11)
    for _ in range(150):
        mutated, (kind, agent, timestep) = _mutate(rng, gm, p)
        violations = validate(mutated, gm)
        assert any(v.kind == kind and v.agent == agent and v.timestep == timestep for v in violations), \
            (kind, agent, timestep, violations)
