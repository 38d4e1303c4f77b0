#!/usr/bin/env python3
"""
Planner tests: small hand-checked missions, the brute-force oracle,
soundness against the validator, and search limits.
"""

import random
import time

import pytest

import mission_planner
from mission_analysis import check_static
from mission_factory import load_ground, random_mission
from mission_model import Location
from mission_parser import parse_mission
from mission_planner import (
    InfeasibleUpTo,
    InstanceTooLargeError,
    Solved,
    Timeout,
    brute_force_plan,
    lower_bound,
    plan,
)
from plan_validator import validate
from utils.deadline import Deadline
from utils.planner_config import PlannerConfig


def _ground(text: str):
    parsed = parse_mission(text)
    assert parsed.ok, [str(d) for d in parsed.diagnostics]
    result = check_static(parsed.mission)
    assert result.ok, [str(d) for d in result.diagnostics]
    return result.mission


def test_p3_goal_takes_four_steps():
    """Node, edge, node, edge, node: two hops cost four timesteps"""
    gm = load_ground("p3_goal.ortac")
    outcome = plan(gm)
    assert isinstance(outcome, Solved)
    assert outcome.plan.horizon == 4
    assert outcome.plan.traj["a"] == (
        Location.node(1), Location.edge(1, 2), Location.node(2), Location.edge(2, 3), Location.node(3))


def test_p3_swap_is_infeasible():
    outcome = plan(load_ground("p3_swap.ortac"))
    assert outcome == InfeasibleUpTo(64)


def test_p3_anonymous_goal():
    """Either team member may satisfy the goal"""
    outcome = plan(load_ground("p3_anonymous.ortac"))
    assert isinstance(outcome, Solved)
    assert outcome.plan.horizon == 2
    assert not validate(outcome.plan, load_ground("p3_anonymous.ortac"))


def test_no_constraints_means_horizon_zero():
    gm = _ground("graph { nodes { 1..2 } edge (1, 2) {} } agent a { init: 1 }")
    outcome = plan(gm)
    assert isinstance(outcome, Solved)
    assert outcome.plan.horizon == 0
    assert outcome.plan.traj == {"a": (Location.node(1),)}


def test_lower_bound():
    assert lower_bound(load_ground("p3_goal.ortac")) == 4
    assert lower_bound(load_ground("p3_swap.ortac")) == 4
    assert lower_bound(load_ground("p3_anonymous.ortac")) == 2
    assert lower_bound(load_ground("goma.ortac")) == 12


def test_lower_bound_unreachable_target():
    gm = _ground("graph { nodes { 1..3 } edge (1, 2) {} } agent a { init: 1 } constraints { node_goal(3, a) }")
    assert lower_bound(gm, max_horizon=10) == 11
    assert plan(gm, PlannerConfig(max_horizon=10)) == InfeasibleUpTo(10)


def test_avoided_initial_location():
    gm = _ground("graph { nodes { 1..2 } edge (1, 2) {} } agent a { init: 1 } constraints { node_avoid(1, a) }")
    assert plan(gm) == InfeasibleUpTo(0)
    assert brute_force_plan(gm) == InfeasibleUpTo(0)


def test_support_forces_a_supporter():
    """Entering a supported node requires another agent on the support node"""
    gm = _ground("""
        graph { nodes { 1..3 } edge (1, 2) {} edge (2, 3) {} }
        agent a { init: 1 }
        agent b { init: 3 }
        constraints { node_goal(2, a) node_supported_from(2, 3) }
    """)
    outcome = plan(gm)
    assert isinstance(outcome, Solved)
    assert outcome.plan.horizon == 2
    assert outcome.plan.loc("b", 2) == Location.node(3)
    assert not validate(outcome.plan, gm)


def test_imperative_support():
    gm = _ground("""
        graph { nodes { 1..3 } edge (1, 2) {} edge (2, 3) {} }
        agent a { init: 1 }
        agent b { init: 3 }
        constraints { node_goal(2, a) support(a, 2, b, 1) }
    """)
    # b cannot get past a to node 1 on a unit-capacity path
    assert isinstance(plan(gm, PlannerConfig(max_horizon=12)), InfeasibleUpTo)
    assert brute_force_plan(gm, max_horizon=12) == InfeasibleUpTo(12)


def test_visits_count_at_any_time():
    gm = _ground("""
        graph { nodes { 1..3 } edge (1, 2) {} edge (2, 3) {} }
        agent a { init: 2 }
        constraints { node_visit(1, a) edge_visit((2, 3), a) node_goal(2, a) }
    """)
    outcome = plan(gm)
    assert isinstance(outcome, Solved)
    # 2 -> (1,2) -> 1 -> (1,2) -> 2 -> (2,3) -> 2
    assert outcome.plan.horizon == 6
    assert not validate(outcome.plan, gm)


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

def test_brute_force_examples():
    for name, horizon in (("p3_goal.ortac", 4), ("p3_anonymous.ortac", 2)):
        gm = load_ground(name)
        oracle = brute_force_plan(gm)
        assert oracle.plan.horizon == horizon
        assert validate(oracle.plan, gm) == []
    assert brute_force_plan(load_ground("p3_swap.ortac"), max_horizon=20) == InfeasibleUpTo(20)


def test_brute_force_refuses_large_instances():
    with pytest.raises(InstanceTooLargeError):
        brute_force_plan(load_ground("goma.ortac"))


def test_ugv_matches_oracle():
    gm = load_ground("ugv.ortac")
    outcome = plan(gm)
    oracle = brute_force_plan(gm)
    assert isinstance(outcome, Solved)
    assert isinstance(oracle, Solved)
    assert outcome.plan.horizon == oracle.plan.horizon
    assert outcome.plan.horizon >= lower_bound(gm)
    assert not validate(outcome.plan, gm)
    assert not validate(oracle.plan, gm)


def test_planner_agrees_with_oracle_on_random_missions():
    """Same optimal makespan (or the same infeasibility verdict) on 200 small missions"""
    rng = random.Random(2024)
    cfg = PlannerConfig(max_horizon=8)
    checked = 0
    while checked < 200:
        result = check_static(random_mission(rng, max_nodes=6, max_edges=7, max_agents=3))
        if not result.ok:
            continue
        gm = result.mission
        outcome = plan(gm, cfg)
        oracle = brute_force_plan(gm, max_horizon=8, force=True)
        if isinstance(oracle, Solved):
            assert isinstance(outcome, Solved), gm
            assert outcome.plan.horizon == oracle.plan.horizon
            assert not validate(outcome.plan, gm)
            assert not validate(oracle.plan, gm)
        else:
            assert outcome == oracle
        checked += 1


def test_infeasibility_is_monotone_in_the_horizon():
    """A verdict up to horizon 8 fixes the outcome for every smaller limit"""
    rng = random.Random(31)
    checked = 0
    while checked < 60:
        result = check_static(random_mission(rng, max_nodes=5, max_edges=6, max_agents=3))
        if not result.ok:
            continue
        gm = result.mission
        outcome = plan(gm, PlannerConfig(max_horizon=8))
        for h in range(1, 8):
            smaller = plan(gm, PlannerConfig(max_horizon=h))
            if isinstance(outcome, Solved) and outcome.plan.horizon <= h:
                assert isinstance(smaller, Solved)
                assert smaller.plan.horizon == outcome.plan.horizon
            elif outcome == InfeasibleUpTo(0):
                assert smaller == InfeasibleUpTo(0)
            else:
                assert smaller == InfeasibleUpTo(h), (gm, outcome)
        checked += 1


# ---------------------------------------------------------------------------
# Configuration and limits
# ---------------------------------------------------------------------------

def test_seed_is_deterministic():
    gm = load_ground("ugv.ortac")
    first = plan(gm, PlannerConfig(seed=7))
    second = plan(gm, PlannerConfig(seed=7))
    canonical = plan(gm)
    assert first == second
    assert first.plan.horizon == canonical.plan.horizon


def test_canonical_order_is_deterministic():
    gm = load_ground("goma.ortac")
    assert plan(gm) == plan(gm)


class _AlreadyExpired(Deadline):
    def expired(self) -> bool:
        return True


def test_timeout(monkeypatch):
    monkeypatch.setattr(mission_planner, "Deadline", _AlreadyExpired)
    assert plan(load_ground("p3_goal.ortac"), PlannerConfig(timeout_ms=1)) == Timeout()


def test_invalid_config():
    with pytest.raises(ValueError):
        plan(load_ground("p3_goal.ortac"), PlannerConfig(max_horizon=0))


def test_timeout_on_the_real_clock():
    """Goma needs far more than a millisecond; the planner stops within the slack"""
    started = time.monotonic()
    outcome = plan(load_ground("goma.ortac"), PlannerConfig(timeout_ms=1))
    elapsed = time.monotonic() - started
    assert outcome == Timeout()
    assert elapsed < 0.001 + 0.5
