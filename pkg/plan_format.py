"""Plan JSON wire format: ``{"format": "ortacplus-plan/1", "horizon": T, "agents": {...}}``."""

import json
from typing import Dict, List, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from mission_model import Location, Plan

PLAN_FORMAT = "ortacplus-plan/1"


class PlanFormatError(ValueError):
    """Raised for plan files that are not valid plan JSON."""


class PlanDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    format: Literal["ortacplus-plan/1"]
    horizon: int = Field(ge=0)
    agents: Dict[str, List[str]]


def plan_to_json(plan: Plan) -> str:
    """Serialize with two-space indentation; agents keep the plan's order."""
    document = PlanDocument(
        format=PLAN_FORMAT,
        horizon=plan.horizon,
        agents={name: [loc.token() for loc in traj] for name, traj in plan.traj.items()},
    )
    return json.dumps(document.model_dump(), indent=2) + "\n"


def plan_from_json(text: str) -> Plan:
    """Parse plan JSON.

    Trajectory lengths are not checked here; the validator reports them.

    Raises:
        PlanFormatError: invalid JSON, wrong schema, or a malformed location
    """
    try:
        document = PlanDocument.model_validate_json(text)
    except ValidationError as e:
        raise PlanFormatError(f"invalid plan file: {e.errors()[0]['msg']}") from e

    traj = {}
    for name, tokens in document.agents.items():
        try:
            traj[name] = tuple(Location.from_token(token) for token in tokens)
        except ValueError as e:
            raise PlanFormatError(f"invalid plan file: agent {name}: {e}") from e
    return Plan(horizon=document.horizon, traj=traj)
