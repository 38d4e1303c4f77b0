#!/usr/bin/env python3
"""
ortacplus - mission DSL toolchain

Commands:
    check       parse and statically check a mission
    expand      print the ground constraints of a mission
    plan        compute a makespan-optimal plan
    validate    check a plan file against a mission
    emit-pddl   write a PDDL3 domain/problem pair

Exit codes: 0 success, 1 diagnostics with errors (or plan violations),
2 infeasible, 3 timeout, 4 usage error, 5 I/O error.
"""

import json
import logging
from enum import IntEnum
from pathlib import Path
from typing import List, Optional, Union

import click
import click_log

from mission_analysis import GroundMission, StaticDiagnostic, check_static
from mission_model import Severity
from mission_parser import ParseDiagnostic, parse_mission
from mission_planner import InfeasibleUpTo, Solved, plan as run_planner
from pddl_emitter import emit_pddl, write_pddl_pair
from plan_format import PlanFormatError, plan_from_json, plan_to_json
from plan_validator import validate as validate_plan
from utils.mission_utils import default_stem, read_text, sanitize_pddl_name, write_text
from utils.planner_config import CliSettings, PlannerConfig

logger = logging.getLogger(__name__)
click_log.basic_config(logging.getLogger())


class ExitStatus(IntEnum):
    OK = 0
    DIAGNOSTICS = 1
    INFEASIBLE = 2
    TIMEOUT = 3
    USAGE = 4
    IO_ERROR = 5


class OrtacGroup(click.Group):
    """Click group that reports usage errors with exit status 4."""

    def make_context(self, info_name, args, parent=None, **extra):
        try:
            return super().make_context(info_name, args, parent=parent, **extra)
        except click.UsageError as e:
            e.exit_code = ExitStatus.USAGE
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = ExitStatus.USAGE
            raise


def _echo_diagnostic(path: str, d: Union[ParseDiagnostic, StaticDiagnostic], settings: CliSettings) -> None:
    span = d.span
    where = f"{path}:{span.line}:{span.column}" if span else path
    severity = d.severity.value
    if settings.color:
        severity = click.style(severity, fg="red" if d.severity == Severity.ERROR else "yellow", bold=True)
    click.echo(f"{severity} {where} [{d.code.value}] {d.message}", err=True)


def _fail_io(ctx: click.Context, what: str, error: OSError) -> None:
    click.echo(f"error: cannot {what}: {error.strerror or error}", err=True)
    ctx.exit(ExitStatus.IO_ERROR)


def _load_ground(ctx: click.Context, path: str) -> GroundMission:
    """Read, parse and check a mission; exits with status 1 or 5 on failure."""
    settings = CliSettings.from_env()
    try:
        text = read_text(path)
    except OSError as e:
        _fail_io(ctx, f"read {path}", e)

    parsed = parse_mission(text)
    diagnostics: List[Union[ParseDiagnostic, StaticDiagnostic]] = list(parsed.diagnostics)
    result = check_static(parsed.mission) if parsed.ok else None
    if result is not None:
        diagnostics.extend(result.diagnostics)
    for d in diagnostics:
        _echo_diagnostic(path, d, settings)

    if result is None or not result.ok:
        ctx.exit(ExitStatus.DIAGNOSTICS)
    return result.mission


@click.group(cls=OrtacGroup, name="ortacplus")
@click_log.simple_verbosity_option(logging.getLogger(), default="WARNING")
def cli():
    """ORTAC+ mission toolchain: check, expand, plan, validate, emit-pddl."""


@cli.command()
@click.argument("path")
@click.pass_context
def check(ctx, path):
    """Parse and statically check a mission file."""
    gm = _load_ground(ctx, path)
    click.echo(f"ok: {len(gm.agents)} agents, {len(gm.graph.nodes)} nodes, "
               f"{len(gm.graph.edges)} edges, {len(gm.ground)} ground constraints")
    ctx.exit(ExitStatus.OK)


@cli.command()
@click.argument("path")
@click.pass_context
def expand(ctx, path):
    """Print ground constraints, one per line."""
    gm = _load_ground(ctx, path)
    for g in gm.ground:
        click.echo(g.render())
    ctx.exit(ExitStatus.OK)


@cli.command()
@click.argument("path")
@click.option("--max-horizon", type=click.IntRange(min=1), default=None,
              help="Largest horizon to try (default 64 or ORTACPLUS_MAX_HORIZON).")
@click.option("--timeout", type=click.FloatRange(min=0, min_open=True), default=None,
              help="Wall-clock budget in seconds, decimals allowed (default 60).")
@click.option("--out", "out_path", default=None, help="Write the plan JSON here instead of stdout.")
@click.option("--seed", type=int, default=None, help="Tie-break shuffling seed (0 = canonical order).")
@click.pass_context
def plan(ctx, path, max_horizon: Optional[int], timeout: Optional[float], out_path: Optional[str], seed: Optional[int]):
    """Compute a makespan-optimal plan."""
    timeout_ms = None if timeout is None else max(1, round(timeout * 1000))
    try:
        cfg = PlannerConfig.from_env(max_horizon=max_horizon, timeout_ms=timeout_ms, seed=seed)
    except ValueError as e:
        click.echo(f"error: {e}", err=True)
        ctx.exit(ExitStatus.USAGE)

    gm = _load_ground(ctx, path)
    outcome = run_planner(gm, cfg)

    if isinstance(outcome, Solved):
        text = plan_to_json(outcome.plan)
        if out_path:
            try:
                write_text(out_path, text)
            except OSError as e:
                _fail_io(ctx, f"write {out_path}", e)
            click.echo(f"makespan: {outcome.plan.horizon}")
        else:
            click.echo(text, nl=False)
            click.echo(f"makespan: {outcome.plan.horizon}", err=True)
        ctx.exit(ExitStatus.OK)

    if isinstance(outcome, InfeasibleUpTo):
        click.echo(f"infeasible up to horizon {outcome.horizon}")
        ctx.exit(ExitStatus.INFEASIBLE)

    click.echo(f"timeout after {cfg.timeout_ms / 1000:g} s")
    ctx.exit(ExitStatus.TIMEOUT)


@cli.command()
@click.argument("mission_path")
@click.argument("plan_path")
@click.pass_context
def validate(ctx, mission_path, plan_path):
    """Check a plan file against a mission; prints violations as JSON."""
    gm = _load_ground(ctx, mission_path)
    try:
        plan_text = read_text(plan_path)
    except OSError as e:
        _fail_io(ctx, f"read {plan_path}", e)
    try:
        candidate = plan_from_json(plan_text)
    except PlanFormatError as e:
        click.echo(f"error: {plan_path}: {e}", err=True)
        ctx.exit(ExitStatus.IO_ERROR)

    violations = validate_plan(candidate, gm)
    click.echo(json.dumps([v.to_dict() for v in violations], indent=2))
    ctx.exit(ExitStatus.OK if not violations else ExitStatus.DIAGNOSTICS)


@cli.command("emit-pddl")
@click.argument("path")
@click.option("--stem", default=None, help="Output prefix (default: mission path without suffix).")
@click.pass_context
def emit_pddl_command(ctx, path, stem: Optional[str]):
    """Write <stem>-domain.pddl and <stem>-problem.pddl."""
    gm = _load_ground(ctx, path)
    stem = stem or default_stem(path)
    pair = emit_pddl(gm, problem_name=f"ortacplus-{sanitize_pddl_name(Path(stem).name)}")
    try:
        written = write_pddl_pair(pair, stem)
    except OSError as e:
        _fail_io(ctx, f"write PDDL files for {stem}", e)
    for written_path in written:
        click.echo(written_path)
    ctx.exit(ExitStatus.OK)


def main():
    cli(prog_name="ortacplus")


if __name__ == "__main__":
    main()
