"""Command-line entry point: ``vrrw <command> [options]``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import scenarios
from .experiments import DEFAULT_SUPPORT_CAP, ExperimentConfig, cmd_analyze, cmd_ladder, cmd_simulate, cmd_trap
from .graph import load_graph, validate
from .jsonio import dumps, write_json
from .replicator import classify_equilibrium, integrate_replicator, solve_triangle_equilibrium
from .scenarios import LadderParameters

COMMANDS = ("analyze", "trap", "ode", "simulate", "zloop", "ladder_ex2", "triangle")


class ConfigError(ValueError):
    pass


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--graph", type=Path, help="graph JSON file")
    src.add_argument("--scenario", help="built-in graph: " + ", ".join(scenarios.SCENARIOS))
    common.add_argument("--labels", type=Path, help="optional labels JSON file")
    common.add_argument("--runs", type=int, default=1)
    common.add_argument("--steps", type=int, default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, default=None)
    common.add_argument("--support-cap", type=int, default=DEFAULT_SUPPORT_CAP)
    common.add_argument("--a", type=float, default=1.0)
    common.add_argument("--b", type=float, default=1.0)
    common.add_argument("--c", type=float, default=1.0)
    defaults = LadderParameters()
    common.add_argument("--p", type=float, default=defaults.p)
    common.add_argument("--q", type=float, default=defaults.q)
    common.add_argument("--eps", type=float, default=defaults.eps)
    common.add_argument("--eta", type=float, default=defaults.eta)
    common.add_argument("--mu", type=float, default=defaults.mu)
    common.add_argument("--depth", type=int, default=None)
    common.add_argument("--dt", type=float, default=1e-2)
    common.add_argument("--x0", help="comma-separated starting point for ode")
    common.add_argument("--workers", type=int, default=None)

    parser = argparse.ArgumentParser(prog="vrrw", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    help_text = {
        "analyze": "enumerate and classify equilibria",
        "trap": "search for strongly trapping subsets",
        "ode": "integrate the replicator equation",
        "simulate": "seeded Monte Carlo runs of the walk",
        "zloop": "walk on a path with a loop at the origin",
        "ladder_ex2": "stable equilibria and traps on the drifting-weight ladder",
        "triangle": "closed-form interior equilibrium of a weighted triangle",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=help_text[name])
    return parser


def _graph(args):
    if args.graph is not None:
        g = load_graph(args.graph, args.labels)
    elif args.scenario is not None:
        if args.scenario not in scenarios.SCENARIOS:
            raise ConfigError(f"unknown scenario {args.scenario!r}")
        g = scenarios.SCENARIOS[args.scenario]()
    else:
        raise ConfigError("one of --graph or --scenario is required")
    problems = validate(g)
    if problems:
        raise ConfigError("invalid graph: " + "; ".join(problems))
    return g


def _emit(doc, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(dumps(doc))
    else:
        write_json(out, doc)


def _ode(args) -> dict:
    g = _graph(args)
    if args.x0:
        x0 = np.array([float(t) for t in args.x0.split(",")])
        if x0.size != g.vertex_count or np.any(x0 < 0) or x0.sum() <= 0:
            raise ConfigError("--x0 needs one nonnegative entry per vertex")
        x0 = x0 / x0.sum()
    else:
        x0 = np.full(g.vertex_count, 1.0 / g.vertex_count)
    if not args.dt > 0:
        raise ConfigError("--dt must be positive")
    traj = integrate_replicator(g, x0, dt=args.dt, steps=args.steps or 1000)
    final = traj.final
    return {
        "dt": args.dt,
        "steps": int(traj.times.size - 1),
        "final_point": final.to_json(),
        "final_H": float(traj.H_series[-1]),
        "final_J": float(traj.J_series[-1]),
        "final_classification": classify_equilibrium(g, final).classification,
    }


def _simulate(args, scenario: str) -> dict:
    if scenario == "zloop":
        name = "zloop"
    elif args.graph is not None:
        name = "graph"
    elif args.scenario in ("example1", "z"):
        name = args.scenario
    else:
        raise ConfigError("simulate needs --graph or --scenario example1|z")
    config = ExperimentConfig(
        name,
        runs=args.runs,
        steps=args.steps or 10**6,
        base_seed=args.seed,
        output_dir=args.out,
        graph_path=args.graph,
        depth=args.depth or 5,
        workers=args.workers,
    )
    problems = config.violations()
    if problems:
        raise ConfigError("; ".join(problems))
    return cmd_simulate(config)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "analyze":
            if args.support_cap < 1:
                raise ConfigError("--support-cap must be positive")
            _emit(cmd_analyze(_graph(args), args.support_cap), args.out)
        elif args.command == "trap":
            _emit(cmd_trap(_graph(args)), args.out)
        elif args.command == "ode":
            _emit(_ode(args), args.out)
        elif args.command == "triangle":
            try:
                point, h = solve_triangle_equilibrium(args.a, args.b, args.c)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
            report = classify_equilibrium(scenarios.triangle(args.a, args.b, args.c), point)
            _emit({"point": point.to_json(), "H": h, "report": report.to_json()}, args.out)
        elif args.command == "ladder_ex2":
            params = LadderParameters(args.p, args.q, args.eps, args.eta, args.mu, args.depth or 8)
            problems = params.violations()
            if problems:
                raise ConfigError("; ".join(problems))
            _emit(cmd_ladder(params), args.out)
        else:
            summary = _simulate(args, args.command)
            if args.out is None:
                sys.stdout.write(dumps(summary))
            else:
                print(f"wrote {args.out / 'summary.json'}")
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"vrrw: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"vrrw: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
