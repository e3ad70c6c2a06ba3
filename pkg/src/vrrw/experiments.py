"""Catalogues and Monte Carlo orchestration behind the command line."""

from __future__ import annotations

import os
import warnings
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog

from . import scenarios
from .graph import WeightedGraph, load_graph, outer_boundary, validate
from .jsonio import write_json
from .replicator import NOT_EQUILIBRIUM, EquilibriumReport, SimplexPoint, classify_equilibrium, solve_equilibrium_on_support
from .scenarios import LadderParameters, ladder_index
from .sim import LocalizationReport, RunConfig, run, run_seed, scenario_zloop
from .structure import TrapReport, find_trapping_volkov, is_strongly_trapping

DEFAULT_SUPPORT_CAP = 6


def _equilibrium_system(graph: WeightedGraph, S):
    k = len(S)
    idx = np.array(S)
    system = np.zeros((k + 1, k + 1))
    system[:k, :k] = graph.matrix[np.ix_(idx, idx)]
    system[:k, k] = -1.0
    system[k, :k] = 1.0
    return system


def manifold_directions(graph: WeightedGraph, S) -> np.ndarray:
    """Orthonormal null directions ``(dx_S, dh)`` of the equilibrium system on ``S``, one per column."""
    return null_space(_equilibrium_system(graph, S))


def central_point(graph: WeightedGraph, S, particular: np.ndarray, level: float) -> np.ndarray | None:
    """Point of a degenerate equilibrium set maximizing ``min(x_S, H - N_boundary)``.

    Returns the full-length vector, or ``None`` when the margin is not positive.
    """
    basis = manifold_directions(graph, S)
    idx = np.array(S)
    bd = np.array(outer_boundary(graph, S), dtype=int)
    base = np.append(particular, level)
    k = len(S)
    # variables (c, t): x_S = base_x + B_x c, h = base_h + B_h c
    rows = [np.column_stack([-basis[:k], np.ones(k)])]
    rhs = [base[:k]]
    if bd.size:
        A_bS = graph.matrix[np.ix_(bd, idx)]
        coeff = A_bS @ basis[:k] - basis[k][None, :]
        rows.append(np.column_stack([coeff, np.ones(bd.size)]))
        rhs.append(base[k] - A_bS @ base[:k])
    m = basis.shape[1]
    res = linprog(
        np.r_[np.zeros(m), -1.0],
        A_ub=np.vstack(rows),
        b_ub=np.concatenate(rhs),
        bounds=[(None, None)] * m + [(None, 1.0)],
        method="highs",
    )
    if res.status != 0 or res.x[-1] <= 1e-9:
        return None
    x = np.zeros(graph.vertex_count)
    x[idx] = base[:k] + basis[:k] @ res.x[:m]
    return np.clip(x, 0.0, None) / np.clip(x, 0.0, None).sum()


@dataclass(frozen=True, eq=False)
class CatalogueEntry:
    """An equilibrium together with the set of equilibria sharing its support."""

    report: EquilibriumReport
    block: np.ndarray
    directions: np.ndarray

    def contains(self, x, tol: float = 1e-9) -> bool:
        """Whether ``x`` is an equilibrium of the same support system."""
        v = np.asarray(x, dtype=float)
        S = list(self.report.support)
        outside = np.delete(v, S)
        if np.any(np.abs(outside) > tol) or abs(v.sum() - 1) > tol or np.any(v[S] < -tol):
            return False
        N = self.block @ v[S]
        return bool(np.ptp(N) <= tol)

    def to_json(self) -> dict:
        doc = self.report.to_json()
        doc["manifold_dimension"] = int(self.directions.shape[1])
        return doc


def enumerate_equilibria(graph: WeightedGraph, support_cap: int = DEFAULT_SUPPORT_CAP, supports=None) -> list[EquilibriumReport]:
    """Equilibria obtained by solving on every support up to ``support_cap`` vertices.

    Supports whose particular solution has a vanishing coordinate are
    skipped; that point is found again on its own, smaller support.  When
    the solutions on a support form a continuum, the reported point is the
    one with the largest margin to the faces of the simplex and to
    ``N_j = H`` on the boundary (when that margin is positive).  Sorted by
    decreasing ``H``.
    """
    return [e.report for e in equilibrium_catalogue(graph, support_cap, supports)]


def equilibrium_catalogue(graph: WeightedGraph, support_cap: int = DEFAULT_SUPPORT_CAP, supports=None) -> list[CatalogueEntry]:
    if supports is None:
        top = min(support_cap, graph.vertex_count)
        supports = (S for k in range(1, top + 1) for S in combinations(graph.vertices, k))
    found = {}
    for S in supports:
        S = tuple(S)
        sol = solve_equilibrium_on_support(graph, S)
        if sol.point is None or sol.point.support != S:
            continue
        point = sol.point
        if sol.nullspace_dim > 0:
            better = central_point(graph, S, sol.raw, sol.h)
            if better is not None:
                point = SimplexPoint(better)
        report = classify_equilibrium(graph, point)
        if report.classification == NOT_EQUILIBRIUM:
            continue
        directions = manifold_directions(graph, S) if sol.nullspace_dim > 0 else np.zeros((len(S) + 1, 0))
        found.setdefault(S, CatalogueEntry(report, graph.matrix[np.ix_(S, S)], directions))
    return sorted(found.values(), key=lambda e: (-e.report.H, e.report.support))


def cmd_analyze(graph: WeightedGraph, support_cap: int = DEFAULT_SUPPORT_CAP) -> dict:
    if graph.vertex_count > support_cap:
        warnings.warn(
            f"only supports of at most {support_cap} of {graph.vertex_count} vertices are enumerated",
            stacklevel=2,
        )
    entries = equilibrium_catalogue(graph, support_cap)
    return {
        "vertices": graph.vertex_count,
        "support_cap": support_cap,
        "equilibria": [e.to_json() for e in entries],
    }


def find_traps(graph: WeightedGraph) -> list[TrapReport]:
    """Iterative trap search from every non-loop edge, deduplicated by ``S``."""
    seen = {}
    for i, j in graph.weights:
        if i == j:
            continue
        report = find_trapping_volkov(graph, (i, j))
        if report is not None and report.S not in seen:
            assert is_strongly_trapping(graph, report.S).is_trapping
            seen[report.S] = report
    return [seen[S] for S in sorted(seen)]


def cmd_trap(graph: WeightedGraph) -> dict:
    return {"vertices": graph.vertex_count, "traps": [t.to_json() for t in find_traps(graph)]}


# -- ladder ---------------------------------------------------------------------------------


def interior_supports(params: LadderParameters, max_size: int = 3):
    """Supports of at most ``max_size`` vertices with every index at most ``depth - 1``."""
    g_size = 2 * (params.depth + 1)
    inside = [v for v in range(g_size) if ladder_index(v) <= params.depth - 1]
    for k in range(1, max_size + 1):
        yield from combinations(inside, k)


def cmd_ladder(params: LadderParameters, max_size: int = 3) -> dict:
    graph = scenarios.ladder_ex2(params)
    stable = [r for r in enumerate_equilibria(graph, supports=interior_supports(params, max_size)) if r.is_stable]
    return {
        "note": "evidence on a finite truncation, supports away from the truncation edge",
        "parameters": {k: getattr(params, k) for k in ("p", "q", "eps", "eta", "mu", "depth")},
        "max_support_size": max_size,
        "stable_interior_equilibria": [r.to_json() for r in stable],
        "traps": [t.to_json() for t in find_traps(graph)],
    }


# -- Monte Carlo ------------------------------------------------------------------------------


SIM_SCENARIOS = ("example1", "z", "zloop", "graph")


@dataclass
class ExperimentConfig:
    scenario: str
    runs: int = 1
    steps: int = 10**6
    base_seed: int = 0
    output_dir: Path | None = None
    graph_path: Path | None = None
    depth: int = 5
    workers: int | None = None

    def violations(self) -> list[str]:
        out = []
        if self.scenario not in SIM_SCENARIOS:
            out.append(f"unknown simulation scenario {self.scenario!r}")
        if self.runs < 1:
            out.append("runs must be at least 1")
        if self.steps < 1:
            out.append("steps must be at least 1")
        if not 0 <= self.base_seed < 2**64:
            out.append("seed must be an unsigned 64-bit integer")
        if self.scenario == "graph" and self.graph_path is None:
            out.append("a graph file is required")
        if self.scenario in ("z", "zloop") and self.depth < 4:
            out.append("truncation depth must be at least 4")
        return out


def _setup(config: ExperimentConfig):
    """Graph, initial counts, start vertex, reference point and target set."""
    if config.scenario == "example1":
        g = scenarios.example1()
        return g, scenarios.example1_initial_counts(), 0, scenarios.example1_equilibrium(), (0, 1, 2, 3, 4)
    if config.scenario == "z":
        g = scenarios.z_truncation(config.depth)
        return g, np.ones(g.vertex_count), config.depth, None, None
    g = load_graph(config.graph_path)
    problems = validate(g)
    if problems:
        raise ValueError("invalid graph: " + "; ".join(problems))
    return g, np.ones(g.vertex_count), 0, None, None


def _one_run(args) -> dict:
    config, index = args
    seed = run_seed(config.base_seed, index)
    if config.scenario == "zloop":
        z = scenario_zloop(config.steps, seed, config.depth)
        return {"report": z.report, "doc": z.to_json()}
    g, Z0, start, q, _ = _setup(config)
    report = run(RunConfig(g, Z0, start, config.steps, seed, reference_q=q))
    return {"report": report, "doc": report.to_json()}


def _aggregate(config: ExperimentConfig, docs: list[dict], reports: list[LocalizationReport]) -> dict:
    summary = {
        "scenario": config.scenario,
        "runs": config.runs,
        "steps": config.steps,
        "base_seed": config.base_seed,
    }
    if config.scenario == "zloop":
        loc = [d for d in docs if d["localized_on_five"]]
        summary["localized_fraction"] = len(loc) / len(docs)
        summary["origin_fraction_at_least_0.9"] = (
            sum(d["origin_fraction"] >= 0.9 for d in loc) / len(loc) if loc else None
        )
        summary["statistics"] = [
            {k: d[k] for k in ("seed", "origin_fraction", "alpha", "neighbor_ratios", "outer_ratios")} for d in loc
        ]
    else:
        target = _setup(config)[4] if config.scenario == "example1" else None
        loc = [r for r in reports if r.localized and (target is None or r.range_estimate == target)]
        summary["localized_fraction"] = len(loc) / len(reports)
        ranges = Counter(",".join(map(str, r.range_estimate)) for r in reports if r.localized)
        summary["localized_ranges"] = dict(sorted(ranges.items()))
        exps = {}
        for r in loc:
            for i, fit in r.exponent_fits.items():
                exps.setdefault(i, []).append(fit.slope)
        summary["exponent_mean"] = {str(i): float(np.mean(v)) for i, v in sorted(exps.items())}
        summary["exponent_std"] = {str(i): float(np.std(v)) for i, v in sorted(exps.items())}
    summary["run_reports"] = docs
    return summary


def cmd_simulate(config: ExperimentConfig) -> dict:
    """Run ``config.runs`` seeded walks, write per-run CSVs and a summary, return the summary."""
    problems = config.violations()
    if problems:
        raise ValueError("; ".join(problems))
    jobs = [(config, k) for k in range(config.runs)]
    workers = config.workers or min(config.runs, os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_run, jobs, chunksize=max(1, config.runs // (4 * workers))))
    else:
        results = [_one_run(job) for job in jobs]
    reports = [r["report"] for r in results]
    summary = _aggregate(config, [r["doc"] for r in results], reports)
    if config.output_dir is not None:
        out = Path(config.output_dir)
        runs_dir = out / "runs"
        try:
            runs_dir.mkdir(parents=True, exist_ok=True)
            for k, report in enumerate(reports):
                report.write_snapshot_csv(runs_dir / f"run_{k:04d}.csv")
        except OSError as exc:
            raise OSError(f"cannot write run files under {runs_dir}: {exc.strerror}") from exc
        write_json(out / "summary.json", summary)
    return summary
