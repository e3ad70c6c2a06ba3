"""Vertex-reinforced random walk simulation and localization diagnostics.

From ``X_n`` the walk moves to a neighbour ``j`` with probability
proportional to ``a_{X_n j} Z_n(j)``, then ``Z(j)`` grows by one.  Visit
counts start from strictly positive reals ``Z0`` and the start vertex is not
counted, so ``sum Z_n = n + n0`` with ``n0 = sum Z0``.

Each step consumes one uniform from a Philox generator.  :func:`step` is
the reference implementation; :func:`run` advances the same arithmetic in
a compiled loop, so both produce identical paths from identical streams.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numba
import numpy as np
from scipy import stats

from .chain import build_chain
from .graph import WeightedGraph, outer_boundary
from .replicator import (
    SimplexPoint,
    _vec,
    entropy,
    entropy_rate,
    lyapunov_value,
    neighbor_mass,
)
from .structure import TrapReport

SNAPSHOTS_PER_DECADE = 64
CHUNK = 1 << 16


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def run_seed(base_seed: int, run_index: int) -> int:
    return int(base_seed) ^ int(run_index)


@dataclass(frozen=True, eq=False)
class _Adjacency:
    ptr: np.ndarray
    idx: np.ndarray
    wts: np.ndarray


def _csr(graph: WeightedGraph) -> _Adjacency:
    ptr = [0]
    idx = []
    wts = []
    for i in graph.vertices:
        for j in graph.neighbors[i]:
            idx.append(j)
            wts.append(float(graph.weight(i, j)))
        ptr.append(len(idx))
    return _Adjacency(np.array(ptr, dtype=np.int64), np.array(idx, dtype=np.int64), np.array(wts))


@numba.njit(cache=True)
def _advance(Z, pos, uniforms, ptr, idx, wts):  # pragma: no cover - compiled
    for t in range(uniforms.size):
        start = ptr[pos]
        end = ptr[pos + 1]
        total = 0.0
        for k in range(start, end):
            total += wts[k] * Z[idx[k]]
        target = uniforms[t] * total
        acc = 0.0
        nxt = idx[end - 1]
        for k in range(start, end):
            acc += wts[k] * Z[idx[k]]
            if target < acc:
                nxt = idx[k]
                break
        Z[nxt] += 1.0
        pos = nxt
    return pos


@dataclass
class WalkState:
    """Visit counts, position and step counter of one walk.

    The generator is shared with successor states produced by :func:`step`
    and advances by one draw per step.
    """

    Z: np.ndarray
    position: int
    n: int
    n0: float
    rng: np.random.Generator

    @property
    def v(self) -> np.ndarray:
        return self.Z / (self.n + self.n0)


def new_walk(Z0, start_vertex: int, seed: int) -> WalkState:
    Z0 = np.array(Z0, dtype=float)
    if np.any(Z0 <= 0):
        raise ValueError("initial counts must be strictly positive")
    return WalkState(Z0.copy(), int(start_vertex), 0, float(Z0.sum()), make_rng(seed))


def transition_probabilities(graph: WeightedGraph, Z, position: int) -> dict[int, float]:
    nbrs = graph.neighbors[position]
    if not nbrs:
        raise ValueError(f"vertex {position} is isolated")
    w = np.array([float(graph.weight(position, j)) * Z[j] for j in nbrs])
    return dict(zip(nbrs, w / w.sum()))


def step(state: WalkState, graph: WeightedGraph) -> WalkState:
    """Advance one step; returns a new state and advances the shared generator."""
    nbrs = graph.neighbors[state.position]
    if not nbrs:
        raise ValueError(f"vertex {state.position} is isolated")
    Z = state.Z
    weights = [float(graph.weight(state.position, j)) for j in nbrs]
    total = 0.0
    for w, j in zip(weights, nbrs):
        total += w * Z[j]
    target = state.rng.random() * total
    acc = 0.0
    nxt = nbrs[-1]
    for w, j in zip(weights, nbrs):
        acc += w * Z[j]
        if target < acc:
            nxt = j
            break
    Z = Z.copy()
    Z[nxt] += 1.0
    return WalkState(Z, nxt, state.n + 1, state.n0, state.rng)


def advance(state: WalkState, graph: WeightedGraph, steps: int, adjacency: _Adjacency | None = None) -> WalkState:
    """Advance ``steps`` steps in place with the compiled loop."""
    adj = adjacency or _csr(graph)
    if adj.ptr[state.position + 1] == adj.ptr[state.position]:
        raise ValueError(f"vertex {state.position} is isolated")
    remaining = int(steps)
    pos = state.position
    while remaining > 0:
        k = min(remaining, CHUNK)
        pos = _advance(state.Z, pos, state.rng.random(k), adj.ptr, adj.idx, adj.wts)
        remaining -= k
    state.position = int(pos)
    state.n += int(steps)
    return state


# -- runs --------------------------------------------------------------------------------


def geometric_schedule(total_steps: int, per_decade: int = SNAPSHOTS_PER_DECADE) -> np.ndarray:
    top = math.log10(max(total_steps, 1))
    grid = np.unique(np.rint(10.0 ** (np.arange(0, int(math.ceil(top * per_decade)) + 1) / per_decade)).astype(np.int64))
    return grid[grid <= total_steps]


def final_window(total_steps: int) -> int:
    """Length of the observation window: ``max(total/10, 10**4)``, at most half the run."""
    return max(1, min(max(total_steps // 10, 10_000), total_steps // 2))


@dataclass
class RunConfig:
    graph: WeightedGraph
    Z0: Sequence[float]
    start_vertex: int
    total_steps: int
    seed: int
    snapshot_schedule: Sequence[int] | None = None
    reference_q: SimplexPoint | None = None

    def __post_init__(self):
        if self.total_steps < 1:
            raise ValueError("total_steps must be at least 1")
        z0 = np.asarray(self.Z0, dtype=float)
        if z0.shape != (self.graph.vertex_count,):
            raise ValueError("Z0 needs one entry per vertex")
        if np.any(z0 <= 0):
            raise ValueError("Z0 must be strictly positive")
        if not 0 <= self.start_vertex < self.graph.vertex_count:
            raise ValueError("start vertex out of range")

    def schedule(self) -> np.ndarray:
        w = final_window(self.total_steps)
        pts = [geometric_schedule(self.total_steps), [0, self.total_steps - 2 * w, self.total_steps - w, self.total_steps]]
        if self.snapshot_schedule is not None:
            pts.append(np.asarray(self.snapshot_schedule, dtype=np.int64))
        out = np.unique(np.concatenate([np.asarray(p, dtype=np.int64) for p in pts]))
        return out[(out >= 0) & (out <= self.total_steps)]


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    stderr: float


def fit_exponents(ns: np.ndarray, Z: np.ndarray, min_n: float) -> dict[int, ExponentFit]:
    """Least-squares slope of ``log Z_n(i)`` against ``log n`` over snapshots with ``n >= min_n``."""
    keep = (ns >= max(min_n, 1))
    fits = {}
    if keep.sum() < 3:
        return fits
    x = np.log(ns[keep].astype(float))
    for i in range(Z.shape[1]):
        res = stats.linregress(x, np.log(Z[keep, i]))
        fits[i] = ExponentFit(float(res.slope), float(res.stderr))
    return fits


@dataclass(eq=False)
class LocalizationReport:
    seed: int
    total_steps: int
    n0: float
    start_vertex: int
    vertex_names: tuple[str, ...]
    ns: np.ndarray
    positions: np.ndarray
    Z: np.ndarray
    H_series: np.ndarray
    z: np.ndarray
    entropy_series: np.ndarray | None
    range_estimate: tuple[int, ...]
    previous_range: tuple[int, ...]
    exponent_fits: dict[int, ExponentFit]

    @property
    def vertex_count(self) -> int:
        return self.Z.shape[1]

    @property
    def v(self) -> np.ndarray:
        return self.Z / (self.ns[:, None] + self.n0)

    @property
    def final_Z(self) -> np.ndarray:
        return self.Z[-1]

    @property
    def final_v(self) -> SimplexPoint:
        return SimplexPoint.normalized(self.Z[-1])

    @property
    def localized(self) -> bool:
        """Range over the final window equals the one before and misses some vertex."""
        return self.range_estimate == self.previous_range and len(self.range_estimate) < self.vertex_count

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "total_steps": self.total_steps,
            "n0": self.n0,
            "start_vertex": self.start_vertex,
            "range_estimate": list(self.range_estimate),
            "previous_range": list(self.previous_range),
            "localized": self.localized,
            "final_v": self.final_v.to_json(),
            "final_Z": [float(c) for c in self.final_Z],
            "exponent_fits": {
                str(i): {"slope": f.slope, "stderr": f.stderr} for i, f in sorted(self.exponent_fits.items())
            },
        }

    def snapshot_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        header = ["n"] + [f"v_{name}" for name in self.vertex_names] + ["H"]
        if self.entropy_series is not None:
            header.append("V_q")
        out.writerow(header)
        v = self.v
        for k, n in enumerate(self.ns):
            row = [int(n)] + [format(float(c), ".17g") for c in v[k]] + [format(float(self.H_series[k]), ".17g")]
            if self.entropy_series is not None:
                row.append(format(float(self.entropy_series[k]), ".17g"))
            out.writerow(row)
        return buf.getvalue()

    def write_snapshot_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.snapshot_csv())


def _visited(Z: np.ndarray, ns: np.ndarray, lo: int, hi: int) -> tuple[int, ...]:
    a = int(np.searchsorted(ns, lo))
    b = int(np.searchsorted(ns, hi))
    return tuple(int(i) for i in np.flatnonzero(Z[b] > Z[a]))


def run(config: RunConfig) -> LocalizationReport:
    """Simulate one walk and summarize its localization behaviour."""
    graph = config.graph
    adj = _csr(graph)
    state = new_walk(config.Z0, config.start_vertex, config.seed)
    schedule = config.schedule()
    Zs = np.empty((schedule.size, graph.vertex_count))
    positions = np.empty(schedule.size, dtype=np.int64)
    for k, target in enumerate(schedule):
        advance(state, graph, int(target) - state.n, adj)
        Zs[k] = state.Z
        positions[k] = state.position

    n0 = state.n0
    v = Zs / (schedule[:, None] + n0)
    H = np.array([lyapunov_value(graph, row) for row in v])
    z = np.empty_like(v)
    for k in range(schedule.size):
        chain = build_chain(graph, v[k])
        z[k] = v[k] + chain.MQ[positions[k]] / (schedule[k] + n0)

    q = config.reference_q
    ent = None
    if q is not None:
        bd = outer_boundary(graph, q.support)
        ent = np.array([entropy(q, row, bd) for row in z])

    total = config.total_steps
    w = final_window(total)
    rng_final = _visited(Zs, schedule, total - w, total)
    rng_prev = _visited(Zs, schedule, total - 2 * w, total - w)
    fits = fit_exponents(schedule, Zs, total / 100)
    names = graph.names or tuple(str(i) for i in graph.vertices)
    return LocalizationReport(
        config.seed, total, n0, config.start_vertex, names, schedule, positions, Zs, H, z, ent,
        rng_final, rng_prev, fits,
    )


# -- exponents -----------------------------------------------------------------------------


def theoretical_exponent(graph: WeightedGraph, y, j: int) -> float:
    """Growth exponent ``N_j(y) / H(y)`` of a boundary vertex ``j`` of ``supp(y)``."""
    yv = _vec(y)
    S = y.support if isinstance(y, SimplexPoint) else tuple(np.flatnonzero(yv > 1e-10))
    if j not in outer_boundary(graph, S):
        raise ValueError(f"vertex {j} is not on the outer boundary of the support")
    return float(neighbor_mass(graph, yv)[j] / lyapunov_value(graph, yv))


def trapping_exponent(graph: WeightedGraph, trap: TrapReport, y, j: int) -> float:
    """Exponent predicted from the trap data: ``r_d sum_i a_ij y_i / a_S``."""
    if j not in trap.boundary:
        raise ValueError(f"vertex {j} is not on the trap boundary")
    yv = _vec(y)
    if trap.has_loops:
        r = 1.0
    else:
        d = trap.partition.d
        r = d / (d - 1)
    mass = sum(float(graph.weight(i, j)) * yv[i] for i in trap.S)
    return r * mass / float(trap.a_S)


# -- entropy drift ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DriftWindow:
    start: int
    end: int
    measured: float
    predicted: float


def entropy_drift_check(report: LocalizationReport, graph: WeightedGraph, q, window: int = 10_000) -> list[DriftWindow]:
    """Per-step entropy change over consecutive windows against the predicted drift.

    Uses the snapshots at multiples of ``window``; the prediction averages
    ``I_q(v(n)) / ((n + n0 + 1) H(v(n)))`` at the two window ends.
    """
    bd = outer_boundary(graph, q.support)
    ns = report.ns
    on_grid = {int(n): k for k, n in enumerate(ns) if n > 0 and n % window == 0}
    rows = []
    v = report.v
    for n, k in sorted(on_grid.items()):
        nxt = on_grid.get(n + window)
        if nxt is None:
            continue
        va, vb = report.z[k], report.z[nxt]
        measured = (entropy(q, vb, bd) - entropy(q, va, bd)) / window
        ia = entropy_rate(graph, q, v[k]) / ((n + report.n0 + 1) * report.H_series[k])
        ib = entropy_rate(graph, q, v[nxt]) / ((n + window + report.n0 + 1) * report.H_series[nxt])
        rows.append(DriftWindow(n, n + window, float(measured), float(0.5 * (ia + ib))))
    return rows


@dataclass(frozen=True)
class OneStepDrift:
    mean: float
    stderr: float
    expected: float
    predicted: float


def one_step_entropy_drift(
    graph: WeightedGraph, q, v, position: int, n: int, n0: float, draws: int, rng: np.random.Generator
) -> OneStepDrift:
    """Entropy increment of ``z`` over one step drawn from the frozen chain ``M(v)``.

    ``mean``/``stderr`` come from ``draws`` sampled steps, ``expected`` is the
    exact one-step expectation and ``predicted`` is ``I_q(v) / ((n + n0 + 1) H(v))``.
    """
    vv = _vec(v)
    bd = outer_boundary(graph, q.support)
    chain = build_chain(graph, vv)
    z = vv + chain.MQ[position] / (n + n0)
    base = entropy(q, z, bd)
    Z = vv * (n + n0)
    row = chain.M[position]
    targets = np.flatnonzero(row > 0)
    deltas = np.empty(targets.size)
    for k, j in enumerate(targets):
        Zj = Z.copy()
        Zj[j] += 1.0
        vj = Zj / (n + 1 + n0)
        zj = vj + build_chain(graph, vj).MQ[j] / (n + 1 + n0)
        deltas[k] = entropy(q, zj, bd) - base
    probs = row[targets] / row[targets].sum()
    picks = rng.choice(targets.size, size=draws, p=probs)
    sample = deltas[picks]
    return OneStepDrift(
        float(sample.mean()),
        float(sample.std(ddof=1) / math.sqrt(draws)),
        float(probs @ deltas),
        entropy_rate(graph, q, vv) / ((n + n0 + 1) * lyapunov_value(graph, vv)),
    )


# -- scenario with a loop at the origin ---------------------------------------------------------


@dataclass(eq=False)
class ZloopReport:
    report: LocalizationReport
    K: int
    localized: bool
    origin_fraction: float
    alpha: float
    neighbor_ratios: tuple[float, float]
    outer_ratios: tuple[float, float]

    def to_json(self) -> dict:
        doc = self.report.to_json()
        doc.update(
            {
                "K": self.K,
                "localized_on_five": self.localized,
                "origin_fraction": self.origin_fraction,
                "alpha": self.alpha,
                "neighbor_ratios": list(self.neighbor_ratios),
                "outer_ratios": list(self.outer_ratios),
            }
        )
        return doc


def zloop_statistics(report: LocalizationReport, K: int) -> ZloopReport:
    """Occupation ratios of the looped origin, its neighbours and the outer pair at the last step.

    A run counts as localized when both observation windows stay inside
    ``{-2..2}`` and the final one visits the origin.

    Returns ``Z(0)/n``, ``(Z(-1), Z(1)) log n / n`` and
    ``(Z(-2) / (log n)^alpha, Z(2) / (log n)^(1-alpha))`` with
    ``alpha = Z(-1) / (Z(-1) + Z(1))``.
    """
    n = report.total_steps
    Z = report.final_Z
    c = K  # vertex id of the origin
    five = set(range(c - 2, c + 3))
    # the outer pair grows only like a power of log n, so a finite window
    # rarely sees it; require instead that the walk stays inside the five
    # vertices over both windows and keeps visiting the origin
    localized = (
        set(report.range_estimate) <= five
        and set(report.previous_range) <= five
        and c in report.range_estimate
    )
    ln = math.log(n)
    alpha = Z[c - 1] / (Z[c - 1] + Z[c + 1])
    return ZloopReport(
        report,
        K,
        localized,
        float(Z[c] / n),
        float(alpha),
        (float(Z[c - 1] * ln / n), float(Z[c + 1] * ln / n)),
        (float(Z[c - 2] / ln**alpha), float(Z[c + 2] / ln ** (1 - alpha))),
    )


def scenario_zloop(steps: int, seed: int, K: int = 5) -> ZloopReport:
    """Walk on ``{-K..K}`` with a loop at the origin, unit counts, started at the origin."""
    from .scenarios import z_truncation

    if K < 4:
        raise ValueError("truncation depth K must be at least 4")
    graph = z_truncation(K, loop_at_origin=True)
    config = RunConfig(graph, np.ones(graph.vertex_count), K, steps, seed)
    return zloop_statistics(run(config), K)
