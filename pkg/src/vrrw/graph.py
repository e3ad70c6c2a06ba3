"""Finite weighted graphs with optional loops.

A graph is stored as a map from unordered vertex pairs ``(i, j)`` with
``i <= j`` to positive weights.  A pair ``(i, i)`` is a loop.  Weights may be
``int``, ``fractions.Fraction`` or ``float``; exact types are preserved so the
combinatorial predicates in :mod:`vrrw.structure` can compare them exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Rational
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

Weight = int | Fraction | float

#: relative tolerance used when comparing weights that are not both rational
WEIGHT_RTOL = 1e-9


def weights_equal(a: Weight, b: Weight) -> bool:
    """Exact equality for rationals, relative tolerance otherwise."""
    if isinstance(a, Rational) and isinstance(b, Rational):
        return a == b
    return math.isclose(float(a), float(b), rel_tol=WEIGHT_RTOL, abs_tol=0.0)


def parse_weight(raw) -> Weight:
    """Parse a weight from its JSON form (number or ``"p/q"`` string)."""
    if isinstance(raw, bool):
        raise TypeError(f"invalid weight {raw!r}")
    if isinstance(raw, (int, float, Fraction)):
        return raw
    if isinstance(raw, str):
        text = raw.strip()
        if "/" in text:
            return Fraction(text)
        try:
            return int(text)
        except ValueError:
            return float(text)
    raise TypeError(f"invalid weight {raw!r}")


def format_weight(w: Weight):
    if isinstance(w, Fraction):
        if w.denominator == 1:
            return int(w.numerator)
        return f"{w.numerator}/{w.denominator}"
    return w


def _key(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i <= j else (j, i)


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph on vertices ``0..vertex_count-1`` with edge weights.

    Parameters
    ----------
    vertex_count : int
    weights : mapping
        ``{(i, j): a_ij}`` with ``i <= j``; loops are ``(i, i)``.
    names : sequence of str, optional
        Display labels, one per vertex.
    """

    vertex_count: int
    weights: Mapping[tuple[int, int], Weight]
    names: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        normalized = {}
        for (i, j), w in dict(self.weights).items():
            normalized[_key(int(i), int(j))] = w
        object.__setattr__(self, "weights", dict(sorted(normalized.items())))
        if self.names is not None:
            object.__setattr__(self, "names", tuple(str(s) for s in self.names))

    @classmethod
    def from_edges(cls, vertex_count: int, edges: Iterable[Sequence], names=None) -> "WeightedGraph":
        """Build from ``(i, j)`` or ``(i, j, a_ij)`` tuples; missing weights are 1."""
        weights = {}
        for edge in edges:
            if len(edge) == 2:
                i, j = edge
                w = 1
            else:
                i, j, w = edge
            key = _key(int(i), int(j))
            if key in weights:
                raise ValueError(f"duplicate edge {key}")
            weights[key] = parse_weight(w)
        return cls(vertex_count, weights, names)

    # -- adjacency -----------------------------------------------------------

    @property
    def vertices(self) -> range:
        return range(self.vertex_count)

    def adjacent(self, i: int, j: int) -> bool:
        return _key(i, j) in self.weights

    def weight(self, i: int, j: int) -> Weight:
        """Exact weight ``a_ij``, 0 when ``i`` and ``j`` are not adjacent."""
        return self.weights.get(_key(i, j), 0)

    def is_loop(self, i: int) -> bool:
        return (i, i) in self.weights

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        """Sorted neighbour lists; a loop vertex is its own neighbour."""
        nbrs = [set() for _ in range(self.vertex_count)]
        for i, j in self.weights:
            nbrs[i].add(j)
            nbrs[j].add(i)
        return tuple(tuple(sorted(s)) for s in nbrs)

    @cached_property
    def matrix(self) -> np.ndarray:
        """Dense float matrix ``a`` (symmetric, diagonal holds loop weights)."""
        a = np.zeros((self.vertex_count, self.vertex_count))
        for (i, j), w in self.weights.items():
            a[i, j] = a[j, i] = float(w)
        a.setflags(write=False)
        return a

    @cached_property
    def has_loops(self) -> bool:
        return any(i == j for i, j in self.weights)

    def label(self, i: int) -> str:
        return self.names[i] if self.names else str(i)

    def index(self, name: str) -> int:
        """Vertex id for a display label."""
        if self.names is None:
            return int(name)
        return self.names.index(name)

    def ids(self, labels: Iterable) -> tuple[int, ...]:
        """Sorted vertex ids for a collection of labels or ids."""
        out = set()
        for v in labels:
            out.add(v if isinstance(v, (int, np.integer)) else self.index(v))
        return tuple(sorted(int(v) for v in out))

    def subgraph(self, vertices: Iterable[int]) -> "WeightedGraph":
        """Induced subgraph, relabelled ``0..k-1`` in ascending id order."""
        keep = sorted(set(vertices))
        pos = {v: k for k, v in enumerate(keep)}
        weights = {
            (pos[i], pos[j]): w for (i, j), w in self.weights.items() if i in pos and j in pos
        }
        names = tuple(self.label(v) for v in keep) if self.names else None
        return WeightedGraph(len(keep), weights, names)

    # -- serialization -------------------------------------------------------

    def to_json_dict(self) -> dict:
        edges = [[i, j, format_weight(w)] for (i, j), w in self.weights.items()]
        return {"vertices": self.vertex_count, "edges": edges}

    @classmethod
    def from_json_dict(cls, doc: Mapping, names=None) -> "WeightedGraph":
        n = doc["vertices"]
        if not isinstance(n, int) or isinstance(n, bool):
            raise ValueError("'vertices' must be an integer")
        edges = []
        for item in doc["edges"]:
            if len(item) != 3:
                raise ValueError(f"edge entry must be [i, j, a_ij], got {item!r}")
            i, j, w = item
            if i > j:
                raise ValueError(f"edge [{i}, {j}] must be written with i <= j")
            edges.append((i, j, w))
        return cls.from_edges(n, edges, names=names or doc.get("names"))


def validate(graph: WeightedGraph) -> list[str]:
    """Return a list of violated standing assumptions (empty when valid)."""
    problems = []
    n = graph.vertex_count
    if n < 1:
        problems.append("vertex_count must be at least 1")
        return problems
    for (i, j), w in graph.weights.items():
        if not (0 <= i < n and 0 <= j < n):
            problems.append(f"edge ({i}, {j}) has a vertex out of range")
            continue
        try:
            ok = float(w) > 0 and math.isfinite(float(w))
        except (TypeError, ValueError):
            ok = False
        if not ok:
            problems.append(f"nonpositive weight {w!r} on edge ({i}, {j})")
    if problems:
        return problems
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in graph.neighbors[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    if len(seen) != n:
        problems.append(f"disconnected: {n - len(seen)} vertices unreachable from 0")
    if graph.names is not None and len(graph.names) != n:
        problems.append("names must have one entry per vertex")
    return problems


def require_valid(graph: WeightedGraph) -> WeightedGraph:
    problems = validate(graph)
    if problems:
        raise ValueError("invalid graph: " + "; ".join(problems))
    return graph


def vertex_set(graph: WeightedGraph, S: Iterable[int]) -> tuple[int, ...]:
    """Sorted tuple of distinct ids, checked against the graph."""
    ids = tuple(sorted({int(v) for v in S}))
    for v in ids:
        if not 0 <= v < graph.vertex_count:
            raise IndexError(f"vertex {v} out of range for {graph.vertex_count} vertices")
    return ids


def outer_boundary(graph: WeightedGraph, S: Iterable[int]) -> tuple[int, ...]:
    """Vertices outside ``S`` adjacent to some vertex of ``S``."""
    inside = set(vertex_set(graph, S))
    out = set()
    for v in inside:
        out.update(graph.neighbors[v])
    return tuple(sorted(out - inside))


def load_graph(path: str | Path, labels: str | Path | None = None) -> WeightedGraph:
    """Read the JSON graph format, optionally with a separate labels file."""
    doc = json.loads(Path(path).read_text())
    names = None
    if labels is not None:
        names = json.loads(Path(labels).read_text())["names"]
    return WeightedGraph.from_json_dict(doc, names=names)


def save_graph(graph: WeightedGraph, path: str | Path, labels: str | Path | None = None) -> None:
    Path(path).write_text(json.dumps(graph.to_json_dict()) + "\n")
    if labels is not None and graph.names is not None:
        Path(labels).write_text(json.dumps({"names": list(graph.names)}) + "\n")
