"""Complete multipartite structure and strongly trapping subsets.

The parts of a complete d-partite graph (loops allowed) are the classes of
the relation ``i R j  <=>  i !~ j or i == j``.  Everything here works on exact
weights from :class:`~vrrw.graph.WeightedGraph`; see
:func:`~vrrw.graph.weights_equal` for the comparison rule.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable

from .graph import WeightedGraph, outer_boundary, vertex_set, weights_equal

#: exhaustive biclique enumeration refuses graphs larger than this
MAX_ENUMERATION_VERTICES = 32


class NotMultipartite(ValueError):
    """Raised when a vertex set is not complete multipartite with loop singletons.

    ``witness`` is a triple ``(i, j, k)`` with ``i R j``, ``j R k`` and
    ``i ~ k`` when transitivity fails, or a pair ``(loop, other)`` when a
    loop vertex shares its class.
    """

    def __init__(self, message: str, witness: tuple[int, ...]):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class PartitionDecomposition:
    parts: tuple[tuple[int, ...], ...]
    loop_flags: tuple[bool, ...]

    @property
    def d(self) -> int:
        return len(self.parts)

    def part_of(self, v: int) -> int:
        for p, part in enumerate(self.parts):
            if v in part:
                return p
        raise KeyError(v)

    def to_json(self) -> dict:
        return {"parts": [list(p) for p in self.parts], "loop_flags": list(self.loop_flags)}


def _related(graph: WeightedGraph, i: int, j: int) -> bool:
    return i == j or not graph.adjacent(i, j)


def multipartite_decompose(graph: WeightedGraph, S: Iterable[int]) -> PartitionDecomposition:
    """Split ``S`` into the parts of a complete multipartite graph.

    Raises
    ------
    NotMultipartite
        If non-adjacency is not transitive on ``S`` or a loop vertex is not
        alone in its part.
    """
    S = vertex_set(graph, S)
    if not S:
        raise ValueError("S must be nonempty")
    parts: list[list[int]] = []
    for v in S:
        for part in parts:
            if _related(graph, part[0], v):
                part.append(v)
                break
        else:
            parts.append([v])
    # greedy classes are exact iff R is transitive; otherwise find a witness
    for part in parts:
        for i, k in itertools.combinations(part, 2):
            if graph.adjacent(i, k):
                j = part[0]
                raise NotMultipartite(
                    f"non-adjacency is not transitive on S: {i} R {j} R {k} but {i} ~ {k}",
                    (i, j, k),
                )
    for p, q in itertools.combinations(range(len(parts)), 2):
        for i in parts[p]:
            for k in parts[q]:
                if not graph.adjacent(i, k):
                    # k was rejected by the representative of part p, so k ~ rep
                    raise NotMultipartite(
                        f"non-adjacency is not transitive on S: {k} R {i} R {parts[p][0]} "
                        f"but {k} ~ {parts[p][0]}",
                        (k, i, parts[p][0]),
                    )
    loop_flags = []
    for part in parts:
        loops = [v for v in part if graph.is_loop(v)]
        if loops and len(part) > 1:
            other = next(v for v in part if v != loops[0])
            raise NotMultipartite(f"loop vertex {loops[0]} shares its part with {other}", (loops[0], other))
        loop_flags.append(bool(loops))
    return PartitionDecomposition(tuple(tuple(p) for p in parts), tuple(loop_flags))


def satisfies_partition_condition(graph: WeightedGraph, S: Iterable[int]) -> bool:
    """Complete multipartite structure, loop singletons, and blockwise constant weights.

    The weight condition is checked literally over every ordered pair of
    parts (a part paired with itself included), with absent edges counting
    as weight 0.
    """
    try:
        dec = multipartite_decompose(graph, S)
    except NotMultipartite:
        return False
    for Vi in dec.parts:
        for Vj in dec.parts:
            ref = graph.weight(Vi[0], Vj[0])
            for alpha in Vi:
                for beta in Vj:
                    if not weights_equal(graph.weight(alpha, beta), ref):
                        return False
    return True


def satisfies_pairwise_condition(graph: WeightedGraph, S: Iterable[int]) -> bool:
    """For non-adjacent ``j, k`` in ``S`` (``j == k`` included), rows ``a_.j`` and ``a_.k`` agree on ``S``."""
    S = vertex_set(graph, S)
    if not S:
        raise ValueError("S must be nonempty")
    for j in S:
        for k in S:
            if graph.adjacent(j, k):
                continue
            for i in S:
                if not weights_equal(graph.weight(i, j), graph.weight(i, k)):
                    return False
    return True


def is_clique(graph: WeightedGraph, S: Iterable[int], loops: bool = False) -> bool:
    S = tuple(S)
    if loops and not all(graph.is_loop(v) for v in S):
        return False
    return all(graph.adjacent(i, j) for i, j in itertools.combinations(S, 2))


# -- strongly trapping subsets ---------------------------------------------------

STRONGLY_TRAPPING = "strongly_trapping"
FAILS_A = "fails_a"
FAILS_B = "fails_b"
FAILS_C = "fails_c"


@dataclass(frozen=True)
class TrapReport:
    S: tuple[int, ...]
    boundary: tuple[int, ...]
    a_S: object | None
    partition: PartitionDecomposition | None
    verdict: str

    @property
    def T(self) -> tuple[int, ...]:
        return tuple(sorted(self.S + self.boundary))

    @property
    def is_trapping(self) -> bool:
        return self.verdict == STRONGLY_TRAPPING

    @property
    def has_loops(self) -> bool:
        return bool(self.partition and any(self.partition.loop_flags))

    def to_json(self) -> dict:
        from .graph import format_weight

        return {
            "S": list(self.S),
            "boundary": list(self.boundary),
            "T": list(self.T),
            "a_S": None if self.a_S is None else format_weight(self.a_S),
            "partition": None if self.partition is None else self.partition.to_json(),
            "verdict": self.verdict,
        }


def is_strongly_trapping(graph: WeightedGraph, S: Iterable[int]) -> TrapReport:
    """Check whether ``S`` together with its outer boundary is strongly trapping.

    The verdict names the first failing clause: ``fails_a`` (weights on
    ``S``-edges not constant, or ``S`` has no edge), ``fails_b`` (a boundary
    edge heavier than ``a_S``) or ``fails_c`` (neither the multipartite
    separation clause nor the clique-of-loops clause holds).
    """
    S = vertex_set(graph, S)
    if not S:
        raise ValueError("S must be nonempty")
    boundary = outer_boundary(graph, S)

    inner = [graph.weight(i, j) for i, j in itertools.combinations_with_replacement(S, 2) if graph.adjacent(i, j)]
    if not inner or not all(weights_equal(w, inner[0]) for w in inner):
        return TrapReport(S, boundary, None, None, FAILS_A)
    a_S = inner[0]

    for i in S:
        for j in boundary:
            w = graph.weight(i, j)
            if w and float(w) > float(a_S) and not weights_equal(w, a_S):
                return TrapReport(S, boundary, a_S, None, FAILS_B)

    try:
        dec = multipartite_decompose(graph, S)
    except NotMultipartite:
        dec = None

    if dec is not None and dec.d >= 2 and not any(dec.loop_flags):
        # every boundary vertex avoids some whole part plus one vertex outside it
        ok = True
        for j in boundary:
            found = False
            for p, Vp in enumerate(dec.parts):
                if any(graph.adjacent(j, v) for v in Vp):
                    continue
                if any(not graph.adjacent(j, i) for i in S if i not in Vp):
                    found = True
                    break
            if not found:
                ok = False
                break
        if ok:
            return TrapReport(S, boundary, a_S, dec, STRONGLY_TRAPPING)

    if is_clique(graph, S, loops=True):
        if all(not all(graph.adjacent(j, i) for i in S) for j in boundary):
            dec = PartitionDecomposition(tuple((v,) for v in S), tuple(True for _ in S))
            return TrapReport(S, boundary, a_S, dec, STRONGLY_TRAPPING)

    return TrapReport(S, boundary, a_S, dec, FAILS_C)


def find_trapping_volkov(graph: WeightedGraph, seed_edge: tuple[int, int]) -> TrapReport | None:
    """Grow a complete multipartite set from an edge until no boundary vertex extends it.

    Boundary vertices are scanned in ascending id order.  A vertex adjacent
    to every part restarts the search from a clique through it (one
    neighbour per part, the smallest id); a vertex missing exactly the
    parts it must miss joins one.  Returns the trap when the final set
    passes :func:`is_strongly_trapping`, else ``None``.
    """
    i, j = seed_edge
    if i == j or not graph.adjacent(i, j):
        raise ValueError(f"seed {seed_edge} is not an edge between distinct vertices")
    parts: list[list[int]] = [[min(i, j)], [max(i, j)]]
    # (d, |S|) increases lexicographically at each growth step
    budget = graph.vertex_count ** 2
    growth = 0
    changed = True
    while changed:
        changed = False
        members = {v for part in parts for v in part}
        for x in outer_boundary(graph, members):
            touches = [any(graph.adjacent(x, v) for v in part) for part in parts]
            if all(touches):
                picks = [min(v for v in part if graph.adjacent(x, v)) for part in parts]
                parts = [[v] for v in sorted(picks + [x])]
                changed = True
            else:
                for p, part in enumerate(parts):
                    if touches[p]:
                        continue
                    rest = [v for q, other in enumerate(parts) if q != p for v in other]
                    if all(graph.adjacent(x, v) for v in rest):
                        part.append(x)
                        part.sort()
                        changed = True
                        break
            if changed:
                growth += 1
                if growth > budget:
                    return None
                break
    S = sorted(v for part in parts for v in part)
    report = is_strongly_trapping(graph, S)
    return report if report.is_trapping else None


# -- two-partite criterion on triangle-free graphs --------------------------------


def _has_triangle(graph: WeightedGraph) -> bool:
    nbrs = [set(n) - {v} for v, n in enumerate(graph.neighbors)]
    for u in graph.vertices:
        for v in nbrs[u]:
            if v > u and nbrs[u] & nbrs[v]:
                return True
    return False


def constant_weight_bicliques(graph: WeightedGraph, edge: tuple[int, int]) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Inclusion-maximal complete bipartite vertex sets through ``edge`` with all inner weights ``a_e``.

    Returned as ``(side_of_i, side_of_j)`` pairs.  Exhaustive over subsets of
    the eligible neighbours of ``j``.
    """
    i, j = edge
    a_e = graph.weight(i, j)
    if not a_e or i == j:
        raise ValueError(f"{edge} is not an edge between distinct vertices")
    if graph.vertex_count > MAX_ENUMERATION_VERTICES:
        raise ValueError(
            f"exhaustive biclique enumeration is limited to {MAX_ENUMERATION_VERTICES} vertices"
        )

    def common(side):
        out = None
        for u in side:
            ok = {w for w in graph.neighbors[u] if w != u and weights_equal(graph.weight(u, w), a_e)}
            out = ok if out is None else out & ok
        return out

    candidates = sorted(common([j]) - {i})
    concepts = set()
    for r in range(len(candidates) + 1):
        for extra in itertools.combinations(candidates, r):
            side_i = {i, *extra}
            side_j = common(side_i)
            if j not in side_j:
                continue
            closed_i = common(side_j)
            concepts.add((tuple(sorted(closed_i)), tuple(sorted(side_j))))
    return sorted(concepts)


def check_bipartite_criterion(graph: WeightedGraph, edge: tuple[int, int]) -> bool:
    """Whether some constant-weight maximal biclique through ``edge`` has boundary weights at most ``a_e``."""
    if graph.has_loops:
        raise ValueError("graph contains a loop")
    if _has_triangle(graph):
        raise ValueError("graph contains a triangle")
    a_e = float(graph.weight(*edge))
    best = None
    for side_i, side_j in constant_weight_bicliques(graph, edge):
        S = side_i + side_j
        bd = outer_boundary(graph, S)
        heaviest = max((float(graph.weight(k, l)) for k in S for l in bd if graph.adjacent(k, l)), default=0.0)
        best = heaviest if best is None else min(best, heaviest)
    return best is not None and (best <= a_e or weights_equal(best, a_e))
