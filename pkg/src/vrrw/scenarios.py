"""Built-in graphs and initial conditions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .graph import WeightedGraph
from .replicator import SimplexPoint

EXAMPLE1_NAMES = ("A", "B", "C", "D", "E", "F")


def example1(weights=None) -> WeightedGraph:
    """A~B~C~D~A with C~E~D and E~F; unit weights unless a mapping is given."""
    A, B, C, D, E, F = range(6)
    edges = [(A, B), (B, C), (C, D), (A, D), (C, E), (D, E), (E, F)]
    weights = weights or {}
    return WeightedGraph(6, {e: weights.get(e, 1) for e in edges}, EXAMPLE1_NAMES)


def example1_equilibrium() -> SimplexPoint:
    f = Fraction
    return SimplexPoint([f(3, 8), f(3, 8), f(1, 8), f(1, 8), 0, 0])


def example1_initial_counts(n0: float = 1000.0, boundary_mass: float = 1e-2) -> np.ndarray:
    """Counts proportional to ``(3, 3, 1, 1, m, m)`` scaled to total ``n0``."""
    raw = np.array([3, 3, 1, 1, boundary_mass, boundary_mass], dtype=float)
    return raw * (n0 / raw.sum())


def path(n: int, weights=None) -> WeightedGraph:
    weights = weights or [1] * (n - 1)
    return WeightedGraph(n, {(i, i + 1): weights[i] for i in range(n - 1)})


def z_truncation(K: int, loop_at_origin: bool = False, weight_fn=None) -> WeightedGraph:
    """Path on ``{-K..K}``; vertex ``k`` has id ``k + K``.

    ``weight_fn(m)`` gives the weight of the edge ``{m, m+1}`` (default 1).
    """
    if K < 1:
        raise ValueError("K must be positive")
    weights = {}
    for m in range(-K, K):
        weights[(m + K, m + K + 1)] = weight_fn(m) if weight_fn else 1
    if loop_at_origin:
        weights[(K, K)] = 1
    return WeightedGraph(2 * K + 1, weights, tuple(str(m) for m in range(-K, K + 1)))


def triangle(a, b, c) -> WeightedGraph:
    """Triangle with ``a_01 = a``, ``a_12 = b``, ``a_02 = c``."""
    return WeightedGraph(3, {(0, 1): a, (1, 2): b, (0, 2): c})


def star(leaves: int) -> WeightedGraph:
    """Star with centre 0."""
    return WeightedGraph(leaves + 1, {(0, i): 1 for i in range(1, leaves + 1)})


def cycle(n: int) -> WeightedGraph:
    return WeightedGraph(n, {(i, (i + 1) % n): 1 for i in range(n)})


def complete(n: int, loops: bool = False) -> WeightedGraph:
    weights = {e: 1 for e in combinations(range(n), 2)}
    if loops:
        weights.update({(i, i): 1 for i in range(n)})
    return WeightedGraph(n, weights)


def complete_bipartite(m: int, k: int) -> WeightedGraph:
    return WeightedGraph(m + k, {(i, m + j): 1 for i in range(m) for j in range(k)})


def clique_of_loops(n: int, extra=()) -> WeightedGraph:
    """Complete graph with a loop at every vertex, plus extra ``(i, j)`` edges to added vertices."""
    extra = list(extra)
    size = max([n] + [max(e) + 1 for e in extra])
    g = complete(n, loops=True)
    weights = dict(g.weights)
    weights.update({e: 1 for e in extra})
    return WeightedGraph(size, weights)


# -- ladder with drifting weights ----------------------------------------------------------


@dataclass(frozen=True)
class LadderParameters:
    p: float = 1.0
    q: float = 0.6
    eps: float = 0.01
    eta: float = 0.1
    mu: float = 0.5
    depth: int = 8

    def violations(self) -> list[str]:
        out = []
        p, q, eps, eta, mu = self.p, self.q, self.eps, self.eta, self.mu
        if min(p, q, eps, eta) <= 0:
            out.append("p, q, eps, eta must be positive")
            return out
        if not 0 < mu < 1:
            out.append("mu must lie in (0, 1)")
            return out
        if self.depth < 2:
            out.append("depth must be at least 2")
        if eps / (1 - mu) >= 1:
            out.append("eps / (1 - mu) must be below 1")
        if not eta * q * math.exp(eta / (1 - mu)) < p * (1 - eps / (1 - mu)):
            out.append("need eta q exp(eta / (1 - mu)) < p (1 - eps / (1 - mu))")
        if not p < 2 * q:
            out.append("need p < 2q")
        elif not eta > eps * p / (2 * q - p):
            out.append("need eta > eps p / (2q - p)")
        return out

    def sequences(self, length: int) -> tuple[np.ndarray, np.ndarray]:
        """``p_n = p prod_{k<n} (1 - mu^k eps)`` and ``q_n = q prod_{k<n} (1 + mu^k eta)``."""
        k = np.arange(length - 1)
        pn = self.p * np.concatenate([[1.0], np.cumprod(1 - self.mu**k * self.eps)])
        qn = self.q * np.concatenate([[1.0], np.cumprod(1 + self.mu**k * self.eta)])
        return pn, qn


def ladder_lower(i: int) -> int:
    return 2 * i


def ladder_upper(i: int) -> int:
    return 2 * i + 1


def ladder_index(vertex: int) -> int:
    return vertex // 2


def ladder_ex2(params: LadderParameters) -> WeightedGraph:
    """Ladder on indices ``0..depth`` with lower and upper rows.

    Lower ``i`` has id ``2i``, upper ``i`` has id ``2i + 1``.  Edges are the
    rows, the rungs and the diagonals upper ``i`` -- lower ``i+1``; the weights
    alternate between the decreasing sequence ``p_n`` and the increasing
    sequence ``q_n`` with the parity of the index.
    """
    problems = params.violations()
    if problems:
        raise ValueError("invalid ladder parameters: " + "; ".join(problems))
    D = params.depth
    pn, qn = params.sequences(D + 2)
    lo, up = ladder_lower, ladder_upper
    w = {}
    for i in range(D + 1):
        even = i % 2 == 0
        w[(lo(i), up(i))] = qn[i] if even else pn[i]
        if i == D:
            continue
        w[(lo(i), lo(i + 1))] = pn[i] if even else qn[i]
        w[(up(i), up(i + 1))] = qn[i + 1] if even else pn[i + 1]
        w[(up(i), lo(i + 1))] = qn[i]
    names = []
    for i in range(D + 1):
        names += [f"{i}_lo", f"{i}_up"]
    return WeightedGraph(2 * (D + 1), {k: float(v) for k, v in w.items()}, tuple(names))


SCENARIOS = {
    "example1": example1,
    "k2": lambda: path(2),
    "triangle": lambda: triangle(1, 1, 1),
    "z5": lambda: z_truncation(5),
    "zloop": lambda: z_truncation(5, loop_at_origin=True),
    "star3": lambda: star(3),
    "c4": lambda: cycle(4),
    "c5": lambda: cycle(5),
    "k22": lambda: complete_bipartite(2, 2),
}
