"""The Markov chain obtained by freezing the occupation density.

``M(v)(i, j) = a_ij v_j / sum_k a_ik v_k`` is reversible with respect to
``pi(v)``.  ``Q(v)`` is the solution of the Poisson equation
``(I - M) Q = I - Pi`` normalized by ``pi Q = 0``; it gives the corrected
occupation vector ``z(n) = v(n) + (M Q)[X_n] / (n + n0)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np

from .graph import WeightedGraph
from .replicator import _vec, invariant_measure, lyapunov_value, replicator_field


@dataclass(frozen=True, eq=False)
class ChainOperators:
    M: np.ndarray
    pi: np.ndarray
    Q: np.ndarray

    @property
    def size(self) -> int:
        return self.pi.size

    @cached_property
    def Pi(self) -> np.ndarray:
        """Rank-one projector ``f -> (pi . f) 1``."""
        return np.outer(np.ones(self.size), self.pi)

    @cached_property
    def MQ(self) -> np.ndarray:
        return self.M @ self.Q

    @cached_property
    def gap(self) -> float:
        return spectral_gap(self)

    def poisson_residual(self) -> float:
        eye = np.eye(self.size)
        return float(np.max(np.abs((eye - self.M) @ self.Q - (eye - self.Pi))))

    def reversibility_residual(self) -> float:
        flow = self.pi[:, None] * self.M
        return float(np.max(np.abs(flow - flow.T)))


def transition_matrix(graph: WeightedGraph, v) -> np.ndarray:
    x = _vec(v)
    w = graph.matrix * x[None, :]
    rows = w.sum(axis=1)
    if np.any(rows <= 0):
        bad = int(np.flatnonzero(rows <= 0)[0])
        raise ValueError(f"vertex {bad} has no neighbour with positive mass")
    return w / rows[:, None]


def build_chain(graph: WeightedGraph, v) -> ChainOperators:
    """Transition matrix, invariant measure and Poisson solution at ``v``."""
    x = _vec(v)
    if not lyapunov_value(graph, x) > 0:
        raise ValueError("H(v) must be positive")
    M = transition_matrix(graph, x)
    pi = invariant_measure(graph, x).values
    n = pi.size
    eye = np.eye(n)
    Pi = np.outer(np.ones(n), pi)
    # (I - M + Pi) Q = I - Pi has the unique solution with pi Q = 0
    Q = np.linalg.solve(eye - M + Pi, eye - Pi)
    return ChainOperators(M, pi, Q)


def spectral_gap(chain: ChainOperators) -> float:
    """Smallest nonzero eigenvalue of ``I - M`` on the support of ``pi``.

    Computed on the symmetrization ``D^1/2 (I - M) D^-1/2``, ``D = diag(pi)``,
    which is symmetric by reversibility.
    """
    live = np.flatnonzero(chain.pi > 0)
    p = chain.pi[live]
    L = np.eye(live.size) - chain.M[np.ix_(live, live)]
    r = np.sqrt(p)
    sym = r[:, None] * L / r[None, :]
    sym = 0.5 * (sym + sym.T)
    ev = np.linalg.eigvalsh(sym)
    return float(ev[1]) if ev.size > 1 else float("inf")


def dirichlet_form(chain: ChainOperators, f) -> float:
    f = np.asarray(f, dtype=float)
    return float(f @ (chain.pi * ((np.eye(chain.size) - chain.M) @ f)))


def variance(chain: ChainOperators, f) -> float:
    f = np.asarray(f, dtype=float)
    m = chain.pi @ f
    return float(chain.pi @ (f - m) ** 2)


def in_region(v, S: Iterable[int], alpha: float) -> bool:
    """Whether ``v_j >= alpha`` for every ``j`` in ``S``."""
    x = _vec(v)
    return bool(all(x[j] >= alpha for j in S))


def z_corrector(graph: WeightedGraph, v, current_vertex: int, n: int, n0: float, chain: ChainOperators | None = None) -> np.ndarray:
    """Corrected occupation vector ``v + (M Q)[current_vertex] / (n + n0)``."""
    chain = chain or build_chain(graph, v)
    return _vec(v) + chain.MQ[current_vertex] / (n + n0)


@dataclass(frozen=True, eq=False)
class DriftDecomposition:
    deterministic_drift: np.ndarray
    residual: np.ndarray


def drift_residual(graph: WeightedGraph, v, z_next, z, n: int, n0: float) -> DriftDecomposition:
    """Split ``z(n+1) - z(n)`` into ``F(z) / ((n + n0 + 1) H(v))`` and the rest."""
    drift = replicator_field(graph, _vec(z)) / ((n + n0 + 1) * lyapunov_value(graph, v))
    return DriftDecomposition(drift, np.asarray(z_next) - np.asarray(z) - drift)


def write_diagnostics(path: str | Path, rows: Iterable[tuple[int, np.ndarray, np.ndarray, np.ndarray, np.ndarray]]) -> None:
    """CSV with one line per ``(n, vertex)``: ``v_i, z_i, drift_i, residual_i``."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["n", "vertex", "v_i", "z_i", "drift_i", "residual_i"])
        for n, v, z, drift, residual in rows:
            for i in range(len(v)):
                out.writerow([n, i] + [format(float(c[i]), ".17g") for c in (v, z, drift, residual)])
