"""Linear replicator dynamics on the simplex of a weighted graph.

For ``x`` on the simplex, ``N_i(x) = sum_j a_ij x_j`` is the neighbour mass,
``H(x) = sum_i x_i N_i(x)`` the Lyapunov function and
``F_i(x) = x_i (N_i(x) - H(x))`` the replicator field.  Equilibria are
classified through the spectrum of ``B = [a_ij - 2 H(x)]`` on the support
together with the boundary slacks ``N_i(x) - H(x)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .graph import WeightedGraph, outer_boundary, vertex_set
from .structure import NotMultipartite, PartitionDecomposition, is_clique, multipartite_decompose

SUPPORT_EPS = 1e-10
EQ_TOL = 1e-8
SUM_TOL = 1e-12

NOT_EQUILIBRIUM = "not_equilibrium"
UNSTABLE = "unstable"
STABLE = "stable"
STRICTLY_STABLE = "strictly_stable"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True, eq=False)
class SimplexPoint:
    """A probability vector over the vertices, with its support."""

    values: np.ndarray
    support_epsilon: float = SUPPORT_EPS

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("a simplex point is a nonempty 1-d vector")
        if not np.all(np.isfinite(v)):
            raise ValueError("simplex point has non-finite entries")
        if v.min() < 0:
            raise ValueError(f"negative coordinate {v.min():.3g}")
        if abs(v.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"coordinates sum to {v.sum()!r}, not 1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def normalized(cls, weights, support_epsilon: float = SUPPORT_EPS) -> "SimplexPoint":
        w = np.asarray(weights, dtype=float)
        return cls(w / w.sum(), support_epsilon)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.values > self.support_epsilon))

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def to_json(self) -> list[str]:
        return [_fmt(v) for v in self.values]

    @classmethod
    def from_json(cls, items) -> "SimplexPoint":
        return cls(np.array([float(s) for s in items]))


def _vec(x) -> np.ndarray:
    return x.values if isinstance(x, SimplexPoint) else np.asarray(x, dtype=float)


def _support(x, eps: float = SUPPORT_EPS) -> tuple[int, ...]:
    if isinstance(x, SimplexPoint):
        return x.support
    return tuple(int(i) for i in np.flatnonzero(_vec(x) > eps))


def neighbor_mass(graph: WeightedGraph, x) -> np.ndarray:
    """``N(x) = a x``; a loop contributes ``a_ii x_i`` once."""
    return graph.matrix @ _vec(x)


def lyapunov_value(graph: WeightedGraph, x) -> float:
    """``H(x) = sum_i x_i N_i(x)``."""
    v = _vec(x)
    return float(v @ (graph.matrix @ v))


def replicator_field(graph: WeightedGraph, x) -> np.ndarray:
    v = _vec(x)
    N = graph.matrix @ v
    return v * (N - v @ N)


def lyapunov_rate(graph: WeightedGraph, x) -> float:
    """``J(x) = 2 sum_i x_i (N_i - H)^2``, the time derivative of ``H`` along the flow."""
    v = _vec(x)
    N = graph.matrix @ v
    return float(2.0 * np.sum(v * (N - v @ N) ** 2))


def invariant_measure(graph: WeightedGraph, x) -> SimplexPoint:
    """``pi_i = x_i N_i(x) / H(x)``; requires ``H(x) > 0``."""
    v = _vec(x)
    N = graph.matrix @ v
    h = float(v @ N)
    if not h > 0:
        raise ValueError("invariant measure undefined when H(x) = 0")
    p = v * N / h
    return SimplexPoint(p / p.sum())


# -- Jacobian and stability --------------------------------------------------------


def jacobian(graph: WeightedGraph, x) -> np.ndarray:
    """Analytic Jacobian of ``F`` on the ambient space, any ``x``.

    ``dF_i/dx_j = delta_ij (N_i - H) + x_i (a_ij - 2 N_j)``.
    """
    v = _vec(x)
    a = graph.matrix
    N = a @ v
    h = v @ N
    return np.diag(N - h) + v[:, None] * (a - 2.0 * N[None, :])


def tangent_basis(n: int) -> np.ndarray:
    """Orthonormal basis (columns) of the zero-sum hyperplane."""
    if n == 1:
        return np.zeros((1, 0))
    q, _ = np.linalg.qr(np.column_stack([np.ones(n), np.eye(n)[:, : n - 1]]))
    return q[:, 1:]


@dataclass(frozen=True, eq=False)
class EquilibriumJacobian:
    DF: np.ndarray
    B: np.ndarray
    D: np.ndarray
    support: tuple[int, ...]
    off_support: dict[int, float]
    tangent_spectrum: np.ndarray


def jacobian_at_equilibrium(graph: WeightedGraph, x, tol: float = EQ_TOL) -> EquilibriumJacobian:
    """Block form of the Jacobian at an equilibrium and its spectrum on the tangent space.

    The spectrum of the full Jacobian is the rates ``N_i - H`` off the
    support together with the spectrum of ``D B``, which is computed on the
    symmetric similarity ``D^1/2 B D^1/2``.  One copy of ``-H`` (the
    eigenvalue transverse to the simplex) is removed.
    """
    v = _vec(x)
    S = _support(x)
    a = graph.matrix
    N = a @ v
    h = float(v @ N)
    gap = np.max(np.abs(N[list(S)] - h))
    if gap > tol:
        raise ValueError(f"not an equilibrium: max |N_i - H| on the support is {gap:.3g}")
    idx = np.array(S)
    B = a[np.ix_(idx, idx)] - 2.0 * h
    xs = v[idx]
    root = np.sqrt(xs)
    inner = np.linalg.eigvalsh(root[:, None] * B * root[None, :])
    drop = int(np.argmin(np.abs(inner + h)))
    inner = np.delete(inner, drop)
    off = {int(i): float(N[i] - h) for i in range(graph.vertex_count) if i not in set(S)}
    spectrum = np.sort(np.concatenate([inner, np.array(list(off.values()))]))
    return EquilibriumJacobian(jacobian(graph, v), B, np.diag(xs), S, off, spectrum)


@dataclass(frozen=True, eq=False)
class EquilibriumReport:
    point: SimplexPoint
    H: float
    N: np.ndarray
    boundary_slack: dict[int, float]
    B_spectrum: np.ndarray
    DF_spectrum: np.ndarray
    classification: str
    partition: PartitionDecomposition | None
    nullspace_dim: int
    spectra_agree: bool = True

    @property
    def support(self) -> tuple[int, ...]:
        return self.point.support

    @property
    def is_stable(self) -> bool:
        return self.classification in (STABLE, STRICTLY_STABLE)

    def to_json(self) -> dict:
        return {
            "point": self.point.to_json(),
            "support": list(self.support),
            "H": float(self.H),
            "N": [float(v) for v in self.N],
            "boundary_slack": {str(k): float(v) for k, v in self.boundary_slack.items()},
            "B_spectrum": [float(v) for v in self.B_spectrum],
            "DF_spectrum": [float(v) for v in self.DF_spectrum],
            "classification": self.classification,
            "partition": None if self.partition is None else self.partition.to_json(),
            "nullspace_dim": int(self.nullspace_dim),
            "spectra_agree": bool(self.spectra_agree),
        }


def classify_equilibrium(graph: WeightedGraph, x, tol: float = EQ_TOL) -> EquilibriumReport:
    """Classify ``x`` as not an equilibrium, unstable, stable, or strictly stable.

    Stability is decided on ``max(Sp(B) U {N_i - H : i in boundary}) <= tol``.
    The tangent spectrum of the Jacobian is computed separately and its sign
    is compared with that criterion (``spectra_agree``).
    """
    point = x if isinstance(x, SimplexPoint) else SimplexPoint(_vec(x))
    v = point.values
    S = point.support
    N = neighbor_mass(graph, v)
    h = float(v @ N)
    idx = np.array(S)
    B_spectrum = np.linalg.eigvalsh(graph.matrix[np.ix_(idx, idx)] - 2.0 * h)
    boundary = outer_boundary(graph, S)
    slack = {int(i): float(N[i] - h) for i in boundary}
    try:
        partition = multipartite_decompose(graph, S)
    except NotMultipartite:
        partition = None
    nullspace_dim = solve_equilibrium_on_support(graph, S).nullspace_dim

    if np.max(np.abs(N[idx] - h)) > tol:
        return EquilibriumReport(
            point, h, N, slack, B_spectrum, np.array([]), NOT_EQUILIBRIUM, partition, nullspace_dim
        )

    jac = jacobian_at_equilibrium(graph, point, tol)
    top = max(np.max(B_spectrum), max(slack.values(), default=-np.inf))
    top_df = np.max(jac.tangent_spectrum) if jac.tangent_spectrum.size else -np.inf
    agree = bool((top <= tol) == (top_df <= tol))
    if top > tol:
        label = UNSTABLE
    elif all(s < -tol for s in slack.values()):
        label = STRICTLY_STABLE
    else:
        label = STABLE
    return EquilibriumReport(
        point, h, N, slack, B_spectrum, jac.tangent_spectrum, label, partition, nullspace_dim, agree
    )


# -- equilibrium solving -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SupportSolution:
    """Particular solution of ``N_i(x) = h`` on ``S``, ``sum x = 1``, ``x = 0`` off ``S``."""

    S: tuple[int, ...]
    raw: np.ndarray
    h: float
    nullspace_dim: int
    consistent: bool
    feasible: bool
    point: SimplexPoint | None

    @property
    def infeasible_support(self) -> bool:
        return self.consistent and not self.feasible


def solve_equilibrium_on_support(graph: WeightedGraph, S: Iterable[int]) -> SupportSolution:
    S = vertex_set(graph, S)
    if not S:
        raise ValueError("S must be nonempty")
    k = len(S)
    idx = np.array(S)
    system = np.zeros((k + 1, k + 1))
    system[:k, :k] = graph.matrix[np.ix_(idx, idx)]
    system[:k, k] = -1.0
    system[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol, _, rank, _ = np.linalg.lstsq(system, rhs, rcond=None)
    consistent = bool(np.max(np.abs(system @ sol - rhs)) <= 1e-9)
    xs = sol[:k]
    feasible = consistent and bool(xs.min() > SUPPORT_EPS)
    point = None
    if consistent and xs.min() >= -1e-12:
        full = np.zeros(graph.vertex_count)
        full[idx] = np.clip(xs, 0.0, None)
        point = SimplexPoint(full / full.sum())
    return SupportSolution(S, xs, float(sol[k]), int(k + 1 - rank), consistent, feasible, point)


def solve_triangle_equilibrium(a: float, b: float, c: float) -> tuple[SimplexPoint, float]:
    """Interior equilibrium of a weighted triangle.

    ``a = a_01``, ``b = a_12``, ``c = a_02``; requires each weight to be
    strictly less than the sum of the other two.  Each coordinate is the
    weight of the opposite edge times the excess of the adjacent weights
    over it, divided by ``delta``.
    """
    if not (a < b + c and b < a + c and c < a + b):
        raise ValueError(f"triangle inequality violated for weights {(a, b, c)}")
    delta = (a + b + c) ** 2 - 2.0 * (a * a + b * b + c * c)
    x = np.array([b * (a + c - b), c * (a + b - c), a * (b + c - a)]) / delta
    point = SimplexPoint(x / x.sum())
    h = 2.0 * a * b * c / delta
    tri = WeightedGraph(3, {(0, 1): a, (1, 2): b, (0, 2): c})
    F = replicator_field(tri, point)
    if np.max(np.abs(F)) > 1e-12:
        raise ArithmeticError(f"closed form is not an equilibrium (|F| = {np.max(np.abs(F)):.3g})")
    return point, h


# -- ODE ----------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OdeTrajectory:
    times: np.ndarray
    states: np.ndarray
    H_series: np.ndarray
    J_series: np.ndarray

    @property
    def final(self) -> SimplexPoint:
        return SimplexPoint(self.states[-1])


def _rk4(a: np.ndarray, x: np.ndarray, dt: float) -> np.ndarray:
    def f(y):
        N = a @ y
        return y * (N - y @ N)

    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_replicator(
    graph: WeightedGraph, x0, dt: float = 1e-2, steps: int = 1000, monotone_tol: float = 1e-9
) -> OdeTrajectory:
    """Fixed-step RK4 integration of ``dx/dt = F(x)``.

    After every step negative coordinates are clipped to 0 and the state is
    renormalized.  Raises ``RuntimeError`` if ``H`` drops by more than
    ``monotone_tol`` in one step and ``FloatingPointError`` on non-finite
    states.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    a = graph.matrix
    x = SimplexPoint(_vec(x0)).values.copy()
    states = np.empty((steps + 1, x.size))
    H = np.empty(steps + 1)
    J = np.empty(steps + 1)
    states[0] = x
    H[0] = lyapunov_value(graph, x)
    J[0] = lyapunov_rate(graph, x)
    for k in range(1, steps + 1):
        y = _rk4(a, x, dt)
        if not np.all(np.isfinite(y)):
            raise FloatingPointError(f"non-finite state at step {k}")
        y = np.clip(y, 0.0, None)
        x = y / y.sum()
        states[k] = x
        H[k] = lyapunov_value(graph, x)
        J[k] = lyapunov_rate(graph, x)
        if H[k] < H[k - 1] - monotone_tol:
            raise RuntimeError(f"H decreased by {H[k - 1] - H[k]:.3g} at step {k}")
    return OdeTrajectory(dt * np.arange(steps + 1), states, H, J)


# -- entropy ------------------------------------------------------------------------------


def entropy(q, y, boundary: Iterable[int]) -> float:
    """Relative entropy ``-sum_S q_i log(y_i/q_i) + 2 y(boundary)``, infinite if some ``y_i <= 0`` on ``S``."""
    qv = _vec(q)
    yv = _vec(y)
    S = np.array(_support(q))
    if np.any(yv[S] <= 0):
        return float("inf")
    bd = list(boundary)
    return float(-np.sum(qv[S] * np.log(yv[S] / qv[S])) + 2.0 * yv[bd].sum())


def entropy_rate(graph: WeightedGraph, q, y) -> float:
    """Drift coefficient of the entropy along the walk, evaluated at ``y``."""
    qv = _vec(q)
    yv = _vec(y)
    S = list(_support(q))
    bd = list(outer_boundary(graph, S))
    N = graph.matrix @ yv
    slack = N - yv @ N
    return float(-np.sum(qv[S] * slack[S]) + 2.0 * np.sum(yv[bd] * slack[bd]))


# -- unit weights ---------------------------------------------------------------------------


def unit_weight_stable(graph: WeightedGraph, x, strict: bool = False, tol: float = EQ_TOL) -> bool:
    """Explicit stability test valid when every edge touching the support has weight 1.

    Loop-free support: complete d-partite with ``d >= 2``, each part carrying
    mass ``1/d`` and every boundary vertex having ``N_i <= 1 - 1/d`` (``<``
    when ``strict``).  Support with a loop: a clique of loops (and every
    boundary ``N_j < 1`` when ``strict``).
    """
    v = _vec(x)
    S = _support(x)
    for (i, j), w in graph.weights.items():
        if (i in S or j in S) and w != 1:
            raise ValueError(f"edge ({i}, {j}) touching the support has weight {w!r}, not 1")
    N = neighbor_mass(graph, v)
    boundary = outer_boundary(graph, S)
    if any(graph.is_loop(i) for i in S):
        if not is_clique(graph, S, loops=True):
            return False
        return not strict or all(N[j] < 1 - tol for j in boundary)
    try:
        dec = multipartite_decompose(graph, S)
    except NotMultipartite:
        return False
    d = dec.d
    if d < 2:
        return False
    if any(abs(v[list(part)].sum() - 1.0 / d) > tol for part in dec.parts):
        return False
    level = 1.0 - 1.0 / d
    if strict:
        return all(N[j] < level - tol for j in boundary)
    return all(N[j] <= level + tol for j in boundary)
