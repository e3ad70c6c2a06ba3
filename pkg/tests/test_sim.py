import math

import numpy as np
import pytest
from scipy import stats

from vrrw import sim
from vrrw.graph import WeightedGraph
from vrrw.replicator import SimplexPoint, classify_equilibrium, entropy, lyapunov_value
from vrrw.scenarios import (
    clique_of_loops,
    example1,
    example1_equilibrium,
    example1_initial_counts,
    path,
    star,
    z_truncation,
)
from vrrw.structure import is_strongly_trapping


def test_two_vertex_step_is_forced():
    g = path(2)
    state = sim.new_walk([1.0, 1.0], 0, seed=3)
    state = sim.step(state, g)
    assert state.position == 1 and state.n == 1
    assert np.array_equal(state.Z, [1.0, 2.0])


def test_star_probabilities():
    probs = sim.transition_probabilities(star(3), [1.0, 1.0, 2.0, 1.0], 0)
    assert probs == pytest.approx({1: 0.25, 2: 0.5, 3: 0.25})


def test_loop_only_vertex_stays():
    g = WeightedGraph(1, {(0, 0): 1})
    state = sim.new_walk([0.5], 0, seed=1)
    for _ in range(3):
        state = sim.step(state, g)
    assert state.position == 0 and state.Z[0] == 3.5


def test_isolated_vertex_rejected():
    g = WeightedGraph(2, {(1, 1): 1})
    with pytest.raises(ValueError):
        sim.step(sim.new_walk([1.0, 1.0], 0, seed=0), g)


def test_initial_counts_must_be_positive():
    with pytest.raises(ValueError):
        sim.new_walk([1.0, 0.0], 0, seed=0)
    with pytest.raises(ValueError):
        sim.RunConfig(path(2), [1.0, 0.0], 0, 10, 0)
    with pytest.raises(ValueError):
        sim.RunConfig(path(2), [1.0, 1.0], 0, 0, 0)


def test_star_step_frequencies():
    g = star(3)
    Z = np.array([1.0, 1.0, 2.0, 1.0])
    rng = sim.make_rng(99)
    counts = np.zeros(4)
    for _ in range(100_000):
        s = sim.WalkState(Z, 0, 0, Z.sum(), rng)
        counts[sim.step(s, g).position] += 1
    expected = np.array([0.25, 0.5, 0.25]) * 100_000
    assert np.all(np.abs(counts[1:] - expected) <= 3 * np.sqrt(expected * (1 - expected / 100_000)))
    assert stats.chisquare(counts[1:], expected).pvalue > 1e-6


def test_kernel_matches_reference_step():
    for g, Z0, start in [
        (example1(), example1_initial_counts(), 0),
        (z_truncation(3, loop_at_origin=True), np.ones(7), 3),
        (clique_of_loops(3, extra=[(0, 3)]), np.array([0.5, 1.0, 2.0, 0.1]), 3),
    ]:
        ref = sim.new_walk(Z0, start, seed=17)
        fast = sim.new_walk(Z0, start, seed=17)
        for _ in range(3000):
            ref = sim.step(ref, g)
        sim.advance(fast, g, 3000)
        assert np.array_equal(ref.Z, fast.Z)
        assert ref.position == fast.position


def test_counts_invariants():
    g = example1()
    Z0 = example1_initial_counts()
    state = sim.new_walk(Z0, 0, seed=5)
    for n in (10, 1000, 100_000):
        sim.advance(state, g, n - state.n)
        assert abs(state.Z.sum() - (n + state.n0)) <= 1e-9
        assert np.all(state.Z >= Z0)


def test_run_is_reproducible():
    g = example1()
    cfg = sim.RunConfig(g, example1_initial_counts(), 0, 50_000, seed=123, reference_q=example1_equilibrium())
    a, b = sim.run(cfg), sim.run(cfg)
    assert a.to_json() == b.to_json()
    assert a.snapshot_csv() == b.snapshot_csv()
    assert np.array_equal(a.Z, b.Z)


def test_seeds_differ():
    g = example1()
    a = sim.run(sim.RunConfig(g, example1_initial_counts(), 0, 20_000, seed=1))
    b = sim.run(sim.RunConfig(g, example1_initial_counts(), 0, 20_000, seed=2))
    assert not np.array_equal(a.final_Z, b.final_Z)


def test_schedule_and_window():
    assert sim.final_window(10**6) == 10**5
    assert sim.final_window(50_000) == 10_000
    assert sim.final_window(5_000) == 2_500
    grid = sim.geometric_schedule(10**6)
    assert grid[0] == 1 and grid[-1] == 10**6
    assert len(grid) <= 6 * sim.SNAPSHOTS_PER_DECADE + 1


def test_snapshot_csv_layout(tmp_path):
    g = example1()
    rep = sim.run(sim.RunConfig(g, example1_initial_counts(), 0, 20_000, seed=4, reference_q=example1_equilibrium()))
    rep.write_snapshot_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "n,v_A,v_B,v_C,v_D,v_E,v_F,H,V_q"
    assert len(lines) == rep.ns.size + 1


def test_corrector_on_snapshots():
    g = example1()
    rep = sim.run(sim.RunConfig(g, example1_initial_counts(), 0, 100_000, seed=8))
    assert np.max(np.abs(rep.z.sum(axis=1) - 1)) <= 1e-12
    scaled = np.max(np.abs(rep.z - rep.v), axis=1) * (rep.ns + rep.n0)
    assert np.all(np.isfinite(scaled))


def test_exponent_fit_recovers_power_law():
    ns = np.unique(np.geomspace(100, 10**6, 200).astype(int))
    Z = np.column_stack([3 * ns**0.5, 2 * ns**0.25 + 0 * ns])
    fits = sim.fit_exponents(ns, Z, 10**4)
    assert abs(fits[0].slope - 0.5) <= 1e-12
    assert abs(fits[1].slope - 0.25) <= 1e-12


def test_theoretical_exponents():
    g = example1()
    assert sim.theoretical_exponent(g, example1_equilibrium(), 4) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        sim.theoretical_exponent(g, example1_equilibrium(), 5)
    z = z_truncation(5)
    y = np.zeros(11)
    y[[4, 5, 6]] = [0.25, 0.5, 0.25]
    assert sim.theoretical_exponent(z, y, 7) == pytest.approx(0.5)
    trap = is_strongly_trapping(z, [4, 5, 6])
    assert sim.trapping_exponent(z, trap, y, 7) == pytest.approx(sim.theoretical_exponent(z, y, 7))


def test_trapping_exponent_with_loops():
    g = clique_of_loops(2, extra=[(0, 2)])
    trap = is_strongly_trapping(g, [0, 1])
    y = np.array([0.3, 0.7, 0.0])
    assert lyapunov_value(g, y) == pytest.approx(1.0)
    assert sim.trapping_exponent(g, trap, y, 2) == pytest.approx(sim.theoretical_exponent(g, y, 2))


def test_trapping_exponent_matches_on_multipartite_trap():
    # square with a pendant leaf: the trap formula uses d / (d - 1)
    g = WeightedGraph(5, {(0, 1): 1, (1, 2): 1, (2, 3): 1, (0, 3): 1, (0, 4): 1})
    trap = is_strongly_trapping(g, [0, 1, 2, 3])
    assert trap.is_trapping
    y = np.array([0.3, 0.25, 0.2, 0.25, 0.0])
    assert sim.trapping_exponent(g, trap, y, 4) == pytest.approx(sim.theoretical_exponent(g, y, 4))


def test_one_step_entropy_drift():
    g = example1()
    q = example1_equilibrium()
    v = np.array([3, 3, 1, 1, 0, 0]) / 8 * (1 - 2e-3)
    v[4] = v[5] = 1e-3
    rng = np.random.default_rng(0)
    for pos in range(6):
        scaled = []
        for n in (10**3, 10**4, 10**5):
            out = sim.one_step_entropy_drift(g, q, v, pos, n, 1000.0, 20_000, rng)
            assert abs(out.mean - out.expected) <= 3 * out.stderr + 1e-18
            scaled.append((out.expected - out.predicted) * (n + 1000.0) ** 2)
        # the gap to the predicted drift is a second-order remainder
        assert max(abs(s) for s in scaled) <= 2.0
        assert abs(scaled[2] - scaled[1]) <= 0.01 * max(1.0, abs(scaled[1]))


def localizing_example1_runs(count, steps=10**6, grid=None):
    g = example1()
    out = []
    for r in range(count):
        cfg = sim.RunConfig(g, example1_initial_counts(), 0, steps, sim.run_seed(2024, r), snapshot_schedule=grid)
        rep = sim.run(cfg)
        if rep.localized and rep.range_estimate == (0, 1, 2, 3, 4):
            out.append(rep)
    return g, out


def limit_candidate(g, rep, S):
    # project onto the equilibrium manifold of the square: each part gets 1/2
    y = np.zeros(g.vertex_count)
    y[list(S)] = rep.final_Z[list(S)]
    y[[0, 2]] *= 0.5 / y[[0, 2]].sum()
    y[[1, 3]] *= 0.5 / y[[1, 3]].sum()
    return SimplexPoint(y)


def test_entropy_decreases_in_localizing_phase():
    grid = range(0, 10**6 + 1, 10_000)
    g, runs = localizing_example1_runs(12, grid=grid)
    assert len(runs) >= 3
    for rep in runs:
        q = limit_candidate(g, rep, (0, 1, 2, 3))
        assert classify_equilibrium(g, q).classification == "strictly_stable"
        table = sim.entropy_drift_check(rep, g, q)
        assert all(row.predicted <= 0 for row in table)
        late = [row for row in table if row.start >= 10**5]
        measured = sum(row.measured for row in late)
        predicted = sum(row.predicted for row in late)
        assert measured < 0
        assert 0.5 <= measured / predicted <= 2.0
        Vq = {int(n): entropy(q, z, (4,)) for n, z in zip(rep.ns, rep.z)}
        assert Vq[10**4] > Vq[10**5] > Vq[10**6]


def test_exponents_near_theory_for_runs_near_equilibrium():
    g, runs = localizing_example1_runs(60)
    x = example1_equilibrium()
    errors = []
    for rep in runs:
        if entropy(x, rep.final_v, (4,)) <= 1e-2:
            y = rep.final_Z.copy()
            y[4:] = 0
            errors.append(rep.exponent_fits[4].slope - sim.theoretical_exponent(g, y / y.sum(), 4))
    errors = np.array(errors)
    assert errors.size >= 15
    # per-run fits carry counting noise on a slowly growing vertex
    assert np.mean(np.abs(errors) <= 0.1) >= 0.6
    assert abs(errors.mean()) <= 0.05


def test_zloop_statistics_are_finite():
    z = sim.scenario_zloop(200_000, seed=3)
    doc = z.to_json()
    assert all(math.isfinite(v) for v in (z.origin_fraction, z.alpha, *z.neighbor_ratios, *z.outer_ratios))
    assert doc["K"] == 5
    with pytest.raises(ValueError):
        sim.scenario_zloop(1000, seed=0, K=3)
