import json

import numpy as np
import pytest

from vrrw import scenarios, sim
from vrrw.cli import main
from vrrw.experiments import ExperimentConfig, cmd_analyze, cmd_simulate, cmd_trap, equilibrium_catalogue
from vrrw.replicator import classify_equilibrium
from vrrw.graph import save_graph
from vrrw.jsonio import dumps
from vrrw.scenarios import LadderParameters, example1, ladder_ex2, path


def test_analyze_example1_lists_strict_equilibrium():
    g = example1()
    cat = cmd_analyze(g)
    hits = [e for e in cat["equilibria"] if e["classification"] == "strictly_stable"]
    # the triangle C, D, E and the square A, B, C, D
    assert [tuple(e["support"]) for e in hits] == [(2, 3, 4), (0, 1, 2, 3)]
    assert [e["manifold_dimension"] for e in hits] == [0, 2]
    Hs = [e["H"] for e in cat["equilibria"]]
    assert Hs == sorted(Hs, reverse=True)
    # the square carries a face of equilibria; the named point lies on it
    target = np.array([3, 3, 1, 1, 0, 0]) / 8
    entry = next(e for e in equilibrium_catalogue(g) if e.report.support == (0, 1, 2, 3))
    assert entry.contains(target)
    assert not entry.contains(np.array([0.4, 0.3, 0.2, 0.1, 0, 0]))
    assert classify_equilibrium(g, target).classification == "strictly_stable"
    # the representative keeps the largest margin to the faces and to N_E = H
    assert np.allclose(entry.report.point.values, [1 / 3, 1 / 3, 1 / 6, 1 / 6, 0, 0], atol=1e-9)


def test_analyze_triangle_and_edge():
    cat = cmd_analyze(scenarios.complete(3))
    top = cat["equilibria"][0]
    assert np.allclose([float(s) for s in top["point"]], 1 / 3)
    assert top["H"] == pytest.approx(2 / 3) and top["classification"] == "strictly_stable"
    stable = [e for e in cmd_analyze(path(2))["equilibria"] if e["classification"] in ("stable", "strictly_stable")]
    assert len(stable) == 1 and np.allclose([float(s) for s in stable[0]["point"]], 0.5)


def test_analyze_warns_above_cap():
    with pytest.warns(UserWarning):
        cmd_analyze(scenarios.z_truncation(3), support_cap=3)


def test_trap_catalogues():
    assert cmd_trap(example1())["traps"] == [
        t for t in cmd_trap(example1())["traps"] if not set(t["S"]) <= {0, 1, 2, 3}
    ]
    z = cmd_trap(scenarios.z_truncation(5))["traps"]
    assert all(len(t["S"]) == 3 for t in z)
    assert {tuple(t["S"]) for t in z} >= {(4, 5, 6)}


def test_ladder_parameter_checks():
    assert LadderParameters().violations() == []
    assert LadderParameters(p=2.0).violations()
    assert LadderParameters(eta=0.01).violations()
    with pytest.raises(ValueError):
        ladder_ex2(LadderParameters(p=2.0))


def test_ladder_sequences():
    P = LadderParameters()
    pn, qn = P.sequences(12)
    for n in range(12):
        p_ref = P.p * np.prod([1 - P.mu**k * P.eps for k in range(n)])
        q_ref = P.q * np.prod([1 + P.mu**k * P.eta for k in range(n)])
        assert abs(pn[n] - p_ref) <= 1e-15 and abs(qn[n] - q_ref) <= 1e-15
    assert np.all(np.diff(pn) < 0) and np.all(np.diff(qn) > 0)


def test_ladder_weights():
    P = LadderParameters(depth=4)
    g = ladder_ex2(P)
    pn, qn = P.sequences(6)
    lo = lambda i: 2 * i
    up = lambda i: 2 * i + 1
    assert g.weight(lo(0), lo(1)) == pn[0]
    assert g.weight(up(1), up(2)) == pn[2]
    assert g.weight(up(0), up(1)) == qn[1] and g.weight(lo(1), lo(2)) == qn[1]
    assert g.weight(lo(0), up(0)) == qn[0] and g.weight(up(0), lo(1)) == qn[0]
    assert g.weight(lo(1), up(1)) == pn[1]
    assert g.weight(up(1), lo(2)) == qn[1]


def test_simulate_single_run_matches_direct_run():
    cfg = ExperimentConfig("example1", runs=1, steps=20_000, base_seed=77)
    summary = cmd_simulate(cfg)
    direct = sim.run(
        sim.RunConfig(example1(), scenarios.example1_initial_counts(), 0, 20_000, 77, reference_q=scenarios.example1_equilibrium())
    )
    assert dumps(summary["run_reports"][0]) == dumps(direct.to_json())


def test_simulate_writes_layout(tmp_path):
    cfg = ExperimentConfig("z", runs=3, steps=20_000, base_seed=5, output_dir=tmp_path / "out", workers=2)
    summary = cmd_simulate(cfg)
    assert (tmp_path / "out" / "summary.json").exists()
    assert sorted(p.name for p in (tmp_path / "out" / "runs").iterdir()) == [
        "run_0000.csv",
        "run_0001.csv",
        "run_0002.csv",
    ]
    first = (tmp_path / "out" / "summary.json").read_bytes()
    cmd_simulate(ExperimentConfig("z", runs=3, steps=20_000, base_seed=5, output_dir=tmp_path / "out", workers=1))
    assert (tmp_path / "out" / "summary.json").read_bytes() == first
    assert summary["runs"] == 3


def test_config_validation():
    assert ExperimentConfig("nope").violations()
    assert ExperimentConfig("z", runs=0).violations()
    assert ExperimentConfig("graph").violations()
    with pytest.raises(ValueError):
        cmd_simulate(ExperimentConfig("z", runs=0))


def test_cli_commands(tmp_path, capsys):
    assert main(["analyze", "--scenario", "k2"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["equilibria"][0]["classification"] == "strictly_stable"

    save_graph(example1(), tmp_path / "g.json")
    assert main(["trap", "--graph", str(tmp_path / "g.json"), "--out", str(tmp_path / "t.json")]) == 0
    assert json.loads((tmp_path / "t.json").read_text())["vertices"] == 6

    assert main(["triangle", "--a", "1.5", "--b", "1", "--c", "1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["H"] == pytest.approx(0.8)

    assert main(["ode", "--scenario", "triangle", "--steps", "3000", "--x0", "0.5,0.3,0.2"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["final_H"] == pytest.approx(2 / 3)

    assert main(["simulate", "--scenario", "z", "--runs", "2", "--steps", "20000", "--out", str(tmp_path / "s")]) == 0
    assert (tmp_path / "s" / "runs" / "run_0001.csv").exists()
    capsys.readouterr()

    assert main(["zloop", "--runs", "1", "--steps", "20000"]) == 0
    assert "statistics" in json.loads(capsys.readouterr().out)

    assert main(["ladder_ex2", "--depth", "4"]) == 0
    assert "traps" in json.loads(capsys.readouterr().out)


def test_cli_exit_code_on_bad_config(tmp_path, capsys):
    assert main(["triangle", "--a", "1", "--b", "1", "--c", "2"]) == 2
    assert main(["ladder_ex2", "--p", "3"]) == 2
    assert main(["simulate", "--scenario", "z", "--runs", "0"]) == 2
    assert main(["analyze"]) == 2
    (tmp_path / "bad.json").write_text(json.dumps({"vertices": 3, "edges": [[0, 1, 1]]}))
    assert main(["analyze", "--graph", str(tmp_path / "bad.json")]) == 2
    assert "disconnected" in capsys.readouterr().err


def test_json_floats_full_precision():
    text = dumps({"x": 0.1, "inf": float("inf"), "k": 3, "ok": True})
    assert '"x": 0.10000000000000001' in text
    assert '"inf": null' in text
