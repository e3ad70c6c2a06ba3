import json
from fractions import Fraction

import pytest
from hypothesis import given

from conftest import graphs
from vrrw.graph import WeightedGraph, load_graph, outer_boundary, save_graph, validate, vertex_set
from vrrw.scenarios import example1, path


def test_minimal_graph_is_valid():
    assert validate(WeightedGraph(2, {(0, 1): 1})) == []


def test_zero_weight_rejected():
    problems = validate(WeightedGraph(2, {(0, 1): 0}))
    assert any("nonpositive" in p for p in problems)


def test_disconnected_rejected():
    problems = validate(WeightedGraph(4, {(0, 1): 1, (2, 3): 1}))
    assert any("disconnected" in p for p in problems)


def test_loop_is_its_own_neighbor():
    g = WeightedGraph(2, {(0, 0): 2, (0, 1): 1})
    assert g.neighbors[0] == (0, 1)
    assert g.matrix[0, 0] == 2
    assert g.has_loops


def test_outer_boundary_examples():
    assert outer_boundary(path(3), [1]) == (0, 2)
    g = example1()
    assert outer_boundary(g, g.ids("ABCD")) == (g.index("E"),)
    assert outer_boundary(g, g.vertices) == ()


def test_vertex_out_of_range():
    with pytest.raises(IndexError):
        vertex_set(path(3), [5])


def test_rational_round_trip(tmp_path):
    g = WeightedGraph(3, {(0, 1): Fraction(3, 8), (1, 2): 2, (2, 2): Fraction(1, 3)}, ("a", "b", "c"))
    save_graph(g, tmp_path / "g.json", tmp_path / "names.json")
    doc = json.loads((tmp_path / "g.json").read_text())
    assert doc["edges"][0] == [0, 1, "3/8"]
    h = load_graph(tmp_path / "g.json", tmp_path / "names.json")
    assert h == g
    assert h.weight(0, 1) == Fraction(3, 8) and isinstance(h.weight(0, 1), Fraction)
    assert h.names == ("a", "b", "c")
    save_graph(h, tmp_path / "h.json")
    assert (tmp_path / "h.json").read_bytes() == (tmp_path / "g.json").read_bytes()


def test_edges_must_be_ordered():
    with pytest.raises(ValueError):
        WeightedGraph.from_json_dict({"vertices": 2, "edges": [[1, 0, 1]]})


@given(graphs(max_vertices=7))
def test_boundary_is_disjoint_and_adjacent(g):
    for start in range(g.vertex_count):
        S = {start} | set(g.neighbors[start])
        bd = outer_boundary(g, S)
        assert not set(bd) & S
        assert all(any(g.adjacent(j, i) for i in S) for j in bd)
