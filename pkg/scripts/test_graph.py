"""
Checks for the communication graph: adjacency construction and connectivity.
"""
import sys
from pathlib import Path

import networkx as nx
import numpy as np

sys.path.append(str(Path(__file__).parent.parent))

from config import SCENARIO_DIR
from scripts.errors import AssumptionViolation
from scripts.graph import build_graph, is_connected
from scripts.scenario import load_scenario


def _expect(exc_type, fn, *args):
    try:
        fn(*args)
    except exc_type as e:
        return e
    raise AssertionError(f"{fn.__name__}{args} did not raise {exc_type.__name__}")


def test_ring_adjacency():
    g = build_graph([(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)], 5)
    assert np.array_equal(g.adjacency, g.adjacency.T)
    assert np.all(np.diag(g.adjacency) == 0)
    assert g.degrees.tolist() == [2, 2, 2, 2, 2]
    assert g.max_degree == 2
    assert g.neighbors(0) == [1, 4]
    assert sorted(g.edges) == [(0, 1), (0, 4), (1, 2), (2, 3), (3, 4)]


def test_single_node_is_connected():
    g = build_graph([], 1)
    assert is_connected(g)
    assert g.neighbors(0) == []


def test_disconnected_graph_is_assumption_1():
    e = _expect(AssumptionViolation, build_graph, [(0, 1)], 3)
    assert e.assumption == 1
    assert "2 of 3" in str(e)


def test_bad_edges_rejected():
    _expect(ValueError, build_graph, [(0, 0), (0, 1)], 2)        # self-loop
    _expect(ValueError, build_graph, [(0, 1), (1, 0)], 2)        # duplicate
    _expect(ValueError, build_graph, [(0, 2)], 2)                # index out of range
    _expect(ValueError, build_graph, [(0, 1, 0.5)], 2)           # weighted entry
    _expect(ValueError, build_graph, [], 0)


def test_adjacency_is_read_only():
    g = build_graph([(0, 1)], 2)
    _expect(ValueError, g.adjacency.__setitem__, (0, 1), 0.0)


def test_shipped_scenarios_symmetric_and_connected():
    paths = sorted(SCENARIO_DIR.glob("*.json"))
    assert paths, f"no scenarios in {SCENARIO_DIR}"
    for path in paths:
        g = load_scenario(path).graph
        assert np.array_equal(g.adjacency, g.adjacency.T), path.name
        assert set(np.unique(g.adjacency)) <= {0.0, 1.0}, path.name
        assert is_connected(g), path.name
        assert nx.number_connected_components(g.to_networkx()) == 1, path.name


if __name__ == "__main__":
    from scripts.checks import run_module

    run_module(globals(), "Communication Graph Checks")
