"""
Undirected communication topology among the agents.
Edges carry unit weight; the graph must be connected.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple
import sys

import networkx as nx
import numpy as np

sys.path.append(str(Path(__file__).parent.parent))
from scripts.errors import AssumptionViolation


@dataclass(frozen=True, eq=False)
class CommGraph:
    """Adjacency a_ij in {0, 1}, symmetric, zero diagonal."""

    node_count: int
    adjacency: np.ndarray

    def neighbors(self, i: int) -> List[int]:
        return [int(j) for j in np.flatnonzero(self.adjacency[i])]

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.node_count else 0

    @property
    def edges(self) -> List[Tuple[int, int]]:
        rows, cols = np.nonzero(np.triu(self.adjacency))
        return [(int(i), int(j)) for i, j in zip(rows, cols)]

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.node_count))
        g.add_edges_from(self.edges)
        return g


def build_graph(edge_list: Iterable[Sequence[int]], node_count: int) -> CommGraph:
    """
    Build the adjacency matrix from an edge list.

    Args:
        edge_list: Pairs (i, j) of node indices in [0, node_count)
        node_count: Number of agents N

    Returns:
        CommGraph with a_ij = a_ji = 1 exactly for the listed pairs

    Raises:
        ValueError: bad index, weighted entry, self-loop or duplicate edge
        AssumptionViolation: the graph is disconnected
    """
    if node_count < 1:
        raise ValueError(f"node_count must be positive, got {node_count}")

    adjacency = np.zeros((node_count, node_count))
    seen = set()
    for edge in edge_list:
        if len(edge) != 2:
            raise ValueError(f"Edge {tuple(edge)} must be an index pair (weighted edges are not supported)")
        i, j = int(edge[0]), int(edge[1])
        if not (0 <= i < node_count and 0 <= j < node_count):
            raise ValueError(f"Edge ({i}, {j}) has an index outside [0, {node_count})")
        if i == j:
            raise ValueError(f"Self-loop on node {i} is not allowed")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ValueError(f"Duplicate edge ({i}, {j})")
        seen.add(key)
        adjacency[i, j] = adjacency[j, i] = 1.0

    adjacency.setflags(write=False)
    graph = CommGraph(node_count=node_count, adjacency=adjacency)
    if not is_connected(graph):
        reached = len(nx.node_connected_component(graph.to_networkx(), 0))
        raise AssumptionViolation(1, f"only {reached} of {node_count} nodes are reachable from node 0")
    return graph


def is_connected(g: CommGraph) -> bool:
    """True iff a breadth-first search from node 0 visits every node."""
    tree = nx.bfs_tree(g.to_networkx(), 0)
    return tree.number_of_nodes() == g.node_count
