"""Per-hop path graphs: the union of all l-hop paths between a node pair."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import GraphError
from .graph import KnowledgeGraph
from .midpaths import DEFAULT_PATH_CAP, MidPath, enumerate_midpaths, hop_count, midpath_nodes


@dataclass(frozen=True)
class PathGraph:
    """Small undirected graph over ``members`` (graph node ids).

    Member 0 is the head, member 1 the tail; intermediates follow in order
    of first appearance. ``edges`` holds sorted member-index pairs ``(i, j)``
    with ``i < j``; edge labels are not kept.
    """

    hop_count: int
    members: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    head_index: int = 0
    tail_index: int = 1

    @property
    def size(self) -> int:
        return len(self.members)

    def adjacency_matrix(self) -> np.ndarray:
        n = len(self.members)
        adj = np.zeros((n, n))
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = 1.0
        return adj

    def to_json(self, graph: KnowledgeGraph | None = None) -> str:
        """Debug dump of the adjacency list."""
        names = [graph.node_names[m] for m in self.members] if graph is not None else list(self.members)
        adj: dict = {str(n): [] for n in names}
        for i, j in self.edges:
            adj[str(names[i])].append(names[j])
            adj[str(names[j])].append(names[i])
        return json.dumps({"hops": self.hop_count, "head": names[0], "tail": names[1], "adjacency": adj})


def build_path_graph(graph: KnowledgeGraph, a: int, b: int, l: int, paths: list[MidPath]) -> PathGraph:
    """Union the node sequences ``a, x1, ..., b`` of the given l-hop MidPaths."""
    graph._check(a)
    graph._check(b)
    if a == b:
        raise GraphError("path endpoints must differ")
    index = {a: 0, b: 1}
    members = [a, b]
    edges: set[tuple[int, int]] = set()
    for p in paths:
        if hop_count(p) != l or len(p) % 2 == 0:
            raise GraphError(f"path {p!r} does not have {l} hops")
        seq = [a, *midpath_nodes(p), b]
        for node in seq:
            if node not in index:
                index[node] = len(members)
                members.append(node)
        for u, v in zip(seq, seq[1:]):
            i, j = index[u], index[v]
            edges.add((i, j) if i < j else (j, i))
    return PathGraph(l, tuple(members), tuple(sorted(edges)))


def empty_path_graph(a: int, b: int, l: int) -> PathGraph:
    return PathGraph(l, (a, b), ())


def build_all_hops(graph: KnowledgeGraph, a: int, b: int, L: int, cap: int = DEFAULT_PATH_CAP) -> list[PathGraph]:
    """One path graph per hop count 1..L from a single enumeration."""
    paths = enumerate_midpaths(graph, a, b, L, cap).paths
    by_hop: list[list[MidPath]] = [[] for _ in range(L)]
    for p in paths:
        by_hop[hop_count(p) - 1].append(p)
    return [build_path_graph(graph, a, b, l, by_hop[l - 1]) for l in range(1, L + 1)]
