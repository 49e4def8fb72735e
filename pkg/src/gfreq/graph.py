"""Undirected simple graphs with array-backed adjacency.

A Graph is immutable after construction. Nodes are dense 0-based indices;
the edge-list parser maps arbitrary string labels to indices in
first-appearance order and keeps the mapping around for serialization.

Node sets are plain sorted tuples of ints throughout the package.
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ParseError


class Graph:
    """Simple undirected graph. Construction validates and dedups edges."""

    __slots__ = (
        "n_nodes",
        "edges",
        "indptr",
        "indices",
        "labels",
        "_adj_dense",
        "_edge_set",
        "_norm_adj",
    )

    def __init__(
        self,
        n_nodes: int,
        edges: Iterable[tuple[int, int]],
        labels: Optional[Sequence[str]] = None,
    ):
        if n_nodes < 0:
            raise ValueError("n_nodes must be nonnegative")
        seen = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n_nodes and 0 <= v < n_nodes):
                raise ValueError(f"edge ({u},{v}) out of range for n={n_nodes}")
            if u == v:
                continue
            if u > v:
                u, v = v, u
            seen.add((u, v))
        edge_arr = np.array(sorted(seen), dtype=np.int32).reshape(-1, 2)
        self.n_nodes = int(n_nodes)
        self.edges = edge_arr
        # CSR neighbor lists
        deg = np.zeros(n_nodes, dtype=np.int64)
        if len(edge_arr):
            np.add.at(deg, edge_arr[:, 0], 1)
            np.add.at(deg, edge_arr[:, 1], 1)
        indptr = np.zeros(n_nodes + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        indices = np.empty(indptr[-1], dtype=np.int32)
        fill = indptr[:-1].copy()
        for u, v in edge_arr:
            indices[fill[u]] = v
            fill[u] += 1
            indices[fill[v]] = u
            fill[v] += 1
        for u in range(n_nodes):
            indices[indptr[u]:indptr[u + 1]].sort()
        self.indptr = indptr
        self.indices = indices
        self.labels = tuple(labels) if labels is not None else None
        self._adj_dense = None
        self._edge_set = None
        self._norm_adj = None

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def has_edge(self, u: int, v: int) -> bool:
        if self._edge_set is None:
            self._edge_set = {(int(a), int(b)) for a, b in self.edges}
        if u > v:
            u, v = v, u
        return (int(u), int(v)) in self._edge_set

    def adjacency_dense(self) -> np.ndarray:
        """N x N uint8 adjacency matrix, built lazily and cached."""
        if self._adj_dense is None:
            a = np.zeros((self.n_nodes, self.n_nodes), dtype=np.uint8)
            if len(self.edges):
                a[self.edges[:, 0], self.edges[:, 1]] = 1
                a[self.edges[:, 1], self.edges[:, 0]] = 1
            self._adj_dense = a
        return self._adj_dense

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Graph)
            and self.n_nodes == other.n_nodes
            and self.edges.shape == other.edges.shape
            and bool(np.all(self.edges == other.edges))
        )

    def __hash__(self):
        return hash((self.n_nodes, self.edges.tobytes()))

    def __repr__(self):
        return f"Graph(n_nodes={self.n_nodes}, n_edges={self.n_edges})"


def parse_edge_list(text: str) -> Graph:
    """Parse edge-list text: one edge per line, two whitespace-separated
    labels. Lines starting with '#' and blank lines are ignored. Duplicate
    edges and self-loops are dropped. Labels map to dense indices in
    first-appearance order (left token before right token, line by line).
    """
    label_to_idx: dict[str, int] = {}
    labels: list[str] = []
    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise ParseError(
                f"expected two whitespace-separated labels, got {len(tokens)}",
                lineno,
            )
        idx = []
        for tok in tokens:
            if tok not in label_to_idx:
                label_to_idx[tok] = len(labels)
                labels.append(tok)
            idx.append(label_to_idx[tok])
        edges.append((idx[0], idx[1]))
    return Graph(len(labels), edges, labels=labels)


def serialize_edge_list(g: Graph) -> str:
    """Inverse of parse_edge_list for graphs without isolated nodes.

    Emits one edge per line using the stored labels (or the indices when
    the graph was built programmatically). Isolated nodes cannot be
    expressed in the edge-list format and are dropped on a round-trip.
    """
    lines = []
    for u, v in g.edges:
        if g.labels is not None:
            lines.append(f"{g.labels[u]} {g.labels[v]}")
        else:
            lines.append(f"{u} {v}")
    return "\n".join(lines) + ("\n" if lines else "")


def induced_subgraph(g: Graph, nodes: Sequence[int]) -> Graph:
    """Induced subgraph on `nodes`, relabeled 0..len-1 in sorted order."""
    nodes = sorted(int(v) for v in nodes)
    if len(set(nodes)) != len(nodes):
        raise ValueError("nodes must be distinct")
    for v in nodes:
        if not 0 <= v < g.n_nodes:
            raise ValueError(f"node {v} out of range")
    pos = {v: i for i, v in enumerate(nodes)}
    sub_edges = []
    for v in nodes:
        for w in g.neighbors(v):
            w = int(w)
            if w in pos and v < w:
                sub_edges.append((pos[v], pos[w]))
    lab = None
    if g.labels is not None:
        lab = [g.labels[v] for v in nodes]
    return Graph(len(nodes), sub_edges, labels=lab)


def connected_components(g: Graph) -> list[tuple[int, ...]]:
    """Maximal connected node sets, each sorted, ordered by smallest index."""
    seen = np.zeros(g.n_nodes, dtype=bool)
    comps = []
    for start in range(g.n_nodes):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        comp = []
        while stack:
            v = stack.pop()
            comp.append(v)
            for w in g.neighbors(v):
                w = int(w)
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        comps.append(tuple(sorted(comp)))
    return comps


def largest_connected_component(
    g: Graph, nodes: Sequence[int]
) -> tuple[int, ...]:
    """Largest component of the subgraph induced by `nodes`, in original
    indices. Ties go to the component containing the smallest index.
    """
    node_list = sorted(set(int(v) for v in nodes))
    for v in node_list:
        if not 0 <= v < g.n_nodes:
            raise ValueError(f"node {v} out of range")
    if not node_list:
        return ()
    in_set = set(node_list)
    seen: set[int] = set()
    best: tuple[int, ...] = ()
    for start in node_list:  # ascending, so first max wins ties
        if start in seen:
            continue
        stack = [start]
        seen.add(start)
        comp = [start]
        while stack:
            v = stack.pop()
            for w in g.neighbors(v):
                w = int(w)
                if w in in_set and w not in seen:
                    seen.add(w)
                    stack.append(w)
                    comp.append(w)
        if len(comp) > len(best):
            best = tuple(sorted(comp))
    return best


def degree_sequence(g: Graph) -> list[int]:
    """Per-node degrees, index-aligned."""
    return [int(g.indptr[v + 1] - g.indptr[v]) for v in range(g.n_nodes)]


def is_connected_subset(g: Graph, nodes: Sequence[int]) -> bool:
    """True when the subgraph induced by `nodes` is connected and nonempty."""
    node_list = list(dict.fromkeys(int(v) for v in nodes))
    if not node_list:
        return False
    return len(largest_connected_component(g, node_list)) == len(node_list)
