"""Canonical codes for connected graphs on 3..5 nodes.

A k-node graph is encoded as an upper-triangular adjacency bitmask: pair
(a, b) with a < b, enumerated in lexicographic order, owns one bit (the
pair's position in that order, LSB first). The canonical code is the
lexicographically minimal mask over all k! node permutations, which is an
exact isomorphism invariant at this size.

Because masks fit in at most 10 bits (k=5), canonicalization and
connectivity are precomputed as whole lookup tables per k, shared by the
python and compiled enumeration paths.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .graph import Graph

MIN_K = 3
MAX_K = 5


def pair_order(k: int) -> list[tuple[int, int]]:
    """Pairs (a, b), a < b, in the lexicographic order that defines bits."""
    return [(a, b) for a in range(k) for b in range(a + 1, k)]


@lru_cache(maxsize=None)
def _pair_pos(k: int) -> dict[tuple[int, int], int]:
    return {p: i for i, p in enumerate(pair_order(k))}


@lru_cache(maxsize=None)
def connectivity_table(k: int) -> np.ndarray:
    """Boolean table over all masks: is the k-node graph connected?"""
    pairs = pair_order(k)
    n_masks = 1 << len(pairs)
    table = np.zeros(n_masks, dtype=np.bool_)
    for mask in range(n_masks):
        parent = list(range(k))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i, (a, b) in enumerate(pairs):
            if (mask >> i) & 1:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[ra] = rb
        table[mask] = len({find(x) for x in range(k)}) == 1
    return table


@lru_cache(maxsize=None)
def canonical_table(k: int) -> np.ndarray:
    """int32 table mapping every adjacency mask to its canonical mask."""
    pairs = pair_order(k)
    m = len(pairs)
    pos = _pair_pos(k)
    n_masks = 1 << m
    masks = np.arange(n_masks, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(m)) & 1  # (n_masks, m)
    best = masks.copy()
    for perm in itertools.permutations(range(k)):
        dest = np.array(
            [pos[tuple(sorted((perm[a], perm[b])))] for (a, b) in pairs],
            dtype=np.int64,
        )
        remapped = bits @ (1 << dest)
        np.minimum(best, remapped, out=best)
    return best.astype(np.int32)


@dataclass(frozen=True, order=True)
class CanonicalCode:
    """Permutation-invariant identifier of a k-node graph (3 <= k <= 5)."""

    k: int
    bits: int

    def to_string(self) -> str:
        return f"{self.k}:{self.bits:x}"

    @staticmethod
    def from_string(s: str) -> "CanonicalCode":
        k_str, bits_str = s.split(":")
        return CanonicalCode(int(k_str), int(bits_str, 16))

    def __str__(self) -> str:
        return self.to_string()


def subset_mask(g: Graph, nodes: Sequence[int]) -> int:
    """Adjacency bitmask of the subgraph induced by sorted `nodes`."""
    adj = g.adjacency_dense()
    nodes = sorted(nodes)
    k = len(nodes)
    mask = 0
    bit = 0
    for a in range(k):
        for b in range(a + 1, k):
            if adj[nodes[a], nodes[b]]:
                mask |= 1 << bit
            bit += 1
    return mask


def canonical_code(g: Graph) -> CanonicalCode:
    """Canonical code of a whole graph with 3..5 nodes."""
    k = g.n_nodes
    if not MIN_K <= k <= MAX_K:
        raise ValueError(f"canonical_code needs {MIN_K} <= n <= {MAX_K}, got {k}")
    pos = _pair_pos(k)
    mask = 0
    for u, v in g.edges:
        mask |= 1 << pos[(int(u), int(v))]
    return CanonicalCode(k, int(canonical_table(k)[mask]))


def classify_connected(g: Graph, nodes: Sequence[int]) -> CanonicalCode:
    """Canonical code of the connected induced subgraph on `nodes`."""
    nodes = sorted(int(v) for v in nodes)
    k = len(nodes)
    if not MIN_K <= k <= MAX_K:
        raise ValueError(f"classify_connected needs {MIN_K} <= k <= {MAX_K}, got {k}")
    if len(set(nodes)) != k:
        raise ValueError("nodes must be distinct")
    mask = subset_mask(g, nodes)
    if not connectivity_table(k)[mask]:
        raise ValueError(f"induced subgraph on {tuple(nodes)} is disconnected")
    return CanonicalCode(k, int(canonical_table(k)[mask]))


@lru_cache(maxsize=None)
def connected_codes(k: int) -> tuple[CanonicalCode, ...]:
    """All distinct canonical codes of connected k-node graphs, sorted."""
    conn = connectivity_table(k)
    canon = canonical_table(k)
    codes = sorted(set(int(c) for c in canon[conn]))
    return tuple(CanonicalCode(k, c) for c in codes)


# Human-readable aliases. Common names are pinned by explicit edge lists;
# any class without a common name gets a systematic "ke<edges>-<i>" name.
_NAMED_GRAPHS: list[tuple[str, int, list[tuple[int, int]]]] = [
    ("3-path", 3, [(0, 1), (1, 2)]),
    ("triangle", 3, [(0, 1), (1, 2), (0, 2)]),
    ("4-path", 4, [(0, 1), (1, 2), (2, 3)]),
    ("claw", 4, [(0, 1), (0, 2), (0, 3)]),
    ("4-cycle", 4, [(0, 1), (1, 2), (2, 3), (0, 3)]),
    ("paw", 4, [(0, 1), (1, 2), (0, 2), (2, 3)]),
    ("diamond", 4, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)]),
    ("4-clique", 4, [(a, b) for a in range(4) for b in range(a + 1, 4)]),
    ("5-path", 5, [(0, 1), (1, 2), (2, 3), (3, 4)]),
    ("5-star", 5, [(0, 1), (0, 2), (0, 3), (0, 4)]),
    ("chair", 5, [(0, 1), (1, 2), (2, 3), (2, 4)]),
    ("5-cycle", 5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]),
    ("bull", 5, [(0, 1), (1, 2), (0, 2), (0, 3), (1, 4)]),
    ("cricket", 5, [(0, 1), (1, 2), (0, 2), (0, 3), (0, 4)]),
    ("tadpole", 5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4)]),
    ("banner", 5, [(0, 1), (1, 2), (2, 3), (0, 3), (0, 4)]),
    ("house", 5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 4)]),
    ("butterfly", 5, [(0, 1), (0, 2), (1, 2), (0, 3), (0, 4), (3, 4)]),
    ("dart", 5, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (1, 4)]),
    ("kite", 5, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (0, 4)]),
    ("K2,3", 5, [(0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)]),
    ("gem", 5, [(0, 1), (1, 2), (2, 3), (0, 4), (1, 4), (2, 4), (3, 4)]),
    ("lollipop", 5, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (3, 4)]),
    ("4-wheel", 5, [(0, 1), (1, 2), (2, 3), (0, 3), (0, 4), (1, 4), (2, 4), (3, 4)]),
    ("K5-e", 5, [(a, b) for a in range(5) for b in range(a + 1, 5) if (a, b) != (3, 4)]),
    ("5-clique", 5, [(a, b) for a in range(5) for b in range(a + 1, 5)]),
]


@lru_cache(maxsize=None)
def alias_table() -> dict[CanonicalCode, str]:
    """Alias per connected 3/4/5-node class; systematic names fill gaps."""
    named: dict[CanonicalCode, str] = {}
    for name, k, edges in _NAMED_GRAPHS:
        code = canonical_code(Graph(k, edges))
        if code not in named:
            named[code] = name
    table: dict[CanonicalCode, str] = {}
    for k in range(MIN_K, MAX_K + 1):
        unnamed_by_edges: dict[int, int] = {}
        for code in connected_codes(k):
            if code in named:
                table[code] = named[code]
            else:
                n_edges = bin(code.bits).count("1")
                i = unnamed_by_edges.get(n_edges, 0)
                unnamed_by_edges[n_edges] = i + 1
                table[code] = f"{k}e{n_edges}-{chr(ord('a') + i)}"
    return table


def alias_of(code: CanonicalCode) -> str:
    return alias_table().get(code, code.to_string())


class TypeRegistry:
    """Dense type indices for canonical codes, with a bounded capacity.

    Up to capacity-1 distinct codes receive stable indices in first-seen
    order; every further novel code maps to the shared overflow index
    capacity-1. Insertion is atomic under an internal lock.
    """

    def __init__(self, capacity: int):
        if capacity < 2:
            raise ValueError("capacity must be at least 2")
        self.capacity = int(capacity)
        self._codes: list[CanonicalCode] = []
        self._index: dict[CanonicalCode, int] = {}
        self._lock = threading.Lock()

    @property
    def overflow_index(self) -> int:
        return self.capacity - 1

    def __len__(self) -> int:
        return len(self._codes)

    def codes(self) -> tuple[CanonicalCode, ...]:
        return tuple(self._codes)

    def index(self, code: CanonicalCode) -> int:
        with self._lock:
            idx = self._index.get(code)
            if idx is not None:
                return idx
            if len(self._codes) < self.capacity - 1:
                idx = len(self._codes)
                self._codes.append(code)
                self._index[code] = idx
                return idx
            return self.overflow_index

    def to_strings(self) -> list[str]:
        return [c.to_string() for c in self._codes]

    @staticmethod
    def from_strings(capacity: int, codes: Sequence[str]) -> "TypeRegistry":
        reg = TypeRegistry(capacity)
        for s in codes:
            reg.index(CanonicalCode.from_string(s))
        return reg


def registry_index(r: TypeRegistry, c: CanonicalCode) -> int:
    """Existing index of c, or insert-if-absent (overflow when full)."""
    return r.index(c)
