"""Exact subgraph-type distributions.

Two independent enumeration strategies over connected induced k-node
subgraphs (k in 3..5):

- enumerate_connected: exclusive-neighborhood extension (each subgraph is
  generated exactly once from its smallest node), runs through the kernel
  dispatch layer;
- brute_force_distribution: itertools.combinations over all k-subsets with
  a BFS connectivity check, capped at 20 nodes. Slow on purpose; exists to
  cross-check the fast path.

Both report counts per canonical type code, wrapped in the
FrequencyDistribution container used across the package.
"""

import itertools
import math

import numpy as np

from .canon import (
    CanonicalCode,
    alias_of,
    canonical_table,
    classify_connected,
)
from .graph import is_connected_subset
from . import kernels


class FrequencyDistribution:
    """Normalized frequencies of subgraph type codes.

    counts maps CanonicalCode to a nonnegative count. Counts may be real
    valued (weighted estimators scale them), but every frequency always
    equals count / total where total is the sum of all counts.
    `partial` flags distributions that cover only part of the requested
    size set (for example when one size received no samples).
    """

    __slots__ = ("counts", "k_set", "partial", "_total")

    def __init__(self, counts, k_set, partial=False):
        self.counts = dict(counts)
        self.k_set = tuple(sorted(set(k_set)))
        self.partial = bool(partial)
        total = 0.0
        for code, c in self.counts.items():
            if c < 0:
                raise ValueError(f"negative count for {code.to_string()}")
            total += c
        self._total = total

    @property
    def total(self):
        return self._total

    @property
    def is_empty(self):
        return self._total == 0

    def freq(self, code):
        """Frequency of one code (0.0 for codes never observed)."""
        if self._total == 0:
            return 0.0
        return self.counts.get(code, 0.0) / self._total

    def freq_by_alias(self, name):
        """Frequency looked up by human-readable alias (0.0 when absent)."""
        for code in self.counts:
            if alias_of(code) == name:
                return self.freq(code)
        return 0.0

    def entries(self):
        """(code, count, freq) rows sorted by descending frequency;
        ties broken by ascending code string."""
        rows = [
            (code, c, self.freq(code))
            for code, c in self.counts.items()
        ]
        rows.sort(key=lambda r: (-r[2], r[0].to_string()))
        return rows

    def to_json_dict(self):
        total = self._total
        if total == int(total):
            total = int(total)
        entries = []
        for code, count, freq in self.entries():
            if count == int(count):
                count = int(count)
            entries.append(
                {
                    "code": code.to_string(),
                    "alias": alias_of(code),
                    "count": count,
                    "freq": freq,
                }
            )
        return {
            "schema": 1,
            "k_set": list(self.k_set),
            "total": total,
            "entries": entries,
        }

    def __repr__(self):
        return (
            f"FrequencyDistribution(k_set={self.k_set}, "
            f"types={len(self.counts)}, total={self._total})"
        )


def _validate_k(k):
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise ValueError(f"subgraph size must be an integer, got {k!r}")
    if k < 3 or k > 5:
        raise ValueError(f"subgraph size must be 3, 4 or 5, got {k}")
    return int(k)


def _validate_k_set(k_set):
    ks = tuple(sorted({_validate_k(k) for k in k_set}))
    if not ks:
        raise ValueError("empty size set")
    return ks


def _group_raw_counts(raw, k):
    """Collapse raw-bitmask counts onto canonical codes."""
    canon = canonical_table(k)
    out = {}
    for mask in np.nonzero(raw)[0]:
        code = CanonicalCode(k, int(canon[mask]))
        out[code] = out.get(code, 0) + int(raw[mask])
    return out


def enumerate_connected(g, k):
    """Exact counts of connected k-node induced subgraphs per type code."""
    k = _validate_k(k)
    n_masks = 1 << (k * (k - 1) // 2)
    raw = np.zeros(n_masks, np.int64)
    if g.n_nodes >= k:
        kernels.esu_count(g.indptr, g.indices, g.adjacency_dense(), k, raw)
    return _group_raw_counts(raw, k)


def exact_distribution(g, k_set=(4, 5)):
    """Exact normalized type distribution over the given sizes."""
    ks = _validate_k_set(k_set)
    counts = {}
    for k in ks:
        for code, c in enumerate_connected(g, k).items():
            counts[code] = counts.get(code, 0) + c
    return FrequencyDistribution(counts, ks)


def brute_force_distribution(g, k_set=(4, 5)):
    """Reference enumeration over all k-subsets. Refuses graphs with more
    than 20 nodes; the subset count grows too fast beyond that."""
    ks = _validate_k_set(k_set)
    if g.n_nodes > 20:
        raise ValueError(
            f"brute force is capped at 20 nodes, graph has {g.n_nodes}"
        )
    counts = {}
    nodes = range(g.n_nodes)
    for k in ks:
        for combo in itertools.combinations(nodes, k):
            if not is_connected_subset(g, combo):
                continue
            code = classify_connected(g, combo)
            counts[code] = counts.get(code, 0) + 1
    return FrequencyDistribution(counts, ks)


def total_subsets(n, k):
    """Number of k-subsets of n nodes (0 when n < k)."""
    if n < k:
        return 0
    return math.comb(n, k)
