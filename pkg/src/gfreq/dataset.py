"""Random-graph dataset generation by degree-preserving rewiring.

Each generated graph starts from the source and applies double edge
swaps: pick two edges (a,b) and (c,d), rewire to (a,d) and (c,b) when
that creates no self-loop or duplicate edge. Swaps preserve every node's
degree exactly, so all generated graphs share the source's degree
sequence and node count (which the shared one-hot feature scheme of the
learned sampler requires). Connectivity is not enforced.

Datasets are split train/valid/test in ratio 8:1:1 (train takes the
remainder) and can be written to / read from a directory:

    manifest.json          provenance and layout
    train/0000.edges ...   one edge-list file per graph
    valid/0000.edges ...
    test/0000.edges ...

Edge files use the plain two-tokens-per-line format with the node index
as the label. The parser assigns indices by first appearance, so the
loader restores the original indexing from the integer labels; the node
count comes from the manifest (swaps cannot create or remove nodes).
"""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .graph import Graph, degree_sequence, parse_edge_list, serialize_edge_list
from . import kernels


@dataclass
class DatasetSplit:
    """Generated graphs plus provenance."""

    train: list
    valid: list
    test: list
    provenance: dict = field(default_factory=dict)

    @property
    def counts(self):
        return (len(self.train), len(self.valid), len(self.test))

    def all_graphs(self):
        return list(self.train) + list(self.valid) + list(self.test)


def source_hash(g):
    """Stable hash of a graph's structure (node count + sorted edges)."""
    h = hashlib.sha256()
    h.update(f"{g.n_nodes}\n".encode())
    h.update(g.edges.astype(np.int64).tobytes())
    return h.hexdigest()


def double_edge_swap(g, n_swaps, seed=0, max_tries=None):
    """Degree-preserving rewiring; returns (new_graph, achieved_swaps).

    Attempts random double edge swaps until n_swaps succeed or max_tries
    attempts (default 100 * n_swaps + 1000) run out; some graphs (stars,
    cliques) admit few or no valid swaps, so achieved_swaps may fall
    short of the request. n_swaps=0 returns an equal graph.
    """
    if g.n_edges < 2:
        raise ValueError("need at least 2 edges to swap")
    if n_swaps < 0:
        raise ValueError(f"swap count must be nonnegative, got {n_swaps}")
    if max_tries is None:
        max_tries = 100 * int(n_swaps) + 1000
    edges = g.edges.astype(np.int64).copy()
    adj = g.adjacency_dense().copy()
    kseed = int(
        np.random.SeedSequence([int(seed) & 0xFFFFFFFF, 29]).generate_state(1)[0]
    )
    achieved = int(
        kernels.swap_chain(edges, adj, int(n_swaps), int(max_tries), kseed)
    )
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    out = Graph(g.n_nodes, np.stack([lo, hi], axis=1), labels=g.labels)
    return out, achieved


def generate_dataset(g, count=1000, seed=0, n_swaps=None):
    """count independent rewirings of g, split 8:1:1.

    Each graph runs its own swap chain (default n_swaps = 10 * edge
    count) under a seed derived from (seed, graph index), so generation
    is deterministic and order-independent. Split sizes: valid and test
    get count // 10 each, train gets the remainder.
    """
    if count < 10:
        raise ValueError(f"count must be at least 10, got {count}")
    if g.n_edges < 2:
        raise ValueError("need at least 2 edges to generate a dataset")
    if n_swaps is None:
        n_swaps = 10 * g.n_edges
    graphs = []
    achieved = []
    for i in range(count):
        gi, ach = double_edge_swap(
            g, n_swaps, seed=int(np.random.SeedSequence(
                [int(seed) & 0xFFFFFFFF, 31, i]
            ).generate_state(1)[0]),
        )
        graphs.append(gi)
        achieved.append(ach)
    n_hold = count // 10
    n_train = count - 2 * n_hold
    split = DatasetSplit(
        train=graphs[:n_train],
        valid=graphs[n_train : n_train + n_hold],
        test=graphs[n_train + n_hold :],
        provenance={
            "schema": 1,
            "source_hash": source_hash(g),
            "n_nodes": g.n_nodes,
            "n_edges": g.n_edges,
            "seed": int(seed),
            "n_swaps": int(n_swaps),
            "count": int(count),
            "counts": {
                "train": n_train,
                "valid": n_hold,
                "test": n_hold,
            },
            "achieved_swaps": achieved,
        },
    )
    return split


SPLIT_NAMES = ("train", "valid", "test")


def save_dataset(split, directory):
    """Write manifest.json plus one edge-list file per graph."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    for name in SPLIT_NAMES:
        sub = root / name
        sub.mkdir(exist_ok=True)
        for i, g in enumerate(getattr(split, name)):
            plain = Graph(g.n_nodes, g.edges)  # integer labels
            (sub / f"{i:04d}.edges").write_text(
                serialize_edge_list(plain), encoding="utf-8"
            )
    manifest = dict(split.provenance)
    manifest["counts"] = {
        name: len(getattr(split, name)) for name in SPLIT_NAMES
    }
    (root / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _reindex_by_labels(g, n_nodes):
    """Restore original node indices from integer labels; the edge-list
    parser numbers nodes by first appearance, which need not match."""
    if g.labels is None:
        raise DataError("dataset edge file lost its node labels")
    try:
        mapping = [int(lab) for lab in g.labels]
    except ValueError as exc:
        raise DataError(
            f"dataset edge file has non-integer node label: {exc}"
        ) from exc
    if g.n_nodes > n_nodes or any(
        not 0 <= m < n_nodes for m in mapping
    ):
        raise DataError("dataset edge file names nodes outside the manifest range")
    remap = np.asarray(mapping, dtype=np.int64)
    edges = remap[g.edges]
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    return Graph(n_nodes, np.stack([lo, hi], axis=1))


def load_dataset(directory):
    """Read a dataset directory written by save_dataset."""
    root = Path(directory)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise DataError(f"no manifest.json in {directory}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise DataError(f"malformed manifest.json: {exc}") from exc
    for key in ("n_nodes", "counts"):
        if key not in manifest:
            raise DataError(f"manifest.json missing {key!r}")
    n_nodes = int(manifest["n_nodes"])
    splits = {}
    for name in SPLIT_NAMES:
        want = int(manifest["counts"].get(name, 0))
        graphs = []
        for i in range(want):
            path = root / name / f"{i:04d}.edges"
            if not path.is_file():
                raise DataError(f"dataset file missing: {path}")
            parsed = parse_edge_list(path.read_text(encoding="utf-8"))
            graphs.append(_reindex_by_labels(parsed, n_nodes))
        splits[name] = graphs
    return DatasetSplit(provenance=manifest, **splits)
