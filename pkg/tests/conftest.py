"""Shared test fixtures and graph builders."""

import numpy as np
import pytest

from gfreq.graph import Graph


def cycle(n):
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def path(n):
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def star(n_leaves):
    """Center 0 plus n_leaves leaves."""
    return Graph(n_leaves + 1, [(0, i) for i in range(1, n_leaves + 1)])


def clique(n):
    return Graph(n, [(a, b) for a in range(n) for b in range(a + 1, n)])


def two_triangles():
    return Graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])


def random_connected_graph(n, m, seed):
    """Random tree plus extra edges; m >= n-1 for connectivity."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    edges = set()
    for i in range(1, n):
        j = int(order[rng.integers(0, i)])
        a, b = sorted((int(order[i]), j))
        edges.add((a, b))
    limit = n * (n - 1) // 2
    target = min(m, limit)
    while len(edges) < target:
        a, b = (int(x) for x in rng.integers(0, n, 2))
        if a != b:
            edges.add((min(a, b), max(a, b)))
    return Graph(n, sorted(edges))


def random_graph(n, p, seed):
    """Bernoulli edge graph; may be disconnected."""
    rng = np.random.default_rng(seed)
    edges = [
        (a, b)
        for a in range(n)
        for b in range(a + 1, n)
        if rng.random() < p
    ]
    return Graph(n, edges)


@pytest.fixture(scope="session")
def benchmark_scale_source():
    """Synthetic connected graph matching the 252-node / 397-edge scale."""
    g = random_connected_graph(252, 397, seed=2024)
    assert g.n_nodes == 252 and g.n_edges == 397
    return g


@pytest.fixture(scope="session")
def toy_trained(tmp_path_factory):
    """A small trained checkpoint + dataset directory for CLI/bench tests."""
    from gfreq.dataset import generate_dataset, save_dataset
    from gfreq.graph import serialize_edge_list
    from gfreq.training import TrainConfig, save_checkpoint, train

    source = random_connected_graph(30, 60, seed=77)
    split = generate_dataset(source, count=10, seed=4)
    config = TrainConfig(
        embed_dim=16,
        hidden_dim=16,
        mlp_hidden=16,
        epochs=2,
        n_subgraphs=96,
        seed=0,
    )
    params, log_rows = train(split.train, config)
    root = tmp_path_factory.mktemp("toy")
    ckpt = root / "toy.npz"
    save_checkpoint(params, ckpt)
    ds_dir = root / "ds"
    save_dataset(split, ds_dir)
    graph_path = root / "source.edges"
    graph_path.write_text(serialize_edge_list(source), encoding="utf-8")
    return {
        "source": source,
        "split": split,
        "params": params,
        "log_rows": log_rows,
        "config": config,
        "checkpoint": ckpt,
        "dataset_dir": ds_dir,
        "graph_path": graph_path,
    }
