"""Dataset generation: degree-preserving swaps, splits, disk roundtrip."""

import json

import numpy as np
import pytest

from gfreq import (
    DataError,
    Graph,
    classify_connected,
    degree_sequence,
    double_edge_swap,
    generate_dataset,
    load_dataset,
    save_dataset,
)
from gfreq.dataset import source_hash

from conftest import cycle, random_connected_graph, random_graph, star


def edge_set(g):
    return set(map(tuple, g.edges.tolist()))


def test_degree_sequence_preserved_on_100_random_graphs():
    rng = np.random.default_rng(11)
    checked = 0
    for trial in range(100):
        n = int(rng.integers(8, 24))
        m = int(rng.integers(n, min(3 * n, n * (n - 1) // 2)))
        g = random_connected_graph(n, m, seed=trial)
        out, achieved = double_edge_swap(g, 3 * g.n_edges, seed=trial)
        assert degree_sequence(out) == degree_sequence(g)
        assert out.n_nodes == g.n_nodes
        assert out.n_edges == g.n_edges
        checked += 1 if achieved > 0 else 0
    # the vast majority of random graphs admit plenty of swaps
    assert checked >= 95


def test_swaps_keep_graph_simple():
    g = random_connected_graph(12, 30, seed=3)
    for seed in range(20):
        out, _ = double_edge_swap(g, 200, seed=seed)
        assert np.all(out.edges[:, 0] < out.edges[:, 1])  # no self-loops
        assert len(edge_set(out)) == out.n_edges  # no duplicates


def test_cycle_stays_a_cycle():
    # the only 2-regular graph on 5 nodes is the 5-cycle, so any number
    # of degree-preserving swaps must leave C5 isomorphic to itself
    g = cycle(5)
    for seed in range(30):
        out, _ = double_edge_swap(g, 50, seed=seed)
        assert degree_sequence(out) == [2, 2, 2, 2, 2]
        assert str(classify_connected(out, (0, 1, 2, 3, 4))) == "5:dc"


def test_zero_swaps_is_identity():
    g = random_connected_graph(10, 20, seed=1)
    out, achieved = double_edge_swap(g, 0, seed=9)
    assert achieved == 0
    assert np.array_equal(out.edges, g.edges)


def test_star_admits_no_swaps():
    # every pair of star edges shares the hub, so each proposed rewiring
    # hits a self-loop or duplicate; the chain gives up and reports 0
    g = star(6)
    out, achieved = double_edge_swap(g, 25, seed=0, max_tries=5000)
    assert achieved == 0
    assert np.array_equal(out.edges, g.edges)


def test_swap_rejects_tiny_or_negative():
    with pytest.raises(ValueError):
        double_edge_swap(Graph(3, [(0, 1)]), 5)
    with pytest.raises(ValueError):
        double_edge_swap(cycle(5), -1)


def test_swap_determinism():
    g = random_connected_graph(15, 40, seed=8)
    a, ach_a = double_edge_swap(g, 300, seed=123)
    b, ach_b = double_edge_swap(g, 300, seed=123)
    c, _ = double_edge_swap(g, 300, seed=124)
    assert ach_a == ach_b
    assert np.array_equal(a.edges, b.edges)
    assert not np.array_equal(a.edges, c.edges)


def test_split_arithmetic_small():
    g = random_connected_graph(10, 20, seed=2)
    split = generate_dataset(g, count=10, seed=0, n_swaps=5)
    assert split.counts == (8, 1, 1)
    split = generate_dataset(g, count=37, seed=0, n_swaps=0)
    assert split.counts == (31, 3, 3)


def test_split_arithmetic_full_scale():
    # count=1000 must come out 800/100/100; zero-swap chains keep it fast
    g = random_connected_graph(10, 20, seed=2)
    split = generate_dataset(g, count=1000, seed=0, n_swaps=0)
    assert split.counts == (800, 100, 100)
    assert len(split.all_graphs()) == 1000


def test_generate_rejects_small_count():
    g = random_connected_graph(10, 20, seed=2)
    with pytest.raises(ValueError):
        generate_dataset(g, count=9, seed=0)


def test_generated_graphs_share_degree_sequence():
    g = random_graph(14, 0.3, seed=6)  # disconnected sources are fine
    want = degree_sequence(g)
    split = generate_dataset(g, count=12, seed=3, n_swaps=40)
    for h in split.all_graphs():
        assert degree_sequence(h) == want


def test_generation_determinism_and_seed_sensitivity():
    g = random_connected_graph(12, 26, seed=4)
    a = generate_dataset(g, count=12, seed=7, n_swaps=60)
    b = generate_dataset(g, count=12, seed=7, n_swaps=60)
    c = generate_dataset(g, count=12, seed=8, n_swaps=60)
    for ga, gb in zip(a.all_graphs(), b.all_graphs()):
        assert np.array_equal(ga.edges, gb.edges)
    assert any(
        not np.array_equal(ga.edges, gc.edges)
        for ga, gc in zip(a.all_graphs(), c.all_graphs())
    )


def test_diversity_of_generated_graphs():
    g = random_connected_graph(30, 60, seed=5)
    split = generate_dataset(g, count=100, seed=0)  # default 10*|E| swaps
    source = edge_set(g)
    different = sum(1 for h in split.all_graphs() if edge_set(h) != source)
    assert different >= 99


def test_provenance_fields():
    g = random_connected_graph(10, 20, seed=2)
    split = generate_dataset(g, count=15, seed=42, n_swaps=30)
    prov = split.provenance
    assert prov["source_hash"] == source_hash(g)
    assert prov["n_nodes"] == 10
    assert prov["n_edges"] == 20
    assert prov["seed"] == 42
    assert prov["n_swaps"] == 30
    assert prov["counts"] == {"train": 13, "valid": 1, "test": 1}
    assert len(prov["achieved_swaps"]) == 15


def test_source_hash_structure_only():
    g = Graph(4, [(0, 1), (1, 2)], labels=("a", "b", "c", "d"))
    h = Graph(4, [(0, 1), (1, 2)], labels=("w", "x", "y", "z"))
    other = Graph(4, [(0, 1), (2, 3)])
    assert source_hash(g) == source_hash(h)
    assert source_hash(g) != source_hash(other)


def test_save_load_roundtrip(tmp_path):
    g = random_connected_graph(16, 36, seed=9)
    split = generate_dataset(g, count=12, seed=1, n_swaps=50)
    save_dataset(split, tmp_path / "ds")
    loaded = load_dataset(tmp_path / "ds")
    assert loaded.counts == split.counts
    assert loaded.provenance["source_hash"] == split.provenance["source_hash"]
    for name in ("train", "valid", "test"):
        for orig, back in zip(getattr(split, name), getattr(loaded, name)):
            assert back.n_nodes == orig.n_nodes
            assert np.array_equal(back.edges, orig.edges)


def test_roundtrip_preserves_node_indexing(tmp_path):
    # node 0 is isolated and the first edge names high indices, so the
    # parser's first-appearance order differs from the stored indexing;
    # the loader must restore indices from the integer labels
    g = Graph(6, [(4, 5), (1, 2), (2, 3)])
    split = generate_dataset(g, count=10, seed=0, n_swaps=0)
    save_dataset(split, tmp_path / "ds")
    loaded = load_dataset(tmp_path / "ds")
    assert loaded.train[0].n_nodes == 6
    assert np.array_equal(loaded.train[0].edges, g.edges)


def test_load_missing_manifest(tmp_path):
    with pytest.raises(DataError):
        load_dataset(tmp_path)


def test_load_malformed_manifest(tmp_path):
    (tmp_path / "manifest.json").write_text("{not json", encoding="utf-8")
    with pytest.raises(DataError):
        load_dataset(tmp_path)


def test_load_manifest_missing_keys(tmp_path):
    (tmp_path / "manifest.json").write_text(
        json.dumps({"n_nodes": 5}), encoding="utf-8"
    )
    with pytest.raises(DataError):
        load_dataset(tmp_path)


def test_load_missing_graph_file(tmp_path):
    g = random_connected_graph(10, 20, seed=2)
    split = generate_dataset(g, count=10, seed=0, n_swaps=0)
    save_dataset(split, tmp_path / "ds")
    (tmp_path / "ds" / "train" / "0003.edges").unlink()
    with pytest.raises(DataError):
        load_dataset(tmp_path / "ds")


def test_load_rejects_out_of_range_labels(tmp_path):
    g = random_connected_graph(10, 20, seed=2)
    split = generate_dataset(g, count=10, seed=0, n_swaps=0)
    save_dataset(split, tmp_path / "ds")
    (tmp_path / "ds" / "test" / "0000.edges").write_text(
        "3 99\n", encoding="utf-8"
    )
    with pytest.raises(DataError):
        load_dataset(tmp_path / "ds")
