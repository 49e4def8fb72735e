"""Uniform-subset and random-walk baseline samplers."""

import pytest

from gfreq.baselines import (
    combined_baseline_distribution,
    mhrw_sample,
    naive_sample,
)
from gfreq.errors import DataError
from gfreq.exact import exact_distribution
from gfreq.metrics import mse

from conftest import clique, cycle, random_connected_graph, two_triangles


# ---------------------------------------------------------------- naive

def test_naive_on_clique_all_k4():
    dist, meta = naive_sample(clique(5), 4, 2000, seed=1)
    assert meta["acceptance_rate"] == 1.0
    assert dist.freq_by_alias("4-clique") == 1.0


def test_naive_on_cycle_all_paths():
    dist, meta = naive_sample(cycle(5), 4, 10_000, seed=2)
    assert meta["acceptance_rate"] == 1.0
    assert dist.freq_by_alias("4-path") == 1.0


def test_naive_disconnected_graph_rejects_everything():
    dist, meta = naive_sample(two_triangles(), 4, 5000, seed=3)
    assert meta["acceptance_rate"] == 0.0
    assert dist.is_empty


def test_naive_too_few_nodes():
    dist, meta = naive_sample(cycle(4), 5, 100, seed=0)
    assert dist.is_empty
    assert meta["accepted"] == 0


def test_naive_close_to_exact_on_random_graph():
    g = random_connected_graph(20, 45, seed=9)
    dist, _ = naive_sample(g, 4, 300_000, seed=5)
    exact4 = exact_distribution(g, (4,))
    assert mse(dist, exact4) < 1e-4


# ----------------------------------------------------------------- mhrw

def test_mhrw_on_cycle_all_paths():
    dist, _ = mhrw_sample(cycle(5), 4, 10_000, seed=1)
    assert dist.freq_by_alias("4-path") == 1.0


def test_mhrw_single_state_chain():
    # k=5 on C5: the only state is the full cycle; no move exists and the
    # chain must still record samples without crashing
    dist, meta = mhrw_sample(cycle(5), 5, 1000, seed=4)
    assert dist.freq_by_alias("5-cycle") == 1.0
    assert dist.total == 1000
    assert meta["proposals"] == 0


def test_mhrw_close_to_exact_per_size():
    g = random_connected_graph(15, 32, seed=21)
    for k in (4, 5):
        dist, _ = mhrw_sample(g, k, 200_000, seed=8)
        exact_k = exact_distribution(g, (k,))
        worst = max(
            abs(dist.freq(code) - exact_k.freq(code))
            for code in set(dist.counts) | set(exact_k.counts)
        )
        assert worst < 0.01


def test_mhrw_no_connected_subgraph():
    with pytest.raises(DataError):
        mhrw_sample(two_triangles(), 4, 100, seed=0)


# ------------------------------------------------------------- combined

def test_combined_mhrw_recovers_cycle_closed_form():
    dist, _ = combined_baseline_distribution(
        cycle(5), "mhrw", 20_000, 20_000, seed=6
    )
    assert dist.freq_by_alias("4-path") == pytest.approx(5 / 6, abs=1e-9)
    assert dist.freq_by_alias("5-cycle") == pytest.approx(1 / 6, abs=1e-9)


def test_combined_naive_recovers_cycle_closed_form():
    dist, _ = combined_baseline_distribution(
        cycle(5), "naive", 20_000, 20_000, seed=6
    )
    assert dist.freq_by_alias("4-path") == pytest.approx(5 / 6, abs=5e-3)
    assert dist.freq_by_alias("5-cycle") == pytest.approx(1 / 6, abs=5e-3)


def test_combined_deterministic_under_seed():
    g = random_connected_graph(25, 55, seed=30)
    a, _ = combined_baseline_distribution(g, "mhrw", 5000, 5000, seed=42)
    b, _ = combined_baseline_distribution(g, "mhrw", 5000, 5000, seed=42)
    assert a.counts == b.counts
    assert a.to_json_dict() == b.to_json_dict()


def test_combined_zero_budget_is_partial():
    g = random_connected_graph(12, 25, seed=14)
    dist, meta = combined_baseline_distribution(g, "naive", 5000, 0, seed=2)
    assert dist.partial
    assert all(code.k == 4 for code in dist.counts)
    assert set(meta["weights"]) == {"4"}


def test_combined_rejects_unknown_method():
    with pytest.raises(ValueError):
        combined_baseline_distribution(cycle(5), "magic", 10, 10)


def test_combined_mhrw_benchmark_scale_accuracy(benchmark_scale_source):
    g = benchmark_scale_source
    dist, _ = combined_baseline_distribution(
        g, "mhrw", 500_000, 500_000, seed=0
    )
    err = mse(dist, exact_distribution(g, (4, 5)))
    assert err < 5e-3, f"combined mhrw MSE {err:.2e}"
