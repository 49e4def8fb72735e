"""Forward pass, relaxed sampling, decoder, loss, and gradient checks."""

import numpy as np
import pytest
from scipy.special import expit, logit as logit_fn

from gfreq.errors import ConfigError, NumericError
from gfreq.exact import exact_distribution
from gfreq.metrics import mse
from gfreq.model import (
    ModelConfig,
    decode_edges,
    elbo_loss,
    estimate_distribution,
    gcn_forward,
    gradient_check,
    init_params,
    keep_logits,
    relaxed_bernoulli,
    sample_subgraph,
)
from gfreq.graph import Graph, is_connected_subset

from conftest import clique, cycle, random_connected_graph


SMALL = ModelConfig(embed_dim=8, hidden_dim=8, mlp_hidden=8, n_types=8)


@pytest.fixture()
def g6():
    return random_connected_graph(6, 9, seed=2)


# ---------------------------------------------------------------- forward

def test_zero_output_head_gives_zero_embeddings(g6):
    params = init_params(6, SMALL, seed=0)
    params.w1[:] = 0.0
    assert np.all(gcn_forward(g6, params) == 0.0)


def test_forward_shape_contract():
    config = ModelConfig(embed_dim=4, hidden_dim=8, mlp_hidden=4, n_types=4)
    g = cycle(5)
    params = init_params(5, config, seed=1)
    z = gcn_forward(g, params)
    assert z.shape == (5, 4)


def test_forward_permutation_equivariance(g6):
    params = init_params(6, SMALL, seed=3)
    z = gcn_forward(g6, params)

    perm = np.array([3, 0, 5, 1, 4, 2])
    edges = [(int(perm[a]), int(perm[b])) for a, b in g6.edges]
    g_perm = Graph(6, edges)
    params_perm = init_params(6, SMALL, seed=3)
    params_perm.w0[perm] = params_perm.w0[np.arange(6)].copy()

    z_perm = gcn_forward(g_perm, params_perm)
    assert np.allclose(z_perm[perm], z, atol=1e-12)


def test_forward_rejects_wrong_node_count(g6):
    params = init_params(7, SMALL, seed=0)
    with pytest.raises(ConfigError):
        gcn_forward(g6, params)


# ------------------------------------------------------- relaxed bernoulli

def test_relaxed_bernoulli_at_half_noise():
    for logit in (-1.3, 0.0, 2.7):
        for tau in (0.1, 0.5, 1.0):
            got = relaxed_bernoulli(np.array([logit]), tau, np.array([0.5]))
            assert got[0] == pytest.approx(expit(logit / tau), rel=1e-12)


def test_relaxed_bernoulli_saturates():
    got = relaxed_bernoulli(np.array([80.0]), 0.5, np.array([0.3]))
    assert got[0] > 1 - 1e-12


def test_relaxed_bernoulli_monte_carlo_mean():
    rng = np.random.default_rng(0)
    u = rng.random(100_000)
    vals = relaxed_bernoulli(np.zeros(100_000), 0.1, u)
    assert abs(float(vals.mean()) - 0.5) < 0.01


def test_relaxed_bernoulli_rejects_bad_arguments():
    with pytest.raises(ValueError):
        relaxed_bernoulli(np.array([0.0]), 0.0, np.array([0.5]))
    with pytest.raises(ValueError):
        relaxed_bernoulli(np.array([0.0]), 0.5, np.array([1.0]))


# --------------------------------------------------------- sample_subgraph

def test_sampling_extreme_logits(g6):
    params = init_params(6, SMALL, seed=4)
    z = gcn_forward(g6, params)
    params.keep_w[:] = 0.0

    params.keep_b = -40.0  # keep probability ~ 0
    sub = sample_subgraph(g6, z, params, seed=1)
    assert sub.size == 0

    params.keep_b = 40.0  # keep probability ~ 1
    sub = sample_subgraph(g6, z, params, seed=1)
    assert sub.nodes == tuple(range(6))


def test_sampling_deterministic(g6):
    params = init_params(6, SMALL, seed=5)
    z = gcn_forward(g6, params)
    a = sample_subgraph(g6, z, params, seed=9)
    b = sample_subgraph(g6, z, params, seed=9)
    assert a.nodes == b.nodes
    assert np.array_equal(a.soft_mask, b.soft_mask)
    assert np.array_equal(a.z_s, b.z_s)
    assert np.array_equal(a.z_t, b.z_t)


def test_sampled_subgraph_invariants(g6):
    params = init_params(6, SMALL, seed=6)
    params.keep_b = 1.5  # dense masks so components show up
    z = gcn_forward(g6, params)
    seen = 0
    for seed in range(30):
        sub = sample_subgraph(g6, z, params, seed=seed)
        if sub.size == 0:
            continue
        seen += 1
        assert is_connected_subset(g6, sub.nodes)
        idx = np.asarray(sub.nodes)
        assert np.allclose(sub.z_s, sub.soft_mask[idx] @ z[idx], atol=1e-12)
    assert seen > 0


def test_zs_ignores_embeddings_outside_subgraph(g6):
    # keep decisions driven by the bias alone, so changing non-member
    # embedding rows cannot change the mask; z_s must stay identical
    params = init_params(6, SMALL, seed=7)
    params.keep_w[:] = 0.0
    params.keep_b = 0.5
    z = gcn_forward(g6, params)
    sub = sample_subgraph(g6, z, params, seed=3)
    assert 0 < sub.size < 6
    outside = [v for v in range(6) if v not in sub.nodes]
    z2 = z.copy()
    z2[outside] += 37.0
    sub2 = sample_subgraph(g6, z2, params, seed=3)
    assert sub2.nodes == sub.nodes
    assert np.array_equal(sub2.z_s, sub.z_s)
    assert np.array_equal(sub2.z_t, sub.z_t)


def test_mask_draws_are_independent_across_nodes(g6):
    params = init_params(6, SMALL, seed=8)
    params.keep_w[:] = 0.0
    params.keep_b = 0.0  # keep probability 1/2 per node
    z = gcn_forward(g6, params)
    hard = np.array(
        [
            sample_subgraph(g6, z, params, seed=s).soft_mask
            > params.threshold
            for s in range(2000)
        ]
    )
    assert abs(hard.mean() - 0.5) < 0.05
    corr = np.corrcoef(hard.T.astype(float))
    off = corr[~np.eye(6, dtype=bool)]
    assert np.abs(off).max() < 0.1


# ------------------------------------------------------------- decoder

def test_decode_zero_embedding_row_gives_half(g6):
    params = init_params(6, SMALL, seed=9)
    z = gcn_forward(g6, params)
    z[list(range(6))] = 0.0
    params.keep_w[:] = 0.0
    params.keep_b = 40.0
    sub = sample_subgraph(g6, z, params, seed=0)
    preds = decode_edges(z, [sub], params)[0]
    assert np.allclose(preds.probs, 0.5, atol=1e-12)


def test_decode_one_hot_type_selects_single_interaction(g6):
    params = init_params(6, SMALL, seed=10)
    z = gcn_forward(g6, params)
    sub = sample_subgraph(g6, z, params, seed=1)
    while sub.size < 2:
        sub = sample_subgraph(g6, z, params, seed=int(sub.size) + 2)
    t = 3
    sub.z_t = np.full(params.n_types, -1e6)
    sub.z_t[t] = 1e6
    preds = decode_edges(z, [sub], params)[0]
    idx = np.asarray(sub.nodes)
    zm = z[idx]
    b = zm @ params.interactions[t] @ zm.T
    iu, ju = np.triu_indices(len(idx), 1)
    assert np.allclose(preds.probs, expit(b[iu, ju]), atol=1e-12)


def test_decode_symmetrized_interactions_are_symmetric(g6):
    params = init_params(6, SMALL, seed=11)
    params.interactions = 0.5 * (
        params.interactions + params.interactions.transpose(0, 2, 1)
    )
    z = gcn_forward(g6, params)
    params.keep_w[:] = 0.0
    params.keep_b = 40.0
    sub = sample_subgraph(g6, z, params, seed=2)
    w = np.exp(sub.z_t - sub.z_t.max())
    w /= w.sum()
    ibar = np.tensordot(w, params.interactions, axes=1)
    b = z @ ibar @ z.T
    assert np.allclose(b, b.T, atol=1e-10)


# ------------------------------------------------------------------ loss

def _batchify(g, params, seeds):
    z = gcn_forward(g, params)
    subs = [sample_subgraph(g, z, params, seed=s) for s in seeds]
    subs = [s for s in subs if s.size >= 2]
    assert subs, "need at least one usable subgraph"
    return z, subs, decode_edges(z, subs, params)


def test_elbo_kl_vanishes_at_prior(g6):
    params = init_params(6, SMALL, seed=12)
    params.keep_w[:] = 0.0
    params.keep_b = 0.0  # keep probabilities exactly 1/2
    z, subs, preds = _batchify(g6, params, range(40))
    loss = elbo_loss(g6, subs, preds, z, params)
    adj = g6.adjacency_dense()
    ll, n = 0.0, 0
    for sub, ep in zip(subs, preds):
        a = adj[ep.pairs[:, 0], ep.pairs[:, 1]].astype(float)
        p = np.clip(ep.probs, 1e-7, 1 - 1e-7)
        ll += float(np.sum(a * np.log(p) + (1 - a) * np.log(1 - p)))
        n += len(p)
    assert loss == pytest.approx(-ll / n, abs=1e-12)


def test_elbo_finite_with_saturated_probabilities(g6):
    # probabilities of exactly 0/1 would send the Bernoulli log-likelihood
    # to -inf without clamping; the loss must stay finite either way
    params = init_params(6, SMALL, seed=13)
    z, subs, preds = _batchify(g6, params, range(40))
    adj = g6.adjacency_dense()
    for ep in preds:
        hits = adj[ep.pairs[:, 0], ep.pairs[:, 1]].astype(float)
        ep.probs = hits.copy()  # perfect reconstruction, saturated
    loss_good = elbo_loss(g6, subs, preds, z, params)
    assert np.isfinite(loss_good)
    for ep in preds:
        ep.probs = 1.0 - ep.probs  # perfectly wrong, still saturated
    loss_bad = elbo_loss(g6, subs, preds, z, params)
    assert np.isfinite(loss_bad)
    assert loss_bad > loss_good


def test_elbo_rejects_all_empty(g6):
    params = init_params(6, SMALL, seed=14)
    z = gcn_forward(g6, params)
    empty = sample_subgraph(g6, z, params, seed=0)
    empty.nodes = ()
    preds = decode_edges(z, [empty], params)
    with pytest.raises(NumericError):
        elbo_loss(g6, [empty], preds, z, params)


# -------------------------------------------------------------- gradients

def test_gradient_check_random_init(g6):
    params = init_params(6, SMALL, seed=15)
    err = gradient_check(params, g6, seed=0)
    assert err < 1e-4


def test_gradient_check_zero_interactions(g6):
    params = init_params(6, SMALL, seed=16)
    params.interactions[:] = 0.0
    err = gradient_check(params, g6, seed=1)
    assert err < 1e-4


def test_gradient_check_at_temperature_floor(g6):
    # relaxed sampling keeps usable gradients down to tau = 0.1; colder
    # settings approach hard thresholding and the check loses validity
    config = ModelConfig(
        embed_dim=8, hidden_dim=8, mlp_hidden=8, n_types=8, temperature=0.1
    )
    params = init_params(6, config, seed=17)
    err = gradient_check(params, g6, seed=2)
    assert err < 1e-4


def test_gradient_check_rejects_large_graphs():
    g = random_connected_graph(12, 20, seed=0)
    params = init_params(12, SMALL, seed=0)
    with pytest.raises(ValueError):
        gradient_check(params, g, seed=0)


# ------------------------------------------------------------- estimation

def test_estimate_distribution_basics():
    g = random_connected_graph(20, 45, seed=33)
    params = init_params(20, SMALL, seed=18)
    dist, meta = estimate_distribution(g, params, m_subgraphs=512, seed=0)
    assert not dist.is_empty
    total = sum(dist.freq(code) for code in dist.counts)
    assert total == pytest.approx(1.0)
    assert meta["m_subgraphs"] == 512
    assert meta["kept_4"] + meta["kept_5"] > 0
    assert 0 < meta["kept_fraction"] <= 1.0


def test_estimate_deterministic_and_worker_invariant():
    g = random_connected_graph(20, 45, seed=34)
    params = init_params(20, SMALL, seed=19)
    a, _ = estimate_distribution(g, params, m_subgraphs=256, seed=5)
    b, _ = estimate_distribution(g, params, m_subgraphs=256, seed=5)
    c, _ = estimate_distribution(g, params, m_subgraphs=256, seed=5, workers=3)
    assert a.counts == b.counts == c.counts


def test_estimate_covers_only_size_4_when_graph_caps_components():
    # two disjoint 4-cliques: no connected component can exceed 4 nodes
    edges = [(a, b) for a in range(4) for b in range(a + 1, 4)]
    edges += [(a + 4, b + 4) for a, b in edges]
    g = Graph(8, edges)
    params = init_params(8, SMALL, seed=20)
    params.keep_b = 3.0
    dist, meta = estimate_distribution(g, params, m_subgraphs=512, seed=1)
    assert not dist.is_empty
    assert all(code.k == 4 for code in dist.counts)
    assert meta["kept_5"] == 0


def test_estimate_empty_when_nothing_kept():
    g = random_connected_graph(15, 30, seed=35)
    params = init_params(15, SMALL, seed=21)
    params.keep_w[:] = 0.0
    params.keep_b = -50.0
    dist, meta = estimate_distribution(g, params, m_subgraphs=64, seed=0)
    assert dist.is_empty
    assert meta["kept_4"] == meta["kept_5"] == 0


def test_estimate_rejects_mismatched_params():
    g = random_connected_graph(10, 20, seed=36)
    params = init_params(11, SMALL, seed=0)
    with pytest.raises(ConfigError):
        estimate_distribution(g, params, m_subgraphs=16, seed=0)


def test_estimate_weighted_tracks_exact():
    g = random_connected_graph(30, 65, seed=37)
    params = init_params(30, SMALL, seed=22)
    dist, _ = estimate_distribution(g, params, m_subgraphs=4096, seed=3)
    err = mse(dist, exact_distribution(g, (4, 5)))
    assert err < 5e-3, f"untrained weighted estimate MSE {err:.2e}"


def test_estimate_relabeling_invariant_in_distribution():
    g = random_connected_graph(10, 18, seed=38)
    params = init_params(10, SMALL, seed=23)
    perm = np.random.default_rng(1).permutation(10)
    g_perm = Graph(10, [(int(perm[a]), int(perm[b])) for a, b in g.edges])
    params_perm = init_params(10, SMALL, seed=23)
    params_perm.w0[perm] = params_perm.w0[np.arange(10)].copy()

    def mean_freqs(graph, p):
        sums = {}
        n_seeds = 12
        for seed in range(n_seeds):
            d, _ = estimate_distribution(graph, p, m_subgraphs=1024, seed=seed)
            for code in d.counts:
                sums[code] = sums.get(code, 0.0) + d.freq(code)
        return {c: v / n_seeds for c, v in sums.items()}

    fa = mean_freqs(g, params)
    fb = mean_freqs(g_perm, params_perm)
    gap = max(
        abs(fa.get(c, 0.0) - fb.get(c, 0.0)) for c in set(fa) | set(fb)
    )
    assert gap < 0.05, f"relabeled estimate drifted by {gap:.3f}"
