"""Sampling baselines: uniform subset draws and a subgraph random walk.

Both estimate the frequency distribution of connected 4/5-node induced
subgraph types. Within one size k they produce a histogram over type
codes; combined_baseline_distribution merges the two sizes with weights
proportional to estimated totals of connected k-subgraphs:

- naive: the acceptance rate of uniform k-subset draws times C(n, k)
  estimates the connected-subgraph count directly;
- mhrw: the walk visits states in proportion to a uniform stationary law
  but never reveals totals, so a separate uniform-subset probe supplies
  the acceptance-rate estimate per size.
"""

import math
import time

import numpy as np

from .canon import connectivity_table
from .errors import DataError
from .exact import FrequencyDistribution, _group_raw_counts, total_subsets
from .graph import connected_components
from . import kernels

PROBE_MIN = 50_000
PROBE_MAX = 2_000_000


def _sub_seed(seed, *key):
    """Stable 32-bit kernel seed derived from a user seed and a role key."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, *key])
    return int(ss.generate_state(1)[0])


def _validate_k(k):
    if k not in (3, 4, 5):
        raise ValueError(f"subgraph size must be 3, 4 or 5, got {k}")
    return int(k)


def naive_sample(g, k, n_draws, seed=0):
    """Uniform k-subset sampling.

    Draws n_draws uniform node subsets (Floyd's algorithm, no rejection
    loop), keeps the connected ones, and normalizes their type counts.
    Returns (FrequencyDistribution over {k}, metadata dict). A graph with
    fewer than k nodes yields an empty distribution.
    """
    k = _validate_k(k)
    if n_draws < 1:
        raise ValueError(f"need at least one draw, got {n_draws}")
    t0 = time.perf_counter()
    n_masks = 1 << (k * (k - 1) // 2)
    raw = np.zeros(n_masks, np.int64)
    accepted = 0
    if g.n_nodes >= k:
        conn = connectivity_table(k)
        accepted = int(
            kernels.naive_count(
                g.adjacency_dense(), g.n_nodes, k, int(n_draws),
                _sub_seed(seed, k, 1), conn, raw,
            )
        )
    counts = _group_raw_counts(raw, k)
    dist = FrequencyDistribution(counts, (k,))
    meta = {
        "method": "naive",
        "k": k,
        "samples": int(n_draws),
        "accepted": accepted,
        "acceptance_rate": accepted / n_draws,
        "seed": int(seed),
        "wall_time_s": time.perf_counter() - t0,
    }
    return dist, meta


def _initial_state(g, k, rng, restarts=500):
    """A connected k-subset to start the walk from.

    Random greedy growth from a random node, with bounded restarts; falls
    back to a deterministic component scan so the only failure mode is a
    graph that truly has no connected k-subgraph.
    """
    n = g.n_nodes
    if n >= k:
        for _ in range(restarts):
            nodes = [int(rng.integers(n))]
            in_set = set(nodes)
            while len(nodes) < k:
                frontier = sorted(
                    {int(u) for v in nodes for u in g.neighbors(v)} - in_set
                )
                if not frontier:
                    break
                pick = frontier[int(rng.integers(len(frontier)))]
                nodes.append(pick)
                in_set.add(pick)
            if len(nodes) == k:
                return np.array(sorted(nodes), np.int64)
        for comp in connected_components(g):
            if len(comp) >= k:
                picked = [comp[0]]
                seen = {comp[0]}
                queue = [comp[0]]
                while queue and len(picked) < k:
                    v = queue.pop(0)
                    for u in g.neighbors(v):
                        u = int(u)
                        if u not in seen:
                            seen.add(u)
                            picked.append(u)
                            queue.append(u)
                            if len(picked) == k:
                                break
                return np.array(sorted(picked), np.int64)
    raise DataError(f"graph has no connected {k}-node subgraph")


def mhrw_sample(g, k, n_samples, burn_in=None, seed=0):
    """Metropolis-Hastings random walk over connected k-subsets.

    Runs burn_in unrecorded steps (default 10 * edge count), then counts
    the state's type at each of n_samples further steps. The acceptance
    rule min(1, d(current)/d(proposed)) targets the uniform law over
    connected k-subsets, so normalized visit counts estimate the exact
    within-k distribution. Returns (FrequencyDistribution, metadata).
    """
    k = _validate_k(k)
    if n_samples < 1:
        raise ValueError(f"need at least one sample, got {n_samples}")
    if burn_in is None:
        burn_in = 10 * g.n_edges
    if burn_in < 0:
        raise ValueError(f"burn-in must be nonnegative, got {burn_in}")
    t0 = time.perf_counter()
    rng = np.random.default_rng(
        np.random.SeedSequence([int(seed) & 0xFFFFFFFF, k, 2])
    )
    state0 = _initial_state(g, k, rng)
    conn = connectivity_table(k)
    n_masks = 1 << (k * (k - 1) // 2)
    raw = np.zeros(n_masks, np.int64)
    accepted, proposals = kernels.mhrw_run(
        g.indptr, g.indices, g.adjacency_dense(), k, state0,
        int(n_samples), int(burn_in), _sub_seed(seed, k, 3), conn, raw,
    )
    counts = _group_raw_counts(raw, k)
    dist = FrequencyDistribution(counts, (k,))
    meta = {
        "method": "mhrw",
        "k": k,
        "samples": int(n_samples),
        "burn_in": int(burn_in),
        "accepted": int(accepted),
        "proposals": int(proposals),
        "acceptance_rate": int(accepted) / max(int(proposals), 1),
        "seed": int(seed),
        "wall_time_s": time.perf_counter() - t0,
    }
    return dist, meta


def _probe_rate(g, k, n_draws, seed):
    """Fraction of uniform k-subsets that are connected."""
    n_masks = 1 << (k * (k - 1) // 2)
    raw = np.zeros(n_masks, np.int64)
    conn = connectivity_table(k)
    accepted = int(
        kernels.naive_count(
            g.adjacency_dense(), g.n_nodes, k, int(n_draws),
            _sub_seed(seed, k, 4), conn, raw,
        )
    )
    return accepted / n_draws, accepted


def combined_baseline_distribution(
    g, method, samples_4, samples_5, seed=0, burn_in=None, probe_draws=None
):
    """One distribution over both sizes from a baseline sampler.

    Runs the chosen sampler per size, then merges the per-size histograms
    with weights proportional to estimated totals of connected subgraphs:
    acceptance_rate_k * C(n, k). For mhrw the rate comes from a separate
    uniform probe of probe_draws subsets (default scales with the sample
    budget). A size with a zero budget is skipped and the result is
    flagged partial. Returns (FrequencyDistribution, metadata).
    """
    if method not in ("naive", "mhrw"):
        raise ValueError(f"unknown baseline method {method!r}")
    budgets = {4: int(samples_4), 5: int(samples_5)}
    if all(b <= 0 for b in budgets.values()):
        raise ValueError("at least one size needs a positive sample budget")
    t0 = time.perf_counter()
    per_k = {}
    metas = {}
    for k, budget in budgets.items():
        if budget <= 0:
            continue
        if method == "naive":
            dist, meta = naive_sample(g, k, budget, seed=seed)
            rate = meta["acceptance_rate"]
        else:
            dist, meta = mhrw_sample(g, k, budget, burn_in=burn_in, seed=seed)
            draws = probe_draws
            if draws is None:
                draws = min(PROBE_MAX, max(PROBE_MIN, 10 * budget))
            rate, probe_hits = _probe_rate(g, k, draws, seed)
            if rate == 0.0 and not dist.is_empty:
                draws *= 10
                rate, probe_hits = _probe_rate(g, k, draws, seed + 1)
            meta = dict(meta)
            meta["probe_draws"] = int(draws)
            meta["probe_hits"] = probe_hits
        per_k[k] = (dist, rate)
        metas[str(k)] = meta

    weights = {}
    for k, (dist, rate) in per_k.items():
        est_total = rate * total_subsets(g.n_nodes, k)
        if est_total > 0 and not dist.is_empty:
            weights[k] = est_total
    weight_sum = sum(weights.values())

    counts = {}
    kept_total = 0.0
    for k, (dist, _) in per_k.items():
        kept_total += dist.total
    if weight_sum > 0 and kept_total > 0:
        for k, w in weights.items():
            dist = per_k[k][0]
            share = w / weight_sum
            for code, c in dist.counts.items():
                counts[code] = counts.get(code, 0.0) + share * (c / dist.total)
        counts = {code: v * kept_total for code, v in counts.items()}
    covered = sorted(weights)
    partial = covered != [4, 5]
    out = FrequencyDistribution(counts, covered if covered else (4, 5), partial)
    meta = {
        "method": method,
        "per_k": metas,
        "weights": {str(k): w / weight_sum for k, w in weights.items()}
        if weight_sum > 0
        else {},
        "seed": int(seed),
        "wall_time_s": time.perf_counter() - t0,
    }
    return out, meta
