"""Learned subgraph sampler.

A two-layer graph convolution embeds every node; a linear head turns each
embedding into a keep-logit; relaxed Bernoulli draws produce a soft node
mask whose thresholded largest connected component is the sampled
subgraph. The subgraph embedding (soft-mask-weighted sum of member
embeddings) feeds an MLP over subgraph types, and edge probabilities are
decoded through a type-mixture of bilinear interaction matrices:
p(edge i,j | m) = sigmoid(z_i^T Ibar_m z_j) with
Ibar_m = sum_t softmax(type_logits_m)_t * I_t.

Training maximizes reconstruction likelihood of within-subgraph adjacency
minus a Bernoulli(0.5) KL on the keep probabilities (see training.py for
the optimizer loop and the added size / type-supervision terms).

Estimation draws many masks in parallel slots (kernel path), keeps
components of size 4 or 5, classifies them by exact canonical code, and
reweights the histogram by inverse isolation probability within each size
plus a boundary-extension ratio across sizes; the unweighted histogram is
available behind a flag.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .canon import (
    CanonicalCode,
    TypeRegistry,
    canonical_table,
    classify_connected,
    connectivity_table,
    registry_index,
)
from .errors import ConfigError, NumericError
from .exact import FrequencyDistribution
from .graph import largest_connected_component
from . import kernels


@dataclass
class ModelConfig:
    """Architecture and sampling hyperparameters."""

    embed_dim: int = 256
    hidden_dim: int = 64
    mlp_hidden: int = 64
    n_types: int = 16
    temperature: float = 0.5
    threshold: float = 0.5
    clamp_eps: float = 1e-7
    size_weight: float = 0.1
    size_target: float = 4.5
    size_mode: str = "total"  # "total": soft mass of the whole mask;
    # "component": soft mass of the kept component only
    aux_weight: float = 1.0
    init_keep_prob: float = 0.3
    max_retries: int = 8

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f"threshold must be in (0,1), got {self.threshold}")
        if self.n_types < 2:
            raise ValueError(f"need at least 2 type slots, got {self.n_types}")
        for name in ("embed_dim", "hidden_dim", "mlp_hidden"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.size_mode not in ("total", "component"):
            raise ValueError(f"unknown size_mode {self.size_mode!r}")
        if not 0.0 < self.init_keep_prob < 1.0:
            raise ValueError("init_keep_prob must be in (0,1)")


class GnnsParams:
    """All trainable tensors plus fixed sampling constants.

    w0: (N, hidden)    first conv layer (input features are one-hot, so
                       row i is node i's input embedding)
    w1: (hidden, K)    second conv layer producing node embeddings
    keep_w, keep_b:    K -> 1 linear head mapping embeddings to keep-logits
    mlp_*:             K -> mlp_hidden -> T type head
    interactions:      (T, K, K) bilinear edge decoders, one per type slot
    temperature, threshold: relaxed-Bernoulli temperature and the hard
                       mask threshold
    registry:          type-code registry with capacity T (slot T-1 is the
                       shared overflow slot)
    """

    __slots__ = (
        "w0",
        "w1",
        "keep_w",
        "keep_b",
        "mlp_w1",
        "mlp_b1",
        "mlp_w2",
        "mlp_b2",
        "interactions",
        "temperature",
        "threshold",
        "registry",
    )

    ARRAY_FIELDS = (
        "w0",
        "w1",
        "keep_w",
        "mlp_w1",
        "mlp_b1",
        "mlp_w2",
        "mlp_b2",
        "interactions",
    )

    def __init__(self, arrays, temperature, threshold, registry):
        for name in self.ARRAY_FIELDS:
            setattr(self, name, np.asarray(arrays[name], dtype=np.float64))
        self.keep_b = float(arrays["keep_b"])
        self.temperature = float(temperature)
        self.threshold = float(threshold)
        self.registry = registry

    @property
    def n_nodes(self):
        return self.w0.shape[0]

    @property
    def embed_dim(self):
        return self.w1.shape[1]

    @property
    def n_types(self):
        return self.interactions.shape[0]

    def check_finite(self):
        for name in self.ARRAY_FIELDS:
            if not np.all(np.isfinite(getattr(self, name))):
                raise NumericError(f"non-finite values in parameter {name}")
        if not math.isfinite(self.keep_b):
            raise NumericError("non-finite keep bias")


def init_params(n_nodes, config, seed=0):
    """Random initial parameters for graphs with n_nodes nodes."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 11]))
    h, k, hm, t = (
        config.hidden_dim,
        config.embed_dim,
        config.mlp_hidden,
        config.n_types,
    )
    p0 = config.init_keep_prob
    arrays = {
        "w0": rng.normal(0.0, 0.5, (n_nodes, h)),
        "w1": rng.normal(0.0, math.sqrt(2.0 / h), (h, k)),
        "keep_w": rng.normal(0.0, 0.01, k),
        "keep_b": math.log(p0 / (1.0 - p0)),
        "mlp_w1": rng.normal(0.0, math.sqrt(2.0 / k), (k, hm)),
        "mlp_b1": np.zeros(hm),
        "mlp_w2": rng.normal(0.0, math.sqrt(2.0 / hm), (hm, t)),
        "mlp_b2": np.zeros(t),
        "interactions": rng.normal(0.0, 0.05, (t, k, k)),
    }
    registry = TypeRegistry(capacity=t)
    return GnnsParams(arrays, config.temperature, config.threshold, registry)


def normalized_adjacency(g):
    """Symmetric-normalized adjacency with self-loops, as sparse CSR.

    Cached on the graph (graphs are immutable after construction), since
    repeated estimates on the same graph dominate benchmark runs.
    """
    if g._norm_adj is not None:
        return g._norm_adj
    n = g.n_nodes
    if g.n_edges:
        e = g.edges
        rows = np.concatenate([e[:, 0], e[:, 1], np.arange(n)])
        cols = np.concatenate([e[:, 1], e[:, 0], np.arange(n)])
    else:
        rows = cols = np.arange(n)
    vals = np.ones(len(rows), dtype=np.float64)
    a = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    deg = np.asarray(a.sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(deg)
    d = sp.diags(inv_sqrt)
    g._norm_adj = (d @ a @ d).tocsr()
    return g._norm_adj


def gcn_forward(g, params, a_hat=None):
    """Node embeddings Z = A_hat @ relu(A_hat @ W0) @ W1 (one-hot input).

    a_hat may be passed to reuse a precomputed normalized adjacency.
    """
    if params.w0.shape[0] != g.n_nodes:
        raise ConfigError(
            f"parameters built for {params.w0.shape[0]} nodes, "
            f"graph has {g.n_nodes}"
        )
    if a_hat is None:
        a_hat = normalized_adjacency(g)
    h = a_hat @ params.w0
    np.maximum(h, 0.0, out=h)
    return (a_hat @ h) @ params.w1


def keep_logits(z, params):
    """Scalar keep-logit per node from its embedding row."""
    return z @ params.keep_w + params.keep_b


def relaxed_bernoulli(logit, tau, u):
    """Concrete / relaxed Bernoulli draw: sigmoid((logit + logit(u)) / tau).

    Accepts scalars or broadcastable arrays; u must lie strictly in (0,1).
    """
    if tau <= 0:
        raise ValueError(f"temperature must be > 0, got {tau}")
    u = np.asarray(u, dtype=np.float64)
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise ValueError("uniform draws must lie strictly inside (0,1)")
    noise = np.log(u) - np.log1p(-u)
    return expit((np.asarray(logit, dtype=np.float64) + noise) / tau)


class SampledSubgraph:
    """One sampled subgraph: the largest connected component of the
    thresholded soft mask, plus the embeddings derived from it."""

    __slots__ = ("nodes", "soft_mask", "z_s", "z_t")

    def __init__(self, nodes, soft_mask, z_s, z_t):
        self.nodes = tuple(int(v) for v in nodes)
        self.soft_mask = soft_mask
        self.z_s = z_s
        self.z_t = z_t

    @property
    def size(self):
        return len(self.nodes)

    def __repr__(self):
        return f"SampledSubgraph(nodes={self.nodes})"


def _mlp_forward(z_s, params):
    a1 = z_s @ params.mlp_w1 + params.mlp_b1
    h1 = np.maximum(a1, 0.0)
    return h1 @ params.mlp_w2 + params.mlp_b2


def sample_subgraph(g, z, params, seed=0):
    """Draw one SampledSubgraph from the relaxed node mask.

    Soft mask: relaxed Bernoulli at each node's keep-logit; hard set:
    soft > threshold; nodes: largest connected component of the hard set
    (empty set gives an empty SampledSubgraph; callers resample).
    z_s is the soft-mask-weighted sum of member embedding rows.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 13]))
    logit = keep_logits(z, params)
    u = rng.random(g.n_nodes)
    u = np.clip(u, 1e-12, 1.0 - 1e-12)
    soft = relaxed_bernoulli(logit, params.temperature, u)
    hard = np.nonzero(soft > params.threshold)[0]
    if hard.size == 0:
        z_s = np.zeros(z.shape[1])
        return SampledSubgraph((), soft, z_s, _mlp_forward(z_s, params))
    nodes = largest_connected_component(g, hard.tolist())
    idx = np.asarray(nodes, dtype=np.int64)
    z_s = soft[idx] @ z[idx]
    return SampledSubgraph(nodes, soft, z_s, _mlp_forward(z_s, params))


class EdgePredictions:
    """Edge probabilities for all node pairs inside one subgraph."""

    __slots__ = ("pairs", "probs")

    def __init__(self, pairs, probs):
        self.pairs = pairs
        self.probs = probs


def decode_edges(z, subgraphs, params):
    """Per-pair edge probabilities for each subgraph.

    For subgraph m: p(edge i,j) = sigmoid(z_i^T Ibar_m z_j), where Ibar_m
    mixes the interaction matrices by softmax of the subgraph's type
    logits. Subgraphs with fewer than 2 nodes get empty predictions.
    """
    i_flat = params.interactions.reshape(params.n_types, -1)
    out = []
    for sub in subgraphs:
        if sub.size < 2:
            out.append(
                EdgePredictions(np.empty((0, 2), np.int64), np.empty(0))
            )
            continue
        w = _softmax(sub.z_t)
        ibar = (w @ i_flat).reshape(z.shape[1], z.shape[1])
        idx = np.asarray(sub.nodes, dtype=np.int64)
        zm = z[idx]
        b = zm @ ibar @ zm.T
        iu, ju = np.triu_indices(len(idx), 1)
        pairs = np.stack([idx[iu], idx[ju]], axis=1)
        out.append(EdgePredictions(pairs, expit(b[iu, ju])))
    return out


def _softmax(x):
    x = np.asarray(x, dtype=np.float64)
    m = x.max(axis=-1, keepdims=True)
    e = np.exp(x - m)
    return e / e.sum(axis=-1, keepdims=True)


def _bernoulli_kl_sum(q):
    """Sum over nodes of KL(Bernoulli(q_i) || Bernoulli(0.5))."""
    qc = np.clip(q, 1e-12, 1.0 - 1e-12)
    return float(np.sum(qc * np.log(2.0 * qc) + (1 - qc) * np.log(2.0 * (1 - qc))))


def elbo_loss(
    g,
    subgraphs,
    edge_probs,
    z,
    params,
    clamp_eps=1e-7,
    size_weight=0.0,
    size_target=4.5,
    size_mode="total",
    aux_weight=0.0,
    labels=None,
):
    """Negative ELBO: -(reconstruction mean) + KL.

    Reconstruction: mean Bernoulli log-likelihood of the host adjacency
    over all within-subgraph node pairs, pooled across subgraphs, with
    probabilities clamped to [clamp_eps, 1-clamp_eps]. KL: sum over nodes
    of KL(Bernoulli(keep prob) || Bernoulli(0.5)).

    Optional regularizers used by training (both default off): a size
    penalty size_weight * (mean soft-mask mass - size_target)^2, and a
    type-supervision cross-entropy (mean over subgraphs with labels >= 0)
    scaled by aux_weight.

    Raises NumericError when no subgraph contributes a node pair.
    """
    adj = g.adjacency_dense()
    ll_sum = 0.0
    n_pairs = 0
    for sub, ep in zip(subgraphs, edge_probs):
        if ep.probs.size == 0:
            continue
        a = adj[ep.pairs[:, 0], ep.pairs[:, 1]].astype(np.float64)
        p = np.clip(ep.probs, clamp_eps, 1.0 - clamp_eps)
        ll_sum += float(np.sum(a * np.log(p) + (1 - a) * np.log(1 - p)))
        n_pairs += ep.probs.size
    if n_pairs == 0:
        raise NumericError(
            "all sampled subgraphs are empty or single nodes; "
            "reconstruction loss undefined"
        )
    recon = ll_sum / n_pairs
    q = expit(keep_logits(z, params))
    loss = -recon + _bernoulli_kl_sum(q)

    if size_weight > 0.0 and subgraphs:
        masses = []
        for sub in subgraphs:
            if size_mode == "total":
                masses.append(float(np.sum(sub.soft_mask)))
            else:
                idx = np.asarray(sub.nodes, dtype=np.int64)
                masses.append(float(np.sum(sub.soft_mask[idx])))
        mean_mass = float(np.mean(masses))
        loss += size_weight * (mean_mass - size_target) ** 2

    if aux_weight > 0.0 and labels is not None:
        ce = []
        for sub, lab in zip(subgraphs, labels):
            if lab is None or lab < 0:
                continue
            zt = sub.z_t
            ce.append(float(np.log(np.sum(np.exp(zt - zt.max())))
                            + zt.max() - zt[lab]))
        if ce:
            loss += aux_weight * float(np.mean(ce))
    return float(loss)


def _threshold_probs(logit, temperature, threshold):
    """P(u <= thresh) such that (soft mask > threshold) iff (u > thresh).

    soft = sigmoid((logit + logit(u)) / tau) > theta
      iff  logit(u) > tau * logit(theta) - logit
      iff  u > sigmoid(tau * logit(theta) - logit).
    """
    t_logit = math.log(threshold / (1.0 - threshold))
    thresh = expit(temperature * t_logit - logit)
    return np.clip(thresh, 1e-12, 1.0 - 1e-12)


def estimate_distribution(
    g, params, m_subgraphs=1024, seed=0, weighted=True, workers=1
):
    """Estimate the 4/5-node type distribution with the learned sampler.

    Draws m_subgraphs independent node masks (hard threshold on the
    relaxed Bernoulli, matching sample_subgraph bit-for-bit in decision),
    takes each slot's largest connected component, keeps sizes 4 and 5,
    and classifies every kept component by exact canonical code.

    weighted=True (default) corrects the raw histogram: within a size,
    each component is weighted by the inverse of its isolation
    probability (product of member keep-probs and boundary drop-probs);
    across sizes, the 5-to-4 total ratio is estimated from the identity
      (#4-subgraphs) * E[boundary size | 4] = (#5-subgraphs) * E[connected
      4-subsets | 5].
    weighted=False returns the plain normalized histogram of kept types.

    Slot RNG streams depend only on (seed, absolute slot index), so any
    partition of slots across workers yields identical results; workers
    only sets the partition granularity here.

    Returns (FrequencyDistribution, metadata). Zero kept subgraphs yield
    an empty distribution (is_empty flag).
    """
    if params.n_nodes != g.n_nodes:
        raise ConfigError(
            f"checkpoint built for {params.n_nodes} nodes, "
            f"graph has {g.n_nodes}"
        )
    if m_subgraphs < 1:
        raise ValueError(f"need at least one slot, got {m_subgraphs}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    t0 = time.perf_counter()
    a_hat = normalized_adjacency(g)
    z = gcn_forward(g, params, a_hat=a_hat)
    logit = keep_logits(z, params)
    thresh = _threshold_probs(logit, params.temperature, params.threshold)
    logp_keep = np.log1p(-thresh)
    logp_drop = np.log(thresh)
    conn4 = connectivity_table(4)
    m_subgraphs = int(m_subgraphs)
    out_size = np.zeros(m_subgraphs, np.int64)
    out_mask = np.zeros(m_subgraphs, np.int64)
    out_logw = np.zeros(m_subgraphs, np.float64)
    out_stat = np.zeros(m_subgraphs, np.int64)
    kseed = int(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, 17]).generate_state(1)[0])
    bounds = np.linspace(0, m_subgraphs, int(workers) + 1).astype(np.int64)
    for w in range(int(workers)):
        lo, hi = int(bounds[w]), int(bounds[w + 1])
        if hi <= lo:
            continue
        kernels.mask_components(
            g.indptr, g.indices, g.adjacency_dense(), thresh,
            logp_keep, logp_drop, hi - lo, lo, kseed, 8, conn4,
            out_size[lo:hi], out_mask[lo:hi], out_logw[lo:hi],
            out_stat[lo:hi],
        )
    dist, stats = _distribution_from_slots(
        out_size, out_mask, out_logw, out_stat, weighted
    )
    meta = {
        "method": "gnns",
        "m_subgraphs": m_subgraphs,
        "m_effective": int(np.count_nonzero(out_size)),
        "kept_4": stats["kept_4"],
        "kept_5": stats["kept_5"],
        "kept_fraction": (stats["kept_4"] + stats["kept_5"]) / m_subgraphs,
        "weighted": bool(weighted),
        "size_weight_ratio": stats.get("odds"),
        "workers": int(workers),
        "seed": int(seed),
        "wall_time_s": time.perf_counter() - t0,
    }
    return dist, meta


def _distribution_from_slots(out_size, out_mask, out_logw, out_stat, weighted):
    """Histogram of canonical codes from kernel slot outputs."""
    canon4 = canonical_table(4)
    canon5 = canonical_table(5)
    per_k = {}
    stats = {"kept_4": 0, "kept_5": 0}
    for k, canon in ((4, canon4), (5, canon5)):
        sel = np.nonzero(out_size == k)[0]
        stats[f"kept_{k}"] = int(sel.size)
        if sel.size == 0:
            continue
        codes = canon[out_mask[sel]]
        if weighted:
            a = -out_logw[sel]
            a -= a.max()
            iw = np.exp(a)
        else:
            iw = np.ones(sel.size)
        iw_sum = float(iw.sum())
        freq = {}
        for code_bits in np.unique(codes):
            mask_sel = codes == code_bits
            freq[CanonicalCode(k, int(code_bits))] = float(
                iw[mask_sel].sum() / iw_sum
            )
        mean_stat = float((iw * out_stat[sel]).sum() / iw_sum)
        per_k[k] = (freq, mean_stat, int(sel.size))

    kept_total = stats["kept_4"] + stats["kept_5"]
    if not per_k:
        return FrequencyDistribution({}, (4, 5)), stats

    if len(per_k) == 2:
        ext4 = per_k[4][1]
        c5 = per_k[5][1]
        if weighted and ext4 > 0 and c5 > 0:
            odds = ext4 / c5  # estimated (#5-subgraphs) / (#4-subgraphs)
        else:
            odds = per_k[5][2] / per_k[4][2]
        stats["odds"] = odds
        share = {4: 1.0 / (1.0 + odds), 5: odds / (1.0 + odds)}
        partial = False
    else:
        only_k = next(iter(per_k))
        share = {only_k: 1.0}
        partial = True

    counts = {}
    for k, (freq, _, _) in per_k.items():
        for code, f in freq.items():
            counts[code] = share[k] * f * kept_total
    dist = FrequencyDistribution(counts, tuple(sorted(per_k)), partial)
    return dist, stats


def gradient_check(
    params,
    g,
    seed=0,
    n_slots=6,
    h=1e-4,
    size_weight=0.1,
    size_target=4.5,
    size_mode="total",
    aux_weight=1.0,
    max_attempts=50,
):
    """Max relative error between analytic and central-difference grads.

    Uses the full training loss (reconstruction + KL + size penalty +
    type supervision) on a batch of fixed noise draws, with subgraph
    membership frozen, so the differentiated function is smooth except at
    relu and clamp kinks; noise batches that land within h-width margins
    of those kinks are redrawn (bounded attempts, deterministic
    sub-seeds). Relative error uses denominator max(|a|, |b|, 1e-2):
    the floor keeps near-zero gradient pairs from inflating the ratio
    while still flagging pairwise disagreement above ~1e-6.

    Temperatures well below 0.1 sharpen the soft mask so much that
    finite differences lose accuracy; keep temperature >= 0.1 here.
    """
    from . import training as _training

    if g.n_nodes > 8:
        raise ValueError(
            f"gradient check is meant for graphs with <= 8 nodes, "
            f"got {g.n_nodes}"
        )
    a_hat = normalized_adjacency(g)
    adj = g.adjacency_dense()
    cfg = ModelConfig(
        embed_dim=params.embed_dim,
        hidden_dim=params.w0.shape[1],
        mlp_hidden=params.mlp_w1.shape[1],
        n_types=params.n_types,
        temperature=params.temperature,
        threshold=params.threshold,
        size_weight=size_weight,
        size_target=size_target,
        size_mode=size_mode,
        aux_weight=aux_weight,
    )
    if not _training.params_kink_margin_ok(a_hat, params, margin=10 * h):
        raise NumericError(
            "a first-layer relu pre-activation sits within finite-difference "
            "range of zero for these parameters; re-initialize with another "
            "seed before checking gradients"
        )
    # labels are computed against a registry clone so the check never
    # mutates the caller's registry
    reg_clone = TypeRegistry.from_strings(
        params.registry.capacity, params.registry.to_strings()
    )
    batch = None
    for attempt in range(max_attempts):
        rng = np.random.default_rng(
            np.random.SeedSequence([int(seed), 19, attempt])
        )
        u = np.clip(rng.random((n_slots, g.n_nodes)), 1e-9, 1 - 1e-9)
        cand = _training.build_batch(g, params, cfg, u, registry=reg_clone)
        if cand is None:
            continue
        if _training.batch_margins_ok(g, params, cfg, cand, a_hat, margin=20 * h):
            batch = cand
            break
    if batch is None:
        raise NumericError(
            "could not find a noise batch clear of relu/clamp kinks"
        )

    loss0, _, grads = _training.loss_and_grads(
        adj, a_hat, params, cfg, batch, want_grads=True
    )

    def loss_at(vec):
        p2 = _training.vector_to_params(vec, params)
        val, _, _ = _training.loss_and_grads(
            adj, a_hat, p2, cfg, batch, want_grads=False
        )
        return val

    base = _training.params_to_vector(params)
    analytic = _training.grads_to_vector(grads, params)
    max_rel = 0.0
    for i in range(base.size):
        vp = base.copy()
        vp[i] += h
        vm = base.copy()
        vm[i] -= h
        fd = (loss_at(vp) - loss_at(vm)) / (2 * h)
        denom = max(abs(fd), abs(analytic[i]), 1e-2)
        rel = abs(fd - analytic[i]) / denom
        if rel > max_rel:
            max_rel = rel
    return float(max_rel)
