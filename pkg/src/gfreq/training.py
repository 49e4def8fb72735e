"""Training loop, hand-derived gradients, and checkpointing.

The training objective per graph is

    loss = -recon + KL + size_weight * (mean mask mass - size_target)^2
           + aux_weight * mean type cross-entropy

where recon pools Bernoulli log-likelihood over all node pairs inside the
sampled components, KL is the node-wise Bernoulli(0.5) divergence of the
keep probabilities, the size penalty steers the soft mask mass toward
4/5-node components, and the type head is supervised by exact canonical
codes of the components that came out with 4 or 5 nodes.

Gradients are derived by hand (no autodiff dependency) and validated
against central finite differences by model.gradient_check. Subgraph
membership (the hard component structure) is treated as a constant of the
draw: gradients flow through the soft mask values, not through the
thresholding, which matches the loss being differentiated.
"""

import csv
import io
import json
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .canon import TypeRegistry, classify_connected, registry_index
from .errors import ConfigError, DataError, NumericError
from .graph import Graph
from .model import (
    GnnsParams,
    ModelConfig,
    _bernoulli_kl_sum,
    gcn_forward,
    keep_logits,
    normalized_adjacency,
)
from . import kernels

PARAM_ORDER = (
    "w0",
    "w1",
    "keep_w",
    "keep_b",
    "mlp_w1",
    "mlp_b1",
    "mlp_w2",
    "mlp_b2",
    "interactions",
)

_CHUNK = 128

LOG_COLUMNS = (
    "epoch",
    "mean_loss",
    "recon",
    "kl",
    "aux_type_acc",
    "mean_component_size",
)


@dataclass
class TrainConfig(ModelConfig):
    """ModelConfig plus optimizer and loop settings."""

    epochs: int = 20
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    n_subgraphs: int = 1024
    seed: int = 0

    def __post_init__(self):
        super().__post_init__()
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.lr <= 0:
            raise ValueError(f"learning rate must be > 0, got {self.lr}")
        if self.n_subgraphs < 1:
            raise ValueError("n_subgraphs must be >= 1")


class TrainBatch:
    """Fixed inputs of one loss evaluation: noise, frozen membership,
    component sizes and the supervision labels (-1 where unsupervised)."""

    __slots__ = ("u", "member", "sizes", "labels")

    def __init__(self, u, member, sizes, labels):
        self.u = u
        self.member = member
        self.sizes = sizes
        self.labels = labels

    @property
    def n_slots(self):
        return self.u.shape[0]


def _soft_mask(params, logit, u):
    noise = np.log(u) - np.log1p(-u)
    return expit((logit[None, :] + noise) / params.temperature)


def _mask_rows(g, params, logit, u, threshold):
    """Hard keep + largest-component membership for each noise row."""
    soft = _soft_mask(params, logit, u)
    keep = (soft > threshold).astype(np.uint8)
    n_rows = u.shape[0]
    sizes = np.zeros(n_rows, np.int64)
    member = np.zeros((n_rows, g.n_nodes), np.uint8)
    kernels.keep_components(g.indptr, g.indices, keep, sizes, member)
    return sizes, member


def _labels_for(g, member, sizes, registry):
    labels = np.full(sizes.shape[0], -1, np.int64)
    for m in range(sizes.shape[0]):
        if sizes[m] == 4 or sizes[m] == 5:
            nodes = np.nonzero(member[m])[0]
            code = classify_connected(g, nodes.tolist())
            labels[m] = registry_index(registry, code)
    return labels


def build_batch(g, params, config, u, registry=None):
    """Single-shot batch from given noise: drops empty rows, labels 4/5
    components. Returns None when no row yields a component with >= 2
    nodes (the loss would be undefined)."""
    if registry is None:
        registry = params.registry
    z = gcn_forward(g, params)
    logit = keep_logits(z, params)
    sizes, member = _mask_rows(g, params, logit, u, params.threshold)
    rows = np.nonzero(sizes > 0)[0]
    if rows.size == 0 or int(sizes[rows].max()) < 2:
        return None
    u = u[rows]
    member = member[rows]
    sizes = sizes[rows]
    labels = _labels_for(g, member, sizes, registry)
    return TrainBatch(u, member.astype(np.float64), sizes, labels)


def draw_batch(g, params, config, rng, a_hat=None):
    """Training batch of config.n_subgraphs noise rows with empty-slot
    retries (config.max_retries redraws), then still-empty rows dropped."""
    n = g.n_nodes
    m = config.n_subgraphs
    z = gcn_forward(g, params, a_hat=a_hat)
    logit = keep_logits(z, params)
    u = np.clip(rng.random((m, n)), 1e-9, 1 - 1e-9)
    sizes, member = _mask_rows(g, params, logit, u, params.threshold)
    for _ in range(config.max_retries):
        empty = np.nonzero(sizes == 0)[0]
        if empty.size == 0:
            break
        u_new = np.clip(rng.random((empty.size, n)), 1e-9, 1 - 1e-9)
        s_new, m_new = _mask_rows(g, params, logit, u_new, params.threshold)
        u[empty] = u_new
        sizes[empty] = s_new
        member[empty] = m_new
    rows = np.nonzero(sizes > 0)[0]
    if rows.size == 0:
        raise NumericError(
            "every sampling slot stayed empty after retries; "
            "keep probabilities have collapsed"
        )
    u = u[rows]
    member = member[rows]
    sizes = sizes[rows]
    labels = _labels_for(g, member, sizes, params.registry)
    return TrainBatch(u, member.astype(np.float64), sizes, labels)


def params_kink_margin_ok(a_hat, params, margin):
    """True when no first-layer relu pre-activation lies within `margin`
    of zero. This depends only on the parameters (one-hot input), so a
    violation cannot be fixed by redrawing noise; finite differencing
    such parameters would cross a relu kink."""
    h_pre = a_hat @ params.w0
    return bool(np.min(np.abs(h_pre)) >= margin)


def batch_margins_ok(g, params, config, batch, a_hat, margin):
    """True when the loss is smooth within `margin` of this batch point:
    no MLP relu pre-activation near zero and no edge probability inside
    the sensitive band around the likelihood clamp. Both depend on the
    noise draw, so the finite-difference check retries on failure."""
    z = gcn_forward(g, params, a_hat=a_hat)
    logit = keep_logits(z, params)
    soft = _soft_mask(params, logit, batch.u)
    sm = soft * batch.member
    zs = sm @ z
    a1 = zs @ params.mlp_w1 + params.mlp_b1
    if np.min(np.abs(a1)) < margin:
        return False
    i_flat = params.interactions.reshape(params.n_types, -1)
    h1 = np.maximum(a1, 0.0)
    zt = h1 @ params.mlp_w2 + params.mlp_b2
    w = _softmax_rows(zt)
    k = z.shape[1]
    eps = config.clamp_eps
    for m in range(batch.n_slots):
        if batch.sizes[m] < 2:
            continue
        idx = np.nonzero(batch.member[m])[0]
        ibar = (w[m] @ i_flat).reshape(k, k)
        zm = z[idx]
        b = zm @ ibar @ zm.T
        iu, ju = np.triu_indices(idx.size, 1)
        p = expit(b[iu, ju])
        if np.any((p > eps / 2) & (p < 4 * eps)):
            return False
        if np.any((p > 1 - 4 * eps) & (p < 1 - eps / 2)):
            return False
    return True


def _softmax_rows(x):
    m = x.max(axis=1, keepdims=True)
    e = np.exp(x - m)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grads(adj, a_hat, params, config, batch, want_grads=True):
    """Training loss (and gradients) for one graph and one batch.

    Returns (loss, terms, grads) where terms holds the individual loss
    components plus batch statistics and grads maps parameter names to
    arrays (None when want_grads is False).
    """
    u = batch.u
    member = batch.member
    sizes = batch.sizes
    labels = batch.labels
    n_rows = u.shape[0]
    tau = params.temperature
    eps = config.clamp_eps

    h_pre = a_hat @ params.w0
    h = np.maximum(h_pre, 0.0)
    ah = a_hat @ h
    z = ah @ params.w1
    logit = z @ params.keep_w + params.keep_b
    q = expit(logit)

    noise = np.log(u) - np.log1p(-u)
    s = expit((logit[None, :] + noise) / tau)
    sm = s * member
    zs = sm @ z
    a1 = zs @ params.mlp_w1 + params.mlp_b1
    h1 = np.maximum(a1, 0.0)
    zt = h1 @ params.mlp_w2 + params.mlp_b2
    w = _softmax_rows(zt)

    pair_rows = np.nonzero(sizes >= 2)[0]
    n_pairs_total = int(np.sum(sizes[pair_rows] * (sizes[pair_rows] - 1) // 2))
    if n_pairs_total == 0:
        raise NumericError(
            "all sampled subgraphs are empty or single nodes; "
            "reconstruction loss undefined"
        )

    k_dim = z.shape[1]
    t_dim = params.n_types
    i_flat = params.interactions.reshape(t_dim, k_dim * k_dim)

    ll_sum = 0.0
    dz = np.zeros_like(z) if want_grads else None
    d_i_flat = np.zeros_like(i_flat) if want_grads else None
    d_w_mix = np.zeros((n_rows, t_dim)) if want_grads else None

    for c0 in range(0, pair_rows.size, _CHUNK):
        chunk = pair_rows[c0 : c0 + _CHUNK]
        ibar_flat = w[chunk] @ i_flat
        d_ibar_flat = np.zeros_like(ibar_flat) if want_grads else None
        for ci, m in enumerate(chunk):
            idx = np.nonzero(member[m])[0]
            zm = z[idx]
            ibar = ibar_flat[ci].reshape(k_dim, k_dim)
            b = zm @ ibar @ zm.T
            iu, ju = np.triu_indices(idx.size, 1)
            phi = b[iu, ju]
            p = expit(phi)
            pc = np.clip(p, eps, 1.0 - eps)
            a = adj[idx[iu], idx[ju]].astype(np.float64)
            ll_sum += float(np.sum(a * np.log(pc) + (1 - a) * np.log(1 - pc)))
            if want_grads:
                inside = (p > eps) & (p < 1.0 - eps)
                dphi = (p - a) * inside / n_pairs_total
                gm = np.zeros((idx.size, idx.size))
                gm[iu, ju] = dphi
                dzm = gm @ zm @ ibar.T + gm.T @ zm @ ibar
                dz[idx] += dzm
                d_ibar = zm.T @ gm @ zm
                d_ibar_flat[ci] = d_ibar.ravel()
        if want_grads:
            d_w_mix[chunk] = d_ibar_flat @ i_flat.T
            d_i_flat += w[chunk].T @ d_ibar_flat

    recon = ll_sum / n_pairs_total
    kl = _bernoulli_kl_sum(q)

    if config.size_mode == "total":
        mass = s.sum(axis=1)
    else:
        mass = sm.sum(axis=1)
    mean_mass = float(mass.mean())
    size_term = config.size_weight * (mean_mass - config.size_target) ** 2

    sup = np.nonzero(labels >= 0)[0]
    aux_term = 0.0
    aux_acc = 0.0
    if sup.size > 0:
        zt_sup = zt[sup]
        m_row = zt_sup.max(axis=1)
        lse = np.log(np.sum(np.exp(zt_sup - m_row[:, None]), axis=1)) + m_row
        picked = zt_sup[np.arange(sup.size), labels[sup]]
        aux_term = config.aux_weight * float(np.mean(lse - picked))
        aux_acc = float(np.mean(np.argmax(zt_sup, axis=1) == labels[sup]))

    loss = -recon + kl + size_term + aux_term
    terms = {
        "recon": recon,
        "kl": kl,
        "size": size_term,
        "aux": aux_term,
        "aux_type_acc": aux_acc,
        "n_supervised": int(sup.size),
        "n_pairs": n_pairs_total,
        "mean_component_size": float(sizes.mean()),
        "n_slots": n_rows,
    }
    if not want_grads:
        return loss, terms, None

    # softmax backward for the type mixture, plus supervision
    dzt = w * (d_w_mix - np.sum(d_w_mix * w, axis=1, keepdims=True))
    if sup.size > 0:
        g_sup = w[sup].copy()
        g_sup[np.arange(sup.size), labels[sup]] -= 1.0
        dzt[sup] += (config.aux_weight / sup.size) * g_sup

    dh1 = dzt @ params.mlp_w2.T
    d_mlp_w2 = h1.T @ dzt
    d_mlp_b2 = dzt.sum(axis=0)
    da1 = dh1 * (a1 > 0)
    d_mlp_w1 = zs.T @ da1
    d_mlp_b1 = da1.sum(axis=0)
    dzs = da1 @ params.mlp_w1.T

    dsm = dzs @ z.T
    dz += sm.T @ dzs
    ds = dsm * member
    dmass = 2.0 * config.size_weight * (mean_mass - config.size_target) / n_rows
    if config.size_mode == "total":
        ds += dmass
    else:
        ds += dmass * member

    dlogit = np.sum(ds * s * (1.0 - s), axis=0) / tau
    dlogit += q * (1.0 - q) * logit  # KL term

    dz += np.outer(dlogit, params.keep_w)
    d_keep_w = z.T @ dlogit
    d_keep_b = float(dlogit.sum())

    d_w1 = ah.T @ dz
    dah = dz @ params.w1.T
    dh = a_hat @ dah  # a_hat is symmetric
    dh_pre = dh * (h_pre > 0)
    d_w0 = a_hat @ dh_pre

    grads = {
        "w0": d_w0,
        "w1": d_w1,
        "keep_w": d_keep_w,
        "keep_b": d_keep_b,
        "mlp_w1": d_mlp_w1,
        "mlp_b1": d_mlp_b1,
        "mlp_w2": d_mlp_w2,
        "mlp_b2": d_mlp_b2,
        "interactions": d_i_flat.reshape(params.interactions.shape),
    }
    return loss, terms, grads


def params_to_vector(params):
    parts = []
    for name in PARAM_ORDER:
        val = getattr(params, name)
        if name == "keep_b":
            parts.append(np.array([val]))
        else:
            parts.append(np.asarray(val).ravel())
    return np.concatenate(parts)


def vector_to_params(vec, template):
    arrays = {}
    pos = 0
    for name in PARAM_ORDER:
        if name == "keep_b":
            arrays[name] = float(vec[pos])
            pos += 1
        else:
            shape = getattr(template, name).shape
            size = int(np.prod(shape))
            arrays[name] = vec[pos : pos + size].reshape(shape).copy()
            pos += size
    return GnnsParams(
        arrays, template.temperature, template.threshold, template.registry
    )


def grads_to_vector(grads, template):
    parts = []
    for name in PARAM_ORDER:
        val = grads[name]
        if name == "keep_b":
            parts.append(np.array([val]))
        else:
            parts.append(np.asarray(val).ravel())
    return np.concatenate(parts)


class _Adam:
    def __init__(self, params, config):
        self.lr = config.lr
        self.b1 = config.beta1
        self.b2 = config.beta2
        self.eps = config.adam_eps
        self.t = 0
        self.m = {}
        self.v = {}
        for name in PARAM_ORDER:
            val = getattr(params, name)
            shape = () if name == "keep_b" else np.asarray(val).shape
            self.m[name] = np.zeros(shape)
            self.v[name] = np.zeros(shape)

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for name in PARAM_ORDER:
            grad = grads[name]
            self.m[name] = self.b1 * self.m[name] + (1 - self.b1) * grad
            self.v[name] = self.b2 * self.v[name] + (1 - self.b2) * np.square(
                grad
            )
            update = (
                self.lr
                * (self.m[name] / c1)
                / (np.sqrt(self.v[name] / c2) + self.eps)
            )
            if name == "keep_b":
                params.keep_b = params.keep_b - float(update)
            else:
                setattr(params, name, getattr(params, name) - update)


def train(dataset, config):
    """Train on a list of graphs sharing one node count.

    Returns (params, log_rows) where log_rows is a list of per-epoch
    dicts with the LOG_COLUMNS keys. Raises NumericError when the loss
    diverges (NaN/Inf).
    """
    if not dataset:
        raise ValueError("training needs at least one graph")
    n = dataset[0].n_nodes
    for g in dataset:
        if not isinstance(g, Graph):
            raise ValueError("dataset entries must be Graph objects")
        if g.n_nodes != n:
            raise ConfigError(
                "all training graphs must share one node count "
                f"(saw {n} and {g.n_nodes})"
            )
    params = init_params_for(n, config)
    a_hats = [normalized_adjacency(g) for g in dataset]
    adjs = [g.adjacency_dense() for g in dataset]
    rng = np.random.default_rng(
        np.random.SeedSequence([int(config.seed) & 0xFFFFFFFF, 23])
    )
    opt = _Adam(params, config)
    log_rows = []
    for epoch in range(1, config.epochs + 1):
        losses = []
        recons = []
        kls = []
        accs = []
        comp_sizes = []
        for gi, g in enumerate(dataset):
            batch = draw_batch(g, params, config, rng, a_hat=a_hats[gi])
            loss, terms, grads = loss_and_grads(
                adjs[gi], a_hats[gi], params, config, batch, want_grads=True
            )
            if not np.isfinite(loss):
                raise NumericError(
                    f"loss diverged at epoch {epoch}, graph {gi}: {loss}"
                )
            opt.step(params, grads)
            losses.append(loss)
            recons.append(terms["recon"])
            kls.append(terms["kl"])
            if terms["n_supervised"] > 0:
                accs.append(terms["aux_type_acc"])
            comp_sizes.append(terms["mean_component_size"])
        params.check_finite()
        log_rows.append(
            {
                "epoch": epoch,
                "mean_loss": float(np.mean(losses)),
                "recon": float(np.mean(recons)),
                "kl": float(np.mean(kls)),
                "aux_type_acc": float(np.mean(accs)) if accs else 0.0,
                "mean_component_size": float(np.mean(comp_sizes)),
            }
        )
    return params, log_rows


def init_params_for(n_nodes, config):
    from .model import init_params

    return init_params(n_nodes, config, seed=config.seed)


def format_log_csv(log_rows):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=LOG_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in log_rows:
        writer.writerow({c: row[c] for c in LOG_COLUMNS})
    return buf.getvalue()


CHECKPOINT_SCHEMA = 1


def save_checkpoint(params, path):
    """Write all parameter tensors plus sampling constants and the type
    registry to a single .npz file."""
    meta = {
        "schema": CHECKPOINT_SCHEMA,
        "n_nodes": params.n_nodes,
        "hidden_dim": int(params.w0.shape[1]),
        "embed_dim": params.embed_dim,
        "mlp_hidden": int(params.mlp_w1.shape[1]),
        "n_types": params.n_types,
        "temperature": params.temperature,
        "threshold": params.threshold,
        "registry": params.registry.to_strings(),
    }
    arrays = {name: getattr(params, name) for name in GnnsParams.ARRAY_FIELDS}
    arrays["keep_b"] = np.array(params.keep_b)
    arrays["meta_json"] = np.frombuffer(
        json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8
    )
    np.savez_compressed(path, **arrays)


def load_checkpoint(path, expect_n_nodes=None):
    """Load a checkpoint written by save_checkpoint.

    Raises DataError for malformed files and ConfigError when the stored
    node count does not match expect_n_nodes.
    """
    try:
        data = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from exc
    try:
        meta = json.loads(bytes(data["meta_json"]).decode())
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path} is not a valid checkpoint") from exc
    if meta.get("schema") != CHECKPOINT_SCHEMA:
        raise DataError(
            f"unsupported checkpoint schema {meta.get('schema')!r}"
        )
    missing = [
        name
        for name in GnnsParams.ARRAY_FIELDS + ("keep_b",)
        if name not in data
    ]
    if missing:
        raise DataError(f"checkpoint missing arrays: {', '.join(missing)}")
    registry = TypeRegistry.from_strings(meta["n_types"], meta["registry"])
    arrays = {name: data[name] for name in GnnsParams.ARRAY_FIELDS}
    arrays["keep_b"] = float(data["keep_b"])
    params = GnnsParams(
        arrays, meta["temperature"], meta["threshold"], registry
    )
    if params.n_nodes != meta["n_nodes"]:
        raise DataError("checkpoint metadata disagrees with tensor shapes")
    if expect_n_nodes is not None and params.n_nodes != expect_n_nodes:
        raise ConfigError(
            f"checkpoint built for {params.n_nodes} nodes, "
            f"expected {expect_n_nodes}"
        )
    return params
