"""Benchmark harness: accuracy (MSE vs exact) and sampling runtime.

For every graph in the evaluation set the exact distribution is computed
once and shared across methods; each requested method then produces its
own estimate, timed with perf_counter around the estimation call only
(for the learned sampler that call spans the network forward pass plus
the mask sampling; graph loading, checkpoint loading, and ground truth
are never inside the clock). The report aggregates per-graph MSEs into
mean/std and sums wall time per method.
"""

import csv
import io
import json
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .baselines import combined_baseline_distribution
from .canon import alias_of
from .errors import ConfigError
from .exact import exact_distribution
from .metrics import mse
from .model import estimate_distribution
from .training import load_checkpoint

METHODS = ("naive", "mhrw", "gnns")

REPORT_COLUMNS = (
    "method",
    "dataset",
    "mse_mean",
    "mse_std",
    "wall_time_s",
    "samples",
    "seed",
)

HISTOGRAM_COLUMNS = ("method", "code", "alias", "freq_mean", "freq_exact")


@dataclass
class BenchConfig:
    """What to benchmark and with which budgets."""

    graphs: list
    dataset: str = "dataset"
    methods: tuple = METHODS
    k_set: tuple = (4, 5)
    samples_4: int = 200_000
    samples_5: int = 200_000
    burn_in: int = None
    m_subgraphs: int = 2048
    weighted: bool = True
    workers: int = 1
    seed: int = 0
    checkpoint: str = None
    params: object = None
    histogram: bool = False
    extra_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.graphs:
            raise ConfigError("benchmark needs at least one graph")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(
                f"unknown benchmark methods {bad}; choose from {list(METHODS)}"
            )
        if not self.methods:
            raise ConfigError("benchmark needs at least one method")


def _graph_seed(seed, index):
    return int(
        np.random.SeedSequence(
            [int(seed) & 0xFFFFFFFF, 37, int(index)]
        ).generate_state(1)[0]
    )


def _gnns_params(config):
    if config.params is not None:
        return config.params
    if config.checkpoint is None:
        raise ConfigError(
            "method 'gnns' needs a trained checkpoint (--checkpoint)"
        )
    path = Path(config.checkpoint)
    if not path.is_file():
        raise ConfigError(f"checkpoint not found: {path}")
    n = config.graphs[0].n_nodes
    return load_checkpoint(path, expect_n_nodes=n)


def _run_method(g, method, config, params, seed):
    """(distribution, elapsed_seconds, samples_budget) for one graph."""
    if method == "gnns":
        t0 = time.perf_counter()
        dist, _meta = estimate_distribution(
            g,
            params,
            m_subgraphs=config.m_subgraphs,
            seed=seed,
            weighted=config.weighted,
            workers=config.workers,
        )
        return dist, time.perf_counter() - t0, config.m_subgraphs
    t0 = time.perf_counter()
    dist, _meta = combined_baseline_distribution(
        g,
        method,
        config.samples_4,
        config.samples_5,
        seed=seed,
        burn_in=config.burn_in,
    )
    elapsed = time.perf_counter() - t0
    return dist, elapsed, config.samples_4 + config.samples_5


def environment_metadata():
    import numpy
    import scipy

    meta = {
        "python": sys.version.split()[0],
        "platform": platform.platform(),
        "machine": platform.machine(),
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "kernels": "numba" if kernels.using_numba() else "python",
    }
    try:
        import numba

        meta["numba"] = numba.__version__
    except ImportError:
        meta["numba"] = None
    return meta


def run_benchmark(config):
    """Evaluate each configured method on every graph; return the report.

    The report dict has schema 1: environment metadata, one summary row
    per method (mse_mean, mse_std over graphs; wall_time_s summed), and
    per-graph MSE detail. With config.histogram=True it also carries
    per-type rows comparing mean estimated frequency to the exact mean,
    suitable for bar charts.
    """
    params = _gnns_params(config) if "gnns" in config.methods else None
    if params is not None:
        for i, g in enumerate(config.graphs):
            if g.n_nodes != params.n_nodes:
                raise ConfigError(
                    f"graph {i} has {g.n_nodes} nodes but the checkpoint "
                    f"was trained for {params.n_nodes}"
                )

    exact = [exact_distribution(g, config.k_set) for g in config.graphs]

    rows = []
    detail = {}
    hist_rows = []
    for method in config.methods:
        errors = []
        elapsed_total = 0.0
        budget = 0
        freq_sums = {}
        for i, g in enumerate(config.graphs):
            seed = _graph_seed(config.seed, i)
            dist, elapsed, budget = _run_method(g, method, config, params, seed)
            elapsed_total += elapsed
            errors.append(mse(dist, exact[i]))
            if config.histogram:
                for code, _count, freq in dist.entries():
                    key = code.to_string()
                    freq_sums[key] = freq_sums.get(key, 0.0) + freq
        rows.append(
            {
                "method": method,
                "dataset": config.dataset,
                "mse_mean": float(np.mean(errors)),
                "mse_std": float(np.std(errors)),
                "wall_time_s": elapsed_total,
                "samples": int(budget),
                "seed": int(config.seed),
            }
        )
        detail[method] = [float(e) for e in errors]
        if config.histogram:
            n = len(config.graphs)
            exact_sums = {}
            for d in exact:
                for code, _count, freq in d.entries():
                    key = code.to_string()
                    exact_sums[key] = exact_sums.get(key, 0.0) + freq
            for key in sorted(set(freq_sums) | set(exact_sums)):
                hist_rows.append(
                    {
                        "method": method,
                        "code": key,
                        "alias": _alias_str(key),
                        "freq_mean": freq_sums.get(key, 0.0) / n,
                        "freq_exact": exact_sums.get(key, 0.0) / n,
                    }
                )

    report = {
        "schema": 1,
        "dataset": config.dataset,
        "n_graphs": len(config.graphs),
        "k_set": list(config.k_set),
        "seed": int(config.seed),
        "environment": environment_metadata(),
        "rows": rows,
        "per_graph_mse": detail,
    }
    if config.extra_meta:
        report["meta"] = dict(config.extra_meta)
    if config.histogram:
        report["histogram"] = hist_rows
    return report


def _alias_str(code_string):
    from .canon import CanonicalCode

    alias = alias_of(CanonicalCode.from_string(code_string))
    return alias if alias is not None else ""


def report_to_csv(report):
    """Summary rows as CSV text (one row per method)."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in report["rows"]:
        writer.writerow({k: row[k] for k in REPORT_COLUMNS})
    return buf.getvalue()


def histogram_to_csv(report):
    """Per-type frequency rows as CSV text; needs histogram=True."""
    if "histogram" not in report:
        raise ConfigError("report has no histogram section")
    buf = io.StringIO()
    writer = csv.DictWriter(
        buf, fieldnames=HISTOGRAM_COLUMNS, lineterminator="\n"
    )
    writer.writeheader()
    for row in report["histogram"]:
        writer.writerow({k: row[k] for k in HISTOGRAM_COLUMNS})
    return buf.getvalue()


def write_report(report, json_path=None, csv_path=None, hist_path=None):
    """Write the report in the requested formats (UTF-8)."""
    if json_path is not None:
        Path(json_path).write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    if csv_path is not None:
        Path(csv_path).write_text(report_to_csv(report), encoding="utf-8")
    if hist_path is not None:
        Path(hist_path).write_text(histogram_to_csv(report), encoding="utf-8")
