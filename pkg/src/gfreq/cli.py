"""Command-line interface.

Subcommands:
    exact               exact subgraph-type distribution of one graph
    sample              estimate the distribution (naive / mhrw / gnns)
    train               train the learned sampler on a dataset directory
    gen-dataset         generate a rewired-graph dataset from a source
    bench               accuracy + runtime comparison on a dataset split
    inspect-checkpoint  describe a trained checkpoint

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
failure. Distribution output is JSON {"schema", "distribution", "meta"};
the "distribution" object is deterministic for fixed seed and
--workers=1, while "meta" carries wall times and budgets.
"""

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

from . import __version__
from .baselines import combined_baseline_distribution
from .bench import BenchConfig, run_benchmark, report_to_csv, write_report
from .canon import alias_of
from .dataset import generate_dataset, load_dataset, save_dataset, source_hash
from .errors import ConfigError, DataError, NumericError
from .exact import exact_distribution
from .graph import parse_edge_list
from .model import estimate_distribution
from .training import (
    TrainConfig,
    format_log_csv,
    load_checkpoint,
    save_checkpoint,
    train,
)

K_CHOICES = (4, 5)


def _load_graph(path):
    text = Path(path).read_text(encoding="utf-8")
    g = parse_edge_list(text)
    if g.n_nodes == 0:
        raise DataError(f"{path} contains no edges")
    return g


def _parse_k_set(text):
    try:
        ks = sorted({int(tok) for tok in text.split(",") if tok.strip()})
    except ValueError:
        raise ConfigError(f"bad --k value {text!r}; use e.g. 4 or 4,5")
    if not ks or any(k not in K_CHOICES for k in ks):
        raise ConfigError(f"--k must name sizes from {K_CHOICES}, got {text!r}")
    return tuple(ks)


def _distribution_payload(dist, meta):
    return {"schema": 1, "distribution": dist.to_json_dict(), "meta": meta}


def _distribution_csv(dist):
    buf = io.StringIO()
    writer = csv.DictWriter(
        buf, fieldnames=("code", "alias", "count", "freq"), lineterminator="\n"
    )
    writer.writeheader()
    for entry in dist.to_json_dict()["entries"]:
        writer.writerow(entry)
    return buf.getvalue()


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(out).write_text(text, encoding="utf-8")


def _emit_distribution(dist, meta, args):
    if args.format == "csv":
        _emit(_distribution_csv(dist), args.out)
    else:
        payload = _distribution_payload(dist, meta)
        _emit(json.dumps(payload, indent=2, sort_keys=True), args.out)


def cmd_exact(args):
    g = _load_graph(args.graph)
    k_set = _parse_k_set(args.k)
    t0 = time.perf_counter()
    dist = exact_distribution(g, k_set)
    meta = {
        "method": "exact",
        "k_set": list(k_set),
        "n_nodes": g.n_nodes,
        "n_edges": g.n_edges,
        "wall_time_s": time.perf_counter() - t0,
    }
    _emit_distribution(dist, meta, args)
    return 0


def cmd_sample(args):
    g = _load_graph(args.graph)
    k_set = _parse_k_set(args.k)
    if args.method == "gnns":
        if k_set != (4, 5):
            raise ConfigError("the gnns sampler always estimates sizes 4,5")
        if args.checkpoint is None:
            raise ConfigError("--method gnns needs --checkpoint")
        path = Path(args.checkpoint)
        if not path.is_file():
            raise ConfigError(f"checkpoint not found: {path}")
        params = load_checkpoint(path, expect_n_nodes=g.n_nodes)
        dist, meta = estimate_distribution(
            g,
            params,
            m_subgraphs=args.samples,
            seed=args.seed,
            weighted=not args.unweighted,
            workers=args.workers,
        )
    else:
        samples = {k: (args.samples if k in k_set else 0) for k in K_CHOICES}
        dist, meta = combined_baseline_distribution(
            g,
            args.method,
            samples[4],
            samples[5],
            seed=args.seed,
            burn_in=args.burn_in,
        )
    _emit_distribution(dist, meta, args)
    return 0


def cmd_train(args):
    split = load_dataset(args.dataset_dir)
    if not split.train:
        raise DataError(f"{args.dataset_dir} has an empty train split")
    config = TrainConfig(
        embed_dim=args.embed_dim,
        hidden_dim=args.hidden_dim,
        n_types=args.types,
        temperature=args.temperature,
        size_weight=args.size_weight,
        aux_weight=args.aux_weight,
        epochs=args.epochs,
        lr=args.lr,
        n_subgraphs=args.subgraphs,
        seed=args.seed,
    )
    params, log_rows = train(split.train, config)
    save_checkpoint(params, args.out)
    log_csv = format_log_csv(log_rows)
    if args.log is not None:
        Path(args.log).write_text(log_csv, encoding="utf-8")
    sys.stdout.write(log_csv)
    final = log_rows[-1]
    sys.stderr.write(
        f"trained {config.epochs} epochs on {len(split.train)} graphs; "
        f"final mean loss {final['mean_loss']:.4f}; "
        f"checkpoint written to {args.out}\n"
    )
    return 0


def cmd_gen_dataset(args):
    g = _load_graph(args.graph)
    split = generate_dataset(
        g, count=args.count, seed=args.seed, n_swaps=args.swaps
    )
    save_dataset(split, args.out)
    summary = {
        "schema": 1,
        "out": str(args.out),
        "counts": dict(split.provenance["counts"]),
        "n_nodes": g.n_nodes,
        "n_edges": g.n_edges,
        "n_swaps": split.provenance["n_swaps"],
        "seed": args.seed,
        "source_hash": source_hash(g),
    }
    sys.stdout.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_bench(args):
    split = load_dataset(args.dataset_dir)
    graphs = getattr(split, args.split)
    if not graphs:
        raise DataError(f"{args.dataset_dir} has an empty {args.split} split")
    methods = tuple(
        m.strip() for m in args.methods.split(",") if m.strip()
    )
    config = BenchConfig(
        graphs=graphs,
        dataset=Path(args.dataset_dir).name or str(args.dataset_dir),
        methods=methods,
        samples_4=args.samples,
        samples_5=args.samples,
        burn_in=args.burn_in,
        m_subgraphs=args.subgraphs,
        workers=args.workers,
        seed=args.seed,
        checkpoint=args.checkpoint,
        histogram=args.histogram is not None,
    )
    report = run_benchmark(config)
    write_report(
        report,
        json_path=args.out,
        csv_path=args.csv,
        hist_path=args.histogram,
    )
    if args.out is None:
        sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(report_to_csv(report))
    return 0


def cmd_inspect_checkpoint(args):
    path = Path(args.checkpoint)
    if not path.is_file():
        raise ConfigError(f"checkpoint not found: {path}")
    params = load_checkpoint(path)
    registry = []
    for code_str in params.registry.to_strings():
        from .canon import CanonicalCode

        alias = alias_of(CanonicalCode.from_string(code_str))
        registry.append({"code": code_str, "alias": alias})
    shapes = {
        name: list(getattr(params, name).shape)
        for name in type(params).ARRAY_FIELDS
    }
    n_params = sum(
        int(getattr(params, name).size) for name in type(params).ARRAY_FIELDS
    ) + 1  # keep_b scalar
    info = {
        "schema": 1,
        "path": str(path),
        "n_nodes": params.n_nodes,
        "embed_dim": params.embed_dim,
        "n_types": params.n_types,
        "temperature": params.temperature,
        "threshold": params.threshold,
        "n_parameters": n_params,
        "shapes": shapes,
        "registry": registry,
    }
    sys.stdout.write(json.dumps(info, indent=2, sort_keys=True) + "\n")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gfreq",
        description=(
            "Estimate normalized frequency distributions of connected "
            "4- and 5-node subgraph types in undirected graphs."
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exact", help="exact distribution by full enumeration")
    p.add_argument("--graph", required=True, help="edge-list file")
    p.add_argument("--k", default="4,5", help="sizes, e.g. 4 or 4,5")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("sample", help="estimate the distribution by sampling")
    p.add_argument("--graph", required=True, help="edge-list file")
    p.add_argument(
        "--method", required=True, choices=("naive", "mhrw", "gnns")
    )
    p.add_argument("--k", default="4,5", help="sizes, e.g. 4 or 4,5")
    p.add_argument(
        "--samples",
        type=int,
        default=100_000,
        help="per-size draws/steps for baselines; mask count for gnns",
    )
    p.add_argument(
        "--burn-in", type=int, default=None, help="mhrw burn-in steps"
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoint", default=None, help="gnns checkpoint (.npz)")
    p.add_argument(
        "--workers", type=int, default=1, help="gnns sampling shards"
    )
    p.add_argument(
        "--unweighted",
        action="store_true",
        help="gnns: raw kept-subgraph histogram, no importance weights",
    )
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("train", help="train the learned sampler")
    p.add_argument("--dataset-dir", required=True)
    p.add_argument("--out", required=True, help="checkpoint path (.npz)")
    p.add_argument("--log", default=None, help="also write the epoch log CSV")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--subgraphs", type=int, default=1024)
    p.add_argument("--embed-dim", type=int, default=256)
    p.add_argument("--hidden-dim", type=int, default=64)
    p.add_argument("--types", type=int, default=16)
    p.add_argument("--temperature", type=float, default=0.5)
    p.add_argument("--size-weight", type=float, default=0.1)
    p.add_argument("--aux-weight", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser(
        "gen-dataset", help="generate a dataset by degree-preserving rewiring"
    )
    p.add_argument("--graph", required=True, help="source edge-list file")
    p.add_argument("--out", required=True, help="dataset directory")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument(
        "--swaps", type=int, default=None, help="swaps per graph (default 10*edges)"
    )
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("bench", help="compare methods against the exact oracle")
    p.add_argument("--dataset-dir", required=True)
    p.add_argument(
        "--split", choices=("train", "valid", "test"), default="test"
    )
    p.add_argument(
        "--methods",
        default="naive,mhrw,gnns",
        help="comma-separated subset of naive,mhrw,gnns",
    )
    p.add_argument(
        "--samples", type=int, default=200_000, help="baseline per-size budget"
    )
    p.add_argument(
        "--subgraphs", type=int, default=2048, help="gnns mask count"
    )
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="report JSON path")
    p.add_argument("--csv", default=None, help="summary CSV path")
    p.add_argument(
        "--histogram", default=None, help="per-type frequency CSV path"
    )
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("inspect-checkpoint", help="describe a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_inspect_checkpoint)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
