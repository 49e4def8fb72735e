"""Compare the compiled kernel chain against the pure-python fallback.

Runs every kernel under both implementations on the same inputs and
prints per-kernel wall times plus the speedup. The first compiled call
includes numba's compile (or cache-load) cost; a warmup pass absorbs it
so the table reflects steady-state throughput.

Usage:
    python3 benchmarks/bench_kernels.py [--nodes 120] [--edges 360]
        [--repeat 3] [--seed 0]
"""

import argparse
import math
import time

import numpy as np

from gfreq.canon import connectivity_table
from gfreq.graph import Graph
from gfreq.kernels import JIT_KERNELS, PY_KERNELS, NUMBA_ENABLED


def random_graph(n, m, seed):
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    edges = set()
    for i in range(1, n):
        j = order[rng.integers(0, i)]
        a, b = sorted((int(order[i]), int(j)))
        edges.add((a, b))
    while len(edges) < m:
        a, b = rng.integers(0, n, 2)
        if a != b:
            edges.add((min(int(a), int(b)), max(int(a), int(b))))
    return Graph(n, sorted(edges))


def build_cases(args):
    g = random_graph(args.nodes, args.edges, args.seed)
    indptr = g.indptr
    indices = g.indices
    adj = g.adjacency_dense()
    n = g.n_nodes
    conn4 = connectivity_table(4)
    conn5 = connectivity_table(5)

    # a connected 4-subset to seed the walk
    v0 = int(np.argmax(np.diff(indptr)))
    state0 = [v0]
    for w in indices[indptr[v0]:indptr[v0 + 1]]:
        if len(state0) < 4:
            state0.append(int(w))
    state0 = np.array(sorted(state0), np.int64)

    cases = {}

    def case_esu(kern):
        counts = np.zeros(1 << 10, np.int64)
        kern(indptr, indices, adj, 5, counts)
        return counts.sum()

    def case_naive(kern):
        counts = np.zeros(1 << 10, np.int64)
        return kern(adj, n, 5, 200_000, 42, conn5, counts)

    def case_mhrw(kern):
        counts = np.zeros(1 << 6, np.int64)
        acc, prop = kern(
            indptr, indices, adj, 4, state0.copy(), 100_000, 1000, 42,
            conn4, counts,
        )
        return acc

    def case_swap(kern):
        edges = g.edges.astype(np.int64)
        a = adj.copy()
        return kern(edges, a, 10_000, 1_100_000, 42)

    def case_mask(kern):
        n_slots = 4096
        thresh = np.full(n, 1.0 - 4.5 / n)
        logp_keep = np.full(n, math.log(4.5 / n))
        logp_drop = np.full(n, math.log(1.0 - 4.5 / n))
        out_size = np.zeros(n_slots, np.int64)
        out_mask = np.zeros(n_slots, np.int64)
        out_logw = np.zeros(n_slots, np.float64)
        out_stat = np.zeros(n_slots, np.int64)
        kern(indptr, indices, adj, thresh, logp_keep, logp_drop,
             n_slots, 0, 42, 8, conn4, out_size, out_mask, out_logw,
             out_stat)
        return int((out_size > 0).sum())

    def case_keep(kern):
        rng = np.random.default_rng(7)
        keep = (rng.random((2048, n)) < 4.5 / n).astype(np.uint8)
        out_size = np.zeros(2048, np.int64)
        out_member = np.zeros((2048, n), np.uint8)
        kern(indptr, indices, keep, out_size, out_member)
        return int(out_size.sum())

    cases["esu_count"] = case_esu
    cases["naive_count"] = case_naive
    cases["mhrw_run"] = case_mhrw
    cases["swap_chain"] = case_swap
    cases["mask_components"] = case_mask
    cases["keep_components"] = case_keep
    return cases


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--nodes", type=int, default=120)
    parser.add_argument("--edges", type=int, default=360)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if not NUMBA_ENABLED:
        print("numba chain unavailable (GFREQ_NUMBA disabled or import "
              "failed); timing the python chain only")

    cases = build_cases(args)
    chains = {"python": PY_KERNELS}
    if NUMBA_ENABLED:
        chains["numba"] = JIT_KERNELS
        for name, run in cases.items():  # warmup: compile / load cache
            run(JIT_KERNELS[name])

    print(f"graph: {args.nodes} nodes, {args.edges} edges; "
          f"best of {args.repeat}")
    header = f"{'kernel':18s} " + "".join(
        f"{c:>12s}" for c in chains
    ) + ("     speedup" if NUMBA_ENABLED else "")
    print(header)
    print("-" * len(header))
    for name, run in cases.items():
        best = {}
        check = {}
        for chain_name, table in chains.items():
            times = []
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                check[chain_name] = run(table[name])
                times.append(time.perf_counter() - t0)
            best[chain_name] = min(times)
        if len(check) == 2 and check["python"] != check["numba"]:
            raise SystemExit(
                f"{name}: chains disagree ({check['python']} vs "
                f"{check['numba']})"
            )
        row = f"{name:18s} " + "".join(
            f"{best[c]:11.4f}s" for c in chains
        )
        if NUMBA_ENABLED:
            row += f"{best['python'] / best['numba']:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
