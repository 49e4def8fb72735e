"""Hot-loop kernel bodies, written to run unchanged in two modes:

- plain CPython (the fallback path), and
- compiled with numba.njit (see kernels.py, which loads a second copy of
  this module and jits every function in it).

Rules the code below follows to keep both modes bit-identical:
- all integer arithmetic stays inside int64: every 32-bit value is masked
  after shifts, and 32-bit multiplies go through _mul32 (16-bit split) so
  nothing overflows int64 in CPython or wraps differently under LLVM;
- randomness comes from an explicit xorshift128 state seeded per call (or
  per sampling slot), never from global RNGs, so results are independent
  of execution order;
- only numpy arrays and scalars, no python objects.
"""

import numpy as np

_MASK32 = 0xFFFFFFFF
_INV32 = 1.0 / 4294967296.0


def _mul32(a, b):
    # (a * b) mod 2^32 without overflowing int64 (a, b in [0, 2^32)).
    lo = (a & 0xFFFF) * b
    hi = ((a >> 16) * b) & 0xFFFF
    return (lo + (hi << 16)) & _MASK32


def _mix32(z):
    z &= _MASK32
    z ^= z >> 16
    z = _mul32(z, 0x7FEB352D)
    z ^= z >> 15
    z = _mul32(z, 0x846CA68B)
    z ^= z >> 16
    return z


def _rng_init(state, seed, stream):
    # state: int64[4]. Distinct (seed, stream) pairs give distinct streams.
    base = _mix32((seed & _MASK32) ^ _mul32(stream & _MASK32, 0x9E3779B9))
    z = base
    for i in range(4):
        z = (z + 0x9E3779B9) & _MASK32
        s = _mix32(z ^ _mul32(stream & _MASK32, 0x85EBCA6B))
        if s == 0:
            s = i + 0x1234567
        state[i] = s


def _rng_u32(state):
    # xorshift128 (Marsaglia), 32-bit words held in int64 slots.
    t = (state[0] ^ ((state[0] << 11) & _MASK32)) & _MASK32
    t ^= t >> 8
    state[0] = state[1]
    state[1] = state[2]
    state[2] = state[3]
    w = state[3]
    w = (w ^ (w >> 19)) ^ t
    state[3] = w & _MASK32
    return state[3]


def _rng_unit(state):
    # uniform in (0, 1), never exactly 0 or 1
    return (_rng_u32(state) + 0.5) * _INV32


def _rng_below(state, m):
    # uniform integer in [0, m); m stays far below 2^31 here
    return (_rng_u32(state) * m) >> 32


def _subset_bitmask(adj, nodes, k):
    # adjacency bitmask of k sorted nodes; pair (a,b) lex order, LSB first
    mask = 0
    bit = 0
    for a in range(k):
        for b in range(a + 1, k):
            if adj[nodes[a], nodes[b]] != 0:
                mask |= 1 << bit
            bit += 1
    return mask


def esu_count(indptr, indices, adj, k, counts):
    """Count every connected k-node induced subgraph once, by raw bitmask.

    Exclusive-neighborhood extension: grow from each root over nodes with
    index > root that are not yet in, or adjacent to, the current subset.
    counts: int64 array of size 2^(k(k-1)/2), incremented at the subset's
    raw (uncanonicalized) adjacency mask.
    """
    n = indptr.shape[0] - 1
    sub = np.empty(k, np.int64)
    srt = np.empty(k, np.int64)
    ext = np.empty((k, n), np.int64)
    ext_len = np.zeros(k, np.int64)
    ext_ptr = np.zeros(k, np.int64)
    marked = np.full(n, -1, np.int64)
    mark_log = np.empty((k, n), np.int64)
    mark_cnt = np.zeros(k, np.int64)
    for root in range(n):
        sub[0] = root
        marked[root] = 0
        mark_log[0, 0] = root
        mc = 1
        e = 0
        for j in range(indptr[root], indptr[root + 1]):
            u = indices[j]
            marked[u] = 0
            mark_log[0, mc] = u
            mc += 1
            if u > root:
                ext[0, e] = u
                e += 1
        mark_cnt[0] = mc
        ext_len[0] = e
        ext_ptr[0] = 0
        d = 0
        while d >= 0:
            if ext_ptr[d] < ext_len[d]:
                w = ext[d, ext_ptr[d]]
                ext_ptr[d] += 1
                if d + 2 == k:
                    sub[d + 1] = w
                    for i in range(k):
                        srt[i] = sub[i]
                    for a in range(1, k):
                        key = srt[a]
                        b = a - 1
                        while b >= 0 and srt[b] > key:
                            srt[b + 1] = srt[b]
                            b -= 1
                        srt[b + 1] = key
                    counts[_subset_bitmask(adj, srt, k)] += 1
                else:
                    sub[d + 1] = w
                    m = 0
                    for i in range(ext_ptr[d], ext_len[d]):
                        ext[d + 1, m] = ext[d, i]
                        m += 1
                    mc = 0
                    for j in range(indptr[w], indptr[w + 1]):
                        u = indices[j]
                        if marked[u] < 0:
                            marked[u] = d + 1
                            mark_log[d + 1, mc] = u
                            mc += 1
                            if u > root:
                                ext[d + 1, m] = u
                                m += 1
                    mark_cnt[d + 1] = mc
                    ext_len[d + 1] = m
                    ext_ptr[d + 1] = 0
                    d += 1
            else:
                for i in range(mark_cnt[d]):
                    marked[mark_log[d, i]] = -1
                d -= 1


def naive_count(adj, n, k, n_draws, seed, conn, counts):
    """Uniform k-subset draws; count connected ones by raw bitmask.

    Uses Floyd's algorithm (exactly k RNG draws per sample, no rejection).
    Returns the number of accepted (connected) draws.
    """
    state = np.empty(4, np.int64)
    _rng_init(state, seed, 101)
    chosen = np.empty(k, np.int64)
    accepted = 0
    for _ in range(n_draws):
        cnt = 0
        for j in range(n - k, n):
            t = _rng_below(state, j + 1)
            dup = False
            for i in range(cnt):
                if chosen[i] == t:
                    dup = True
                    break
            if dup:
                chosen[cnt] = j
            else:
                chosen[cnt] = t
            cnt += 1
        for a in range(1, k):
            key = chosen[a]
            b = a - 1
            while b >= 0 and chosen[b] > key:
                chosen[b + 1] = chosen[b]
                b -= 1
            chosen[b + 1] = key
        mask = _subset_bitmask(adj, chosen, k)
        if conn[mask]:
            counts[mask] += 1
            accepted += 1
    return accepted


def _enum_moves(indptr, indices, adj, k, cur, conn, mv, mu, stamp, base, tmp):
    """All neighbor states of `cur`: exchange cur[vi] for outside node u so
    the result stays connected. Writes (vi, u) pairs; returns their count.
    `stamp` deduplicates candidate u per removal slot via unique base+vi.
    """
    cnt = 0
    for vi in range(k):
        sb = base + vi
        for wi in range(k):
            if wi == vi:
                continue
            w = cur[wi]
            for j in range(indptr[w], indptr[w + 1]):
                u = indices[j]
                if stamp[u] == sb:
                    continue
                stamp[u] = sb
                incur = False
                for x in range(k):
                    if cur[x] == u:
                        incur = True
                        break
                if incur:
                    continue
                m = 0
                for x in range(k):
                    if x != vi:
                        tmp[m] = cur[x]
                        m += 1
                pos = m
                for x in range(m):
                    if tmp[x] > u:
                        pos = x
                        break
                for x in range(m, pos, -1):
                    tmp[x] = tmp[x - 1]
                tmp[pos] = u
                if conn[_subset_bitmask(adj, tmp, k)]:
                    mv[cnt] = vi
                    mu[cnt] = u
                    cnt += 1
    return cnt


def mhrw_run(indptr, indices, adj, k, state0, n_samples, burn_in, seed, conn,
             counts):
    """Metropolis-Hastings random walk over connected k-subsets.

    Proposal: uniform over the current state's neighbor states (sharing
    k-1 nodes, connected). Acceptance min(1, d(cur)/d(prop)) makes the
    stationary law uniform. After burn_in steps, every visited state is
    counted (by raw bitmask) for n_samples steps. d(state) is enumerated
    once per proposal and cached while the state persists.
    Returns (accepted, proposals).
    """
    n = indptr.shape[0] - 1
    state = np.empty(4, np.int64)
    _rng_init(state, seed, 202)
    cur = np.empty(k, np.int64)
    prop = np.empty(k, np.int64)
    tmp = np.empty(k, np.int64)
    for i in range(k):
        cur[i] = state0[i]
    cap = k * n + 1
    mv = np.empty((2, cap), np.int64)
    mu = np.empty((2, cap), np.int64)
    stamp = np.full(n, -1, np.int64)
    base = 0
    cur_buf = 0
    d_cur = _enum_moves(indptr, indices, adj, k, cur, conn,
                        mv[cur_buf], mu[cur_buf], stamp, base, tmp)
    base += k
    cur_mask = _subset_bitmask(adj, cur, k)
    accepted = 0
    proposals = 0
    total = burn_in + n_samples
    for step in range(total):
        if d_cur > 0:
            proposals += 1
            r = _rng_below(state, d_cur)
            vi = mv[cur_buf, r]
            u = mu[cur_buf, r]
            m = 0
            for x in range(k):
                if x != vi:
                    prop[m] = cur[x]
                    m += 1
            pos = m
            for x in range(m):
                if prop[x] > u:
                    pos = x
                    break
            for x in range(m, pos, -1):
                prop[x] = prop[x - 1]
            prop[pos] = u
            prop_buf = 1 - cur_buf
            d_prop = _enum_moves(indptr, indices, adj, k, prop, conn,
                                 mv[prop_buf], mu[prop_buf], stamp, base, tmp)
            base += k
            accept = True
            if d_prop > d_cur:
                accept = _rng_unit(state) * d_prop <= d_cur
            if accept:
                accepted += 1
                for x in range(k):
                    cur[x] = prop[x]
                cur_buf = prop_buf
                d_cur = d_prop
                cur_mask = _subset_bitmask(adj, cur, k)
        if step >= burn_in:
            counts[cur_mask] += 1
    return accepted, proposals


def swap_chain(edges, adj, n_swaps, max_tries, seed):
    """Degree-preserving double edge swaps, in place.

    Picks two edges (a,b),(c,d), randomizes orientation, rewires to
    (a,d),(c,b) when that creates no self-loop or duplicate. Returns the
    number of successful swaps (may fall short after max_tries attempts).
    """
    state = np.empty(4, np.int64)
    _rng_init(state, seed, 303)
    n_edges = edges.shape[0]
    done = 0
    tries = 0
    while done < n_swaps and tries < max_tries:
        tries += 1
        e1 = _rng_below(state, n_edges)
        e2 = _rng_below(state, n_edges)
        a = edges[e1, 0]
        b = edges[e1, 1]
        c = edges[e2, 0]
        d = edges[e2, 1]
        if _rng_unit(state) < 0.5:
            t = c
            c = d
            d = t
        if a == d or c == b:
            continue
        if adj[a, d] != 0 or adj[c, b] != 0:
            continue
        adj[a, b] = 0
        adj[b, a] = 0
        adj[c, d] = 0
        adj[d, c] = 0
        adj[a, d] = 1
        adj[d, a] = 1
        adj[c, b] = 1
        adj[b, c] = 1
        edges[e1, 0] = a
        edges[e1, 1] = d
        edges[e2, 0] = c
        edges[e2, 1] = b
        done += 1
    return done


def mask_components(indptr, indices, adj, thresh, logp_keep, logp_drop,
                    n_slots, slot_offset, seed, max_retries, conn4, out_size,
                    out_mask, out_logw, out_stat):
    """Per-slot Bernoulli node sampling + largest-component extraction.

    Each slot s draws an independent keep decision per node i
    (keep iff u > thresh[i], u from the slot's own RNG stream, matching
    the soft-mask > threshold rule), retries up to max_retries times when
    nothing is kept, then records its largest kept component:
      out_size[s]: component size (0 when the slot stayed empty)
      out_mask[s]: raw adjacency bitmask when size is 4 or 5
      out_logw[s]: log of the component's isolation probability
                   (sum of log keep over members + log drop over boundary)
      out_stat[s]: boundary size for 4-components; number of connected
                   4-subsets for 5-components (cross-size ratio inputs)
    Ties for largest go to the component with the smallest node index.
    Slot s uses the RNG stream of absolute slot id (slot_offset + s), so a
    run partitioned across workers by slot ranges reproduces the
    single-call results exactly.
    """
    n = indptr.shape[0] - 1
    for s in range(n_slots):
        state = np.empty(4, np.int64)
        kept_flag = np.zeros(n, np.uint8)
        kept_buf = np.empty(n, np.int64)
        n_kept = 0
        for rnd in range(max_retries + 1):
            _rng_init(state, seed, (slot_offset + s) * 16 + rnd)
            n_kept = 0
            for i in range(n):
                if _rng_unit(state) > thresh[i]:
                    kept_buf[n_kept] = i
                    kept_flag[i] = 1
                    n_kept += 1
            if n_kept > 0:
                break
        out_size[s] = 0
        out_mask[s] = 0
        out_logw[s] = 0.0
        out_stat[s] = 0
        if n_kept == 0:
            continue
        visited = np.zeros(n, np.uint8)
        queue = np.empty(n, np.int64)
        comp_buf = np.empty(6, np.int64)
        best_size = 0
        best_nodes = np.empty(5, np.int64)
        for idx in range(n_kept):
            v = kept_buf[idx]
            if visited[v] != 0:
                continue
            head = 0
            tail = 0
            queue[tail] = v
            tail += 1
            visited[v] = 1
            size = 0
            while head < tail:
                x = queue[head]
                head += 1
                if size < 6:
                    comp_buf[size] = x
                size += 1
                for j in range(indptr[x], indptr[x + 1]):
                    u = indices[j]
                    if kept_flag[u] != 0 and visited[u] == 0:
                        visited[u] = 1
                        queue[tail] = u
                        tail += 1
            if size > best_size:
                best_size = size
                if size <= 5:
                    for i in range(size):
                        best_nodes[i] = comp_buf[i]
        out_size[s] = best_size
        if best_size == 4 or best_size == 5:
            kk = best_size
            for a in range(1, kk):
                key = best_nodes[a]
                b = a - 1
                while b >= 0 and best_nodes[b] > key:
                    best_nodes[b + 1] = best_nodes[b]
                    b -= 1
                best_nodes[b + 1] = key
            out_mask[s] = _subset_bitmask(adj, best_nodes, kk)
            logw = 0.0
            for i in range(kk):
                logw += logp_keep[best_nodes[i]]
            bnd = np.zeros(n, np.uint8)
            b_count = 0
            for i in range(kk):
                v = best_nodes[i]
                for j in range(indptr[v], indptr[v + 1]):
                    u = indices[j]
                    if kept_flag[u] == 0 and bnd[u] == 0:
                        bnd[u] = 1
                        logw += logp_drop[u]
                        b_count += 1
            out_logw[s] = logw
            if kk == 4:
                out_stat[s] = b_count
            else:
                four = np.empty(4, np.int64)
                c_count = 0
                for drop in range(5):
                    m = 0
                    for x in range(5):
                        if x != drop:
                            four[m] = best_nodes[x]
                            m += 1
                    if conn4[_subset_bitmask(adj, four, 4)]:
                        c_count += 1
                out_stat[s] = c_count


def keep_components(indptr, indices, keep, out_size, out_member):
    """Largest-component membership per row of a keep matrix.

    keep: (slots, n) uint8. out_member is zeroed and set to 1 on the
    largest component's nodes; out_size gets its size (0 for empty rows).
    Ties go to the component containing the smallest node index.
    """
    n_slots = keep.shape[0]
    n = keep.shape[1]
    for s in range(n_slots):
        comp_id = np.full(n, -1, np.int64)
        queue = np.empty(n, np.int64)
        best_size = 0
        best_id = -1
        next_id = 0
        for v in range(n):
            if keep[s, v] == 0 or comp_id[v] >= 0:
                continue
            head = 0
            tail = 0
            queue[tail] = v
            tail += 1
            comp_id[v] = next_id
            size = 0
            while head < tail:
                x = queue[head]
                head += 1
                size += 1
                for j in range(indptr[x], indptr[x + 1]):
                    u = indices[j]
                    if keep[s, u] != 0 and comp_id[u] < 0:
                        comp_id[u] = next_id
                        queue[tail] = u
                        tail += 1
            if size > best_size:
                best_size = size
                best_id = next_id
            next_id += 1
        out_size[s] = best_size
        for v in range(n):
            out_member[s, v] = 1 if (best_id >= 0 and comp_id[v] == best_id) else 0
