"""Hot inner loops, each with a numba path and a numpy path.

Every public kernel ``foo`` is bound at import time to either ``foo_numba`` or
``foo_numpy`` depending on :mod:`corruptnet._backend`. Both variants are kept
importable so tests and the benchmark can compare them directly. Outputs are
bit-identical between the two paths.

Bit-set layout used by the exhaustive scans: vertex ``v`` lives in word
``v // 64`` at bit ``v % 64``; words are int64 (bit 63 wraps to the sign).
"""

from __future__ import annotations

from itertools import combinations, islice

import numpy as np

from ._backend import USE_NUMBA, njit

_POP8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)
_CHUNK = 1 << 16


# ---------------------------------------------------------------- components


def _cc_labels_loop(n, indptr, indices):
    label = np.full(n, -1, np.int64)
    stack = np.empty(max(n, 1), np.int64)
    for s in range(n):
        if label[s] >= 0:
            continue
        label[s] = s
        stack[0] = s
        top = 1
        while top > 0:
            top -= 1
            u = stack[top]
            for p in range(indptr[u], indptr[u + 1]):
                w = indices[p]
                if label[w] < 0:
                    label[w] = s
                    stack[top] = w
                    top += 1
    return label


cc_labels_numba = njit(_cc_labels_loop)


def cc_labels_numpy(n, indptr, indices):
    """Min-label propagation with pointer jumping; converges to the min vertex."""
    label = np.arange(n, dtype=np.int64)
    src = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
    dst = np.asarray(indices, dtype=np.int64)
    if src.size == 0:
        return label
    while True:
        hook = np.minimum(label[src], label[dst])
        new = label.copy()
        np.minimum.at(new, src, hook)
        np.minimum.at(new, dst, hook)
        while True:
            jumped = new[new]
            if np.array_equal(jumped, new):
                break
            new = jumped
        if np.array_equal(new, label):
            return label
        label = new


# ---------------------------------------------------------------------- SCCs


def _scc_loop(n, indptr, indices):
    # Iterative Tarjan. Returns component ids numbered in topological order of
    # the condensation (every inter-component arc goes from lower to higher id).
    index = np.full(n, -1, np.int64)
    low = np.zeros(n, np.int64)
    onstack = np.zeros(n, np.bool_)
    stack = np.empty(max(n, 1), np.int64)
    call_v = np.empty(max(n, 1), np.int64)
    call_p = np.empty(max(n, 1), np.int64)
    comp = np.full(n, -1, np.int64)
    sp = 0
    ncomp = 0
    counter = 0
    for s in range(n):
        if index[s] >= 0:
            continue
        index[s] = counter
        low[s] = counter
        counter += 1
        stack[sp] = s
        sp += 1
        onstack[s] = True
        call_v[0] = s
        call_p[0] = indptr[s]
        cp = 1
        while cp > 0:
            v = call_v[cp - 1]
            p = call_p[cp - 1]
            if p < indptr[v + 1]:
                call_p[cp - 1] = p + 1
                w = indices[p]
                if index[w] < 0:
                    index[w] = counter
                    low[w] = counter
                    counter += 1
                    stack[sp] = w
                    sp += 1
                    onstack[w] = True
                    call_v[cp] = w
                    call_p[cp] = indptr[w]
                    cp += 1
                elif onstack[w]:
                    if index[w] < low[v]:
                        low[v] = index[w]
            else:
                if low[v] == index[v]:
                    while True:
                        sp -= 1
                        w = stack[sp]
                        onstack[w] = False
                        comp[w] = ncomp
                        if w == v:
                            break
                    ncomp += 1
                cp -= 1
                if cp > 0:
                    u = call_v[cp - 1]
                    if low[v] < low[u]:
                        low[u] = low[v]
    # Tarjan emits sinks first.
    for v in range(n):
        comp[v] = ncomp - 1 - comp[v]
    return comp, ncomp


scc_numba = njit(_scc_loop)


def scc_numpy(n, indptr, indices):
    # No vectorised Tarjan exists; run the same loop interpreted on lists.
    comp, ncomp = _scc_loop_lists(n, np.asarray(indptr).tolist(), np.asarray(indices).tolist())
    return np.asarray(comp, dtype=np.int64), ncomp


def _scc_loop_lists(n, indptr, indices):
    index = [-1] * n
    low = [0] * n
    onstack = [False] * n
    comp = [-1] * n
    stack = []
    ncomp = 0
    counter = 0
    for s in range(n):
        if index[s] >= 0:
            continue
        index[s] = low[s] = counter
        counter += 1
        stack.append(s)
        onstack[s] = True
        calls = [[s, indptr[s]]]
        while calls:
            frame = calls[-1]
            v, p = frame
            if p < indptr[v + 1]:
                frame[1] = p + 1
                w = indices[p]
                if index[w] < 0:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    onstack[w] = True
                    calls.append([w, indptr[w]])
                elif onstack[w] and index[w] < low[v]:
                    low[v] = index[w]
            else:
                if low[v] == index[v]:
                    while True:
                        w = stack.pop()
                        onstack[w] = False
                        comp[w] = ncomp
                        if w == v:
                            break
                    ncomp += 1
                calls.pop()
                if calls:
                    u = calls[-1][0]
                    if low[v] < low[u]:
                        low[u] = low[v]
    return [ncomp - 1 - c for c in comp], ncomp


# ------------------------------------------------------- label propagation


def _propagate_loop(n, indptr, indices, in_indptr, in_arcs, arc_src, verdict, seed_t, seed_b):
    # Fixed point of the sound inference rules:
    #   u in T, u->v says T  => v in T ;  u in T, u->v says C => v in B
    #   u->v says C and v in T => u in B ; u->v says T and v in B => u in B
    # Returns (t_mask, b_mask, conflict_vertex or -1).
    t = seed_t.copy()
    b = seed_b.copy()
    queue = np.empty(2 * n + 1, np.int64)
    head = 0
    tail = 0
    for v in range(n):
        if t[v] and b[v]:
            return t, b, v
        if t[v] or b[v]:
            queue[tail] = v
            tail += 1
    while head < tail:
        u = queue[head]
        head += 1
        if t[u]:
            for p in range(indptr[u], indptr[u + 1]):
                w = indices[p]
                if verdict[p]:
                    if b[w]:
                        return t, b, w
                    if not t[w]:
                        t[w] = True
                        queue[tail] = w
                        tail += 1
                else:
                    if t[w]:
                        return t, b, w
                    if not b[w]:
                        b[w] = True
                        queue[tail] = w
                        tail += 1
        for q in range(in_indptr[u], in_indptr[u + 1]):
            a = in_arcs[q]
            x = arc_src[a]
            # x accuses a truthful u, or vouches for a corrupt u
            if (t[u] and not verdict[a]) or (b[u] and verdict[a]):
                if t[x]:
                    return t, b, x
                if not b[x]:
                    b[x] = True
                    queue[tail] = x
                    tail += 1
    return t, b, -1


propagate_numba = njit(_propagate_loop)


def _ranges(starts, stops):
    lengths = stops - starts
    total = int(lengths.sum())
    if total == 0:
        return np.empty(0, np.int64)
    offsets = np.repeat(stops - lengths.cumsum(), lengths)
    return offsets + np.arange(total, dtype=np.int64)


def propagate_numpy(n, indptr, indices, in_indptr, in_arcs, arc_src, verdict, seed_t, seed_b):
    t = seed_t.copy()
    b = seed_b.copy()
    clash = np.flatnonzero(t & b)
    if clash.size:
        return t, b, int(clash[0])
    new_t, new_b = t.copy(), b.copy()
    while new_t.any() or new_b.any():
        add_t = np.zeros(n, np.bool_)
        add_b = np.zeros(n, np.bool_)
        ft = np.flatnonzero(new_t)
        arcs = _ranges(indptr[ft], indptr[ft + 1])
        tgt = indices[arcs]
        add_t[tgt[verdict[arcs]]] = True
        add_b[tgt[~verdict[arcs]]] = True
        ia = in_arcs[_ranges(in_indptr[ft], in_indptr[ft + 1])]
        add_b[arc_src[ia[~verdict[ia]]]] = True
        fb = np.flatnonzero(new_b)
        ib = in_arcs[_ranges(in_indptr[fb], in_indptr[fb + 1])]
        add_b[arc_src[ib[verdict[ib]]]] = True
        both = np.flatnonzero((t | add_t) & (b | add_b))
        if both.size:
            return t | add_t, b | add_b, int(both[0])
        new_t = add_t & ~t
        new_b = add_b & ~b
        t |= add_t
        b |= add_b
    return t, b, -1


# ------------------------------------------------------ exhaustive subsets


def _popcount_words(words):
    total = 0
    for i in range(words.shape[0]):
        w = words[i]
        for s in range(8):
            total += _POP8[(w >> (8 * s)) & 255]
    return total


def _first_violation_loop(nbr, n, k, mode, need):
    # Walk k-subsets of range(n) in lexicographic order and return the first
    # one breaking the predicate (empty array if none).
    #   mode 0 (expansion): |N(U) - U| > |U|
    #   mode 1 (pair):      n - |U + N(U)| < need
    if k < 1 or k > n:
        return np.empty(0, np.int64)
    words = nbr.shape[1]
    c = np.arange(k, dtype=np.int64)
    pref = np.zeros((k + 1, words), np.int64)
    upref = np.zeros((k + 1, words), np.int64)
    start = 0
    tmp = np.zeros(words, np.int64)
    while True:
        for i in range(start, k):
            v = c[i]
            for w in range(words):
                pref[i + 1, w] = pref[i, w] | nbr[v, w]
                upref[i + 1, w] = upref[i, w]
            upref[i + 1, v // 64] |= np.int64(1) << (v % 64)
        if mode == 0:
            for w in range(words):
                tmp[w] = pref[k, w] & ~upref[k, w]
            if _popcount_words(tmp) <= k:
                return c.copy()
        else:
            for w in range(words):
                tmp[w] = pref[k, w] | upref[k, w]
            if n - _popcount_words(tmp) >= need:
                return c.copy()
        i = k - 1
        while i >= 0 and c[i] == n - k + i:
            i -= 1
        if i < 0:
            return np.empty(0, np.int64)
        c[i] += 1
        for j in range(i + 1, k):
            c[j] = c[j - 1] + 1
        start = i


_popcount_words = njit(_popcount_words)
first_violation_numba = njit(_first_violation_loop)


def first_violation_numpy(nbr, n, k, mode, need):
    if k < 1 or k > n:
        return np.empty(0, np.int64)
    combos_iter = combinations(range(n), k)
    bits = _single_bit_masks(n, nbr.shape[1])
    while True:
        chunk = np.array(list(islice(combos_iter, _CHUNK)), dtype=np.int64).reshape(-1, k)
        if chunk.shape[0] == 0:
            return np.empty(0, np.int64)
        cover = np.bitwise_or.reduce(nbr[chunk], axis=1)
        umask = np.bitwise_or.reduce(bits[chunk], axis=1)
        if mode == 0:
            count = np.bitwise_count((cover & ~umask).view(np.uint64)).sum(axis=1)
            bad = count <= k
        else:
            count = np.bitwise_count((cover | umask).view(np.uint64)).sum(axis=1)
            bad = n - count >= need
        hit = np.flatnonzero(bad)
        if hit.size:
            return chunk[hit[0]].copy()


def _single_bit_masks(n, words):
    bits = np.zeros((n, words), np.uint64)
    v = np.arange(n)
    bits[v, v // 64] = np.left_shift(np.uint64(1), (v % 64).astype(np.uint64))
    return bits.view(np.int64)


def neighbor_bitsets(n, indptr, indices):
    """Row ``v`` is the bit-set of out-neighbours of ``v``."""
    words = max(1, (n + 63) // 64)
    out = np.zeros((n, words), np.uint64)
    src = np.repeat(np.arange(n), np.diff(indptr))
    dst = np.asarray(indices, dtype=np.int64)
    np.bitwise_or.at(out, (src, dst // 64), np.left_shift(np.uint64(1), (dst % 64).astype(np.uint64)))
    return out.view(np.int64)


# ------------------------------------------------ consistent-world scanning


def _consistent_scan_loop(n, tmask, cmask, min_t, collect):
    # Scan every world bit-mask M; M is consistent iff no member u of M has a
    # T-verdict outside M or a C-verdict inside M. Returns
    # (count, and_mask, or_mask, max_size, masks[:count] if collect).
    total = np.int64(1) << n
    count = 0
    and_m = total - 1
    or_m = np.int64(0)
    best = -1
    out = np.empty(0, np.int64)
    for phase in range(2 if collect else 1):
        if phase == 1:
            out = np.empty(count, np.int64)
            count = 0
        for m in range(total):
            size = 0
            x = m
            while x:
                x &= x - 1
                size += 1
            if size < min_t:
                continue
            ok = True
            for u in range(n):
                if (m >> u) & 1:
                    if (tmask[u] & ~m) != 0 or (cmask[u] & m) != 0:
                        ok = False
                        break
            if ok:
                if phase == 1:
                    out[count] = m
                else:
                    and_m &= m
                    or_m |= m
                    if size > best:
                        best = size
                count += 1
    return count, and_m, or_m, best, out


consistent_scan_numba = njit(_consistent_scan_loop)


def consistent_scan_numpy(n, tmask, cmask, min_t, collect):
    total = 1 << n
    count = 0
    and_m = total - 1
    or_m = 0
    best = -1
    kept = []
    step = 1 << 20
    for start in range(0, total, step):
        m = np.arange(start, min(total, start + step), dtype=np.int64)
        size = np.bitwise_count(m).astype(np.int64)
        ok = size >= min_t
        for u in range(n):
            member = ((m >> u) & 1).astype(bool)
            bad = ((tmask[u] & ~m) != 0) | ((cmask[u] & m) != 0)
            ok &= ~(member & bad)
        good = m[ok]
        if good.size:
            count += good.size
            and_m &= int(np.bitwise_and.reduce(good))
            or_m |= int(np.bitwise_or.reduce(good))
            best = max(best, int(size[ok].max()))
            if collect:
                kept.append(good)
    out = np.concatenate(kept) if kept else np.empty(0, np.int64)
    return count, np.int64(and_m), np.int64(or_m), best, out


# --------------------------------------------------------------------- girth


def _girth_loop(n, indptr, indices):
    best = n + 1
    dist = np.full(n, -1, np.int64)
    parent = np.full(n, -1, np.int64)
    queue = np.empty(max(n, 1), np.int64)
    for s in range(n):
        dist[s] = 0
        parent[s] = -1
        queue[0] = s
        head = 0
        tail = 1
        while head < tail:
            u = queue[head]
            head += 1
            if 2 * dist[u] + 1 >= best:
                break
            for p in range(indptr[u], indptr[u + 1]):
                w = indices[p]
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    parent[w] = u
                    queue[tail] = w
                    tail += 1
                elif parent[u] != w:
                    cyc = dist[u] + dist[w] + 1
                    if cyc < best:
                        best = cyc
        for i in range(tail):
            dist[queue[i]] = -1
            parent[queue[i]] = -1
    return best if best <= n else -1


girth_numba = njit(_girth_loop)


def girth_numpy(n, indptr, indices):
    return _girth_loop(n, np.asarray(indptr).tolist(), np.asarray(indices).tolist())


# ------------------------------------------------------------------ Euler


def _euler_loop(n, ptr, nbr, eid, m):
    """Hierholzer over a half-edge CSR (``nbr``/``eid`` per slot). Returns the
    traversal ``(edge, tail, head)`` arrays and circuit boundaries."""
    used = np.zeros(m, np.bool_)
    pos = ptr[:-1].copy()
    out_e = np.empty(m, np.int64)
    out_t = np.empty(m, np.int64)
    out_h = np.empty(m, np.int64)
    bounds = np.empty(n + 1, np.int64)
    stack_v = np.empty(m + 1, np.int64)
    stack_e = np.empty(m + 1, np.int64)
    k = 0
    nc = 0
    bounds[0] = 0
    for start in range(n):
        while pos[start] < ptr[start + 1] and used[eid[pos[start]]]:
            pos[start] += 1
        if pos[start] == ptr[start + 1]:
            continue
        stack_v[0] = start
        stack_e[0] = -1
        top = 1
        first = k
        while top > 0:
            v = stack_v[top - 1]
            while pos[v] < ptr[v + 1] and used[eid[pos[v]]]:
                pos[v] += 1
            if pos[v] < ptr[v + 1]:
                slot = pos[v]
                used[eid[slot]] = True
                pos[v] += 1
                stack_v[top] = nbr[slot]
                stack_e[top] = eid[slot]
                top += 1
            else:
                top -= 1
                if stack_e[top] >= 0:
                    out_e[k] = stack_e[top]
                    out_t[k] = stack_v[top - 1]
                    out_h[k] = v
                    k += 1
        # popped order is the circuit reversed
        i, j = first, k - 1
        while i < j:
            out_e[i], out_e[j] = out_e[j], out_e[i]
            out_t[i], out_t[j] = out_t[j], out_t[i]
            out_h[i], out_h[j] = out_h[j], out_h[i]
            i += 1
            j -= 1
        nc += 1
        bounds[nc] = k
    return out_e, out_t, out_h, bounds[: nc + 1]


euler_numba = njit(_euler_loop)


def euler_numpy(n, ptr, nbr, eid, m):
    # Inherently sequential walk; the fallback runs the same loop interpreted.
    return _euler_loop(n, ptr, nbr, eid, m)


# ------------------------------------------------------------------ dispatch

if USE_NUMBA:
    cc_labels = cc_labels_numba
    scc = scc_numba
    propagate = propagate_numba
    first_violation = first_violation_numba
    consistent_scan = consistent_scan_numba
    girth_bfs = girth_numba
    euler = euler_numba
else:
    cc_labels = cc_labels_numpy
    scc = scc_numpy
    propagate = propagate_numpy
    first_violation = first_violation_numpy
    consistent_scan = consistent_scan_numpy
    girth_bfs = girth_numpy
    euler = euler_numpy
