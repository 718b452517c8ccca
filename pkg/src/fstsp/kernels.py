"""Compiled route evaluation and neighbourhood scans.

Solutions are passed as flat arrays: ``seq`` is the truck route, ``lc[v]``
the drone customer launched at node ``v`` (-1 if none) and ``lr[v]`` the
node where that sortie returns.  ``lc[0]`` describes a launch from the
starting depot and a return node of 0 means the closing depot.

Every scan walks its candidates in lexicographic operand order.  With
``target < 0`` it returns the number of feasible candidates and the best one
(lowest objective, ties to the smallest operands); with ``target >= 0`` it
returns the ``target``-th feasible candidate instead.
"""
import numpy as np
from numba import njit

INF = np.inf
EPS = 1e-9
# objectives closer than this count as equal when picking the best candidate
TIE = 1e-9

SWAP11, SWAP21, SWAP22, TWO_OPT, REINSERTION, OR_OPT2 = range(6)


@njit(cache=True)
def route_cost(seq, npos, lc, lr, tau, tau_d, s_l, s_r, e, elapsed, in_flight):
    """Makespan of the route, or ``inf`` if sorties clash or run out of battery."""
    last = npos - 1
    t = 0.0
    active = False
    ret = -1
    arr = 0.0
    t0 = 0.0
    lp = -1
    for p in range(npos):
        v = seq[p]
        if p > 0:
            t += tau[seq[p - 1], v]
            if active and v == ret:
                r = max(t, arr) + s_r
                if elapsed and lp > 0 and r - t0 > e + EPS:
                    return INF
                t = r
                active = False
        if p < last and lc[v] >= 0:
            if active:
                return INF
            k = lc[v]
            j = lr[v]
            legs = tau_d[v, k] + tau_d[k, j]
            if p == 0:
                a = t + legs
                if in_flight:
                    a += s_l
            else:
                t0 = t
                t += s_l
                a = t + legs
            if j == v and p > 0:
                r = max(t, a) + s_r
                if elapsed and r - t0 > e + EPS:
                    return INF
                t = r
            else:
                active = True
                ret = j
                arr = a
                lp = p
    if active:
        return INF
    return t


@njit(cache=True)
def walk_states(seq, npos, lc, lr, tau, tau_d, s_l, s_r, e, elapsed, in_flight, st_t, st_act, st_ret, st_arr, st_t0, st_lp):
    """Record the walk state after each position of a feasible route."""
    t = 0.0
    active = False
    ret = -1
    arr = 0.0
    t0 = 0.0
    lp = -1
    last = npos - 1
    for p in range(npos):
        v = seq[p]
        if p > 0:
            t += tau[seq[p - 1], v]
            if active and v == ret:
                t = max(t, arr) + s_r
                active = False
        if p < last and lc[v] >= 0:
            k = lc[v]
            j = lr[v]
            legs = tau_d[v, k] + tau_d[k, j]
            if p == 0:
                a = t + legs
                if in_flight:
                    a += s_l
            else:
                t0 = t
                t += s_l
                a = t + legs
            if j == v and p > 0:
                t = max(t, a) + s_r
            else:
                active = True
                ret = j
                arr = a
                lp = p
        st_t[p] = t
        st_act[p] = active
        st_ret[p] = ret
        st_arr[p] = arr
        st_t0[p] = t0
        st_lp[p] = lp
    return t


@njit(cache=True)
def resume_cost(
    seq, npos, lo, hi, lc, lr, tau, tau_d, s_l, s_r, e, elapsed, in_flight,
    st_t, st_act, st_ret, st_arr, st_t0, st_lp, total,
):
    """Makespan of a route that differs from the recorded one only in ``lo..hi``.

    The walk restarts from the recorded state before ``lo`` and stops at the
    first position after ``hi`` where neither walk has a drone in the air;
    from there on the two schedules differ by a constant shift.
    """
    t = st_t[lo - 1]
    active = st_act[lo - 1]
    ret = st_ret[lo - 1]
    arr = st_arr[lo - 1]
    t0 = st_t0[lo - 1]
    lp = st_lp[lo - 1]
    last = npos - 1
    for p in range(lo, npos):
        v = seq[p]
        t += tau[seq[p - 1], v]
        if active and v == ret:
            r = max(t, arr) + s_r
            if elapsed and lp > 0 and r - t0 > e + EPS:
                return INF
            t = r
            active = False
        if p < last and lc[v] >= 0:
            if active:
                return INF
            k = lc[v]
            j = lr[v]
            legs = tau_d[v, k] + tau_d[k, j]
            t0 = t
            t += s_l
            a = t + legs
            if j == v:
                r = max(t, a) + s_r
                if elapsed and r - t0 > e + EPS:
                    return INF
                t = r
            else:
                active = True
                ret = j
                arr = a
                lp = p
        if p > hi and not active and not st_act[p]:
            return t + (total - st_t[p])
    if active:
        return INF
    return t


@njit(cache=True)
def build_intra(kind, seq, p, q, out):
    """Write the moved window into ``out`` (a copy of ``seq``); returns ``(lo, hi)``."""
    if kind == SWAP11:
        out[p] = seq[q]
        out[q] = seq[p]
        return p, q
    if kind == SWAP21:
        if q > p:
            out[p] = seq[q]
            for i in range(p + 2, q):
                out[i - 1] = seq[i]
            out[q - 1] = seq[p]
            out[q] = seq[p + 1]
            return p, q
        out[q] = seq[p]
        out[q + 1] = seq[p + 1]
        for i in range(q + 1, p):
            out[i + 1] = seq[i]
        out[p + 1] = seq[q]
        return q, p + 1
    if kind == SWAP22:
        out[p] = seq[q]
        out[p + 1] = seq[q + 1]
        out[q] = seq[p]
        out[q + 1] = seq[p + 1]
        return p, q + 1
    if kind == TWO_OPT:
        for i in range(p, q + 1):
            out[i] = seq[p + q - i]
        return p, q
    if kind == REINSERTION:
        if q > p:
            for i in range(p, q):
                out[i] = seq[i + 1]
            out[q] = seq[p]
            return p, q
        for i in range(p, q, -1):
            out[i] = seq[i - 1]
        out[q] = seq[p]
        return q, p
    if q > p:
        for i in range(p, q):
            out[i] = seq[i + 2]
        out[q] = seq[p]
        out[q + 1] = seq[p + 1]
        return p, q + 1
    for i in range(p + 1, q + 1, -1):
        out[i] = seq[i - 2]
    out[q] = seq[p]
    out[q + 1] = seq[p + 1]
    return q, p + 1


@njit(cache=True)
def _q_range(kind, p, m):
    """Inclusive-exclusive bounds for the second operand."""
    if kind == SWAP11 or kind == TWO_OPT:
        return p + 1, m + 1
    if kind == SWAP21 or kind == REINSERTION:
        return 1, m + 1
    if kind == SWAP22:
        return p + 2, m
    return 1, m


@njit(cache=True)
def scan_intra(kind, seq, npos, lc, lr, tau, tau_d, s_l, s_r, e, elapsed, in_flight, node_mask, target):
    m = npos - 2
    out = seq.copy()
    st_t = np.empty(npos)
    st_act = np.empty(npos, dtype=np.bool_)
    st_ret = np.empty(npos, dtype=np.int64)
    st_arr = np.empty(npos)
    st_t0 = np.empty(npos)
    st_lp = np.empty(npos, dtype=np.int64)
    total = walk_states(seq, npos, lc, lr, tau, tau_d, s_l, s_r, e, elapsed, in_flight,
                        st_t, st_act, st_ret, st_arr, st_t0, st_lp)
    count = 0
    bp = -1
    bq = -1
    best = INF
    p_hi = m + 1 if kind == SWAP11 or kind == TWO_OPT or kind == REINSERTION else m
    if kind == SWAP22:
        p_hi = m - 2
    for p in range(1, p_hi):
        if not node_mask[seq[p]]:
            continue
        q_lo, q_hi = _q_range(kind, p, m)
        for q in range(q_lo, q_hi):
            if q == p or (kind == SWAP21 and q == p + 1):
                continue
            lo, hi = build_intra(kind, seq, p, q, out)
            obj = resume_cost(out, npos, lo, hi, lc, lr, tau, tau_d, s_l, s_r, e, elapsed, in_flight,
                              st_t, st_act, st_ret, st_arr, st_t0, st_lp, total)
            for i in range(lo, hi + 1):
                out[i] = seq[i]
            if obj == INF:
                continue
            if target >= 0:
                if count == target:
                    return count + 1, p, q, obj
            elif _better(obj, best):
                best = obj
                bp = p
                bq = q
            count += 1
    return count, bp, bq, best


@njit(cache=True)
def _better(obj, best):
    """Strictly lower by more than ``TIE``; near-ties keep the earlier candidate."""
    return obj < best - TIE


@njit(cache=True)
def scan_shift10(
    seq, npos, lc, lr, anchor, elig, tau, tau_d, s_l, s_r, e, elapsed, in_flight, allow_eq, only_j, target
):
    """Move a truck customer ``j`` onto a new sortie ``(i, j, k)``.

    The new sortie must fit inside a stretch of the route no other sortie
    covers.  Its cost is the removal route plus a closed-form surcharge.
    """
    size = npos - 1
    last = size - 1
    buf = np.empty(size, dtype=np.int64)
    pref = np.empty(size)
    is_launch = np.zeros(size, dtype=np.bool_)
    inside = np.zeros(size, dtype=np.bool_)
    ymax = np.empty(size, dtype=np.int64)
    posn = np.empty(tau.shape[0], dtype=np.int64)
    count = 0
    best = INF
    bi = -1
    bj = -1
    bk = -1
    for pj in range(1, npos - 1):
        j = seq[pj]
        if not elig[j] or anchor[j] or (only_j >= 0 and j != only_j):
            continue
        for x in range(pj):
            buf[x] = seq[x]
        for x in range(pj + 1, npos):
            buf[x - 1] = seq[x]
        base = route_cost(buf, size, lc, lr, tau, tau_d, s_l, s_r, e, elapsed, in_flight)
        if base == INF:
            continue
        pref[0] = 0.0
        for x in range(1, size):
            pref[x] = pref[x - 1] + tau[buf[x - 1], buf[x]]
            posn[buf[x]] = x
        posn[0] = last
        end = -1
        for x in range(size):
            inside[x] = x < end
            is_launch[x] = x < last and lc[buf[x]] >= 0
            if is_launch[x]:
                rp = posn[lr[buf[x]]]
                if lr[buf[x]] == buf[x] and x > 0:
                    rp = x
                end = rp
        nxt = last
        for x in range(last, -1, -1):
            ymax[x] = nxt
            if is_launch[x]:
                nxt = x
        for x in range(last):
            if is_launch[x] or inside[x]:
                continue
            i = buf[x]
            y0 = x if allow_eq and x > 0 else x + 1
            for y in range(y0, ymax[x] + 1):
                k = buf[y]
                legs = tau_d[i, j] + tau_d[j, k]
                if legs > e + EPS:
                    continue
                path = pref[y] - pref[x]
                if x > 0:
                    span = s_l + max(path, legs) + s_r
                    if elapsed and span > e + EPS:
                        continue
                    obj = base + span - path
                else:
                    fly = legs + s_l if in_flight else legs
                    obj = base + max(path, fly) + s_r - path
                if target >= 0:
                    if count == target:
                        return count + 1, i, j, k, obj
                elif _better(obj, best):
                    best = obj
                    bi = i
                    bj = j
                    bk = k
                count += 1
    return count, bi, bj, bk, best


@njit(cache=True)
def scan_interswap(
    seq, npos, lc, lr, anchor, elig, dl, dc, dr, tau, tau_d, s_l, s_r, e, elapsed, in_flight, target
):
    """Exchange drone customer ``dc[s]`` with truck customer ``u``.

    ``u`` takes over the sortie and ``dc[s]`` takes ``u``'s route position.
    Sorties are listed in increasing customer order.
    """
    buf = np.empty(npos, dtype=np.int64)
    posn = np.full(tau.shape[0], -1, dtype=np.int64)
    for x in range(1, npos - 1):
        posn[seq[x]] = x
    count = 0
    best = INF
    bd = -1
    bu = -1
    for s in range(dc.shape[0]):
        a = dl[s]
        d = dc[s]
        b = dr[s]
        for u in range(1, tau.shape[0]):
            pu = posn[u]
            if pu < 0 or not elig[u] or anchor[u]:
                continue
            if tau_d[a, u] + tau_d[u, b] > e + EPS:
                continue
            for x in range(npos):
                buf[x] = seq[x]
            buf[pu] = d
            lc[a] = u
            obj = route_cost(buf, npos, lc, lr, tau, tau_d, s_l, s_r, e, elapsed, in_flight)
            lc[a] = d
            if obj == INF:
                continue
            if target >= 0:
                if count == target:
                    return count + 1, d, u, obj
            elif _better(obj, best):
                best = obj
                bd = d
                bu = u
            count += 1
    return count, bd, bu, best


@njit(cache=True)
def scan_swap01(seq, npos, lc, lr, dl, dc, tau, tau_d, s_l, s_r, e, elapsed, in_flight, only_d, target):
    """Cancel the sortie of ``dc[s]`` and insert it before route position ``q``."""
    size = npos + 1
    buf = np.empty(size, dtype=np.int64)
    count = 0
    best = INF
    bd = -1
    bq = -1
    for s in range(dc.shape[0]):
        a = dl[s]
        d = dc[s]
        if only_d >= 0 and d != only_d:
            continue
        lc[a] = -1
        for q in range(1, npos):
            for x in range(q):
                buf[x] = seq[x]
            buf[q] = d
            for x in range(q, npos):
                buf[x + 1] = seq[x]
            obj = route_cost(buf, size, lc, lr, tau, tau_d, s_l, s_r, e, elapsed, in_flight)
            if obj == INF:
                continue
            if target >= 0:
                if count == target:
                    lc[a] = d
                    return count + 1, d, q, obj
            elif _better(obj, best):
                best = obj
                bd = d
                bq = q
            count += 1
        lc[a] = d
    return count, bd, bq, best
