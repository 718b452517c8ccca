"""Truck-only tours used to seed the search.

Tours are node lists that start and end at the depot.  Ties are always
broken toward the lowest node index.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .solution import SizeError

HELD_KARP_MAX = 16
EXACT_SEED_MAX = 13


def tour_length(tour, tau) -> float:
    t = np.asarray(tour)
    return float(np.asarray(tau)[t[:-1], t[1:]].sum())


def nearest_neighbor(tau) -> list[int]:
    tau = np.asarray(tau)
    n1 = tau.shape[0]
    left = np.ones(n1, dtype=bool)
    left[0] = False
    tour = [0]
    while left.any():
        row = np.where(left, tau[tour[-1]], np.inf)
        nxt = int(np.argmin(row))
        tour.append(nxt)
        left[nxt] = False
    tour.append(0)
    return tour


def cheapest_insertion(tau) -> list[int]:
    """Grow the tour by the customer and edge with the smallest length increase."""
    tau = np.asarray(tau)
    n1 = tau.shape[0]
    tour = [0, 0]
    left = list(range(1, n1))
    while left:
        t = np.array(tour)
        a, b = t[:-1], t[1:]
        cand = np.array(left)
        inc = tau[a][:, cand].T + tau[cand][:, b] - tau[a, b][None, :]
        r, pos = np.unravel_index(int(np.argmin(inc)), inc.shape)
        tour.insert(int(pos) + 1, int(cand[r]))
        left.pop(int(r))
    return tour


@njit(cache=True)
def _two_opt(t, tau):
    npos = t.shape[0]
    fwd = np.zeros(npos)
    rev = np.zeros(npos)
    improved = True
    while improved:
        improved = False
        for x in range(1, npos):
            fwd[x] = fwd[x - 1] + tau[t[x - 1], t[x]]
            rev[x] = rev[x - 1] + tau[t[x], t[x - 1]]
        best = -1e-9
        bp = -1
        bq = -1
        for p in range(1, npos - 2):
            for q in range(p + 1, npos - 1):
                old = tau[t[p - 1], t[p]] + (fwd[q] - fwd[p]) + tau[t[q], t[q + 1]]
                new = tau[t[p - 1], t[q]] + (rev[q] - rev[p]) + tau[t[p], t[q + 1]]
                d = new - old
                if d < best:
                    best = d
                    bp = p
                    bq = q
        if bp >= 0:
            t[bp : bq + 1] = t[bp : bq + 1][::-1].copy()
            improved = True
    return t


def two_opt(tour, tau) -> list[int]:
    """Best-improvement 2-opt until no reversal shortens the tour."""
    t = np.array(tour, dtype=np.int64)
    return [int(v) for v in _two_opt(t, np.ascontiguousarray(tau, dtype=np.float64))]


@njit(cache=True)
def _held_karp(tau, n):
    full = 1 << n
    dp = np.full((full, n), np.inf)
    parent = np.full((full, n), -1, dtype=np.int64)
    for c in range(n):
        dp[1 << c, c] = tau[0, c + 1]
    for mask in range(1, full):
        for last in range(n):
            cur = dp[mask, last]
            if cur == np.inf or not (mask >> last) & 1:
                continue
            for nxt in range(n):
                if (mask >> nxt) & 1:
                    continue
                nm = mask | (1 << nxt)
                val = cur + tau[last + 1, nxt + 1]
                if val < dp[nm, nxt]:
                    dp[nm, nxt] = val
                    parent[nm, nxt] = last
    best = np.inf
    bl = -1
    for last in range(n):
        val = dp[full - 1, last] + tau[last + 1, 0]
        if val < best:
            best = val
            bl = last
    order = np.empty(n, dtype=np.int64)
    mask = full - 1
    cur = bl
    for pos in range(n - 1, -1, -1):
        order[pos] = cur + 1
        prev = parent[mask, cur]
        mask ^= 1 << cur
        cur = prev
    return best, order


def held_karp(tau) -> tuple[float, list[int]]:
    """Optimal truck tour by dynamic programming over customer subsets."""
    tau = np.ascontiguousarray(tau, dtype=np.float64)
    n = tau.shape[0] - 1
    if n > HELD_KARP_MAX:
        raise SizeError(f"exact TSP limited to {HELD_KARP_MAX} customers, got {n}")
    if n == 0:
        return 0.0, [0, 0]
    best, order = _held_karp(tau, n)
    return float(best), [0, *(int(v) for v in order), 0]


def choose_seed(tau) -> list[int]:
    """Exact tour for small instances, cheapest insertion plus 2-opt otherwise."""
    n = np.asarray(tau).shape[0] - 1
    if n <= EXACT_SEED_MAX:
        return held_karp(tau)[1]
    return two_opt(cheapest_insertion(tau), tau)
