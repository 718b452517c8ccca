"""Hybrid tabu / general variable neighbourhood search.

Random streams: each run derives two independent PCG64 generators from its
seed with ``SeedSequence.spawn``; the first drives the descent (structure
order and tabu fallbacks), the second drives every perturbation.
"""
from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass

import numpy as np

from .construction import greedy_construction
from .instance import Instance
from .neighborhoods import (
    ALL_KINDS,
    DESCENT_KINDS,
    DRONE_KINDS,
    IMPROVE_TOL,
    INTRA_KINDS,
    Evaluator,
    MoveKind,
    apply,
    best_move,
    random_move,
    random_swap01,
)
from .solution import Solution
from .tsp_seed import choose_seed

TABU_KINDS = frozenset({MoveKind.SHIFT10, MoveKind.INTER_SWAP11})
# Small instances exhaust 9*ceil(n/25) perturbations long before the search
# stalls; this floor keeps ten short runs reliable on them.
K_MAX_FLOOR = 90


@dataclass(frozen=True)
class GvnsParams:
    k_max: int
    rho_max: int
    tabu_size: int

    @classmethod
    def for_size(cls, n: int, k_max: int | None = None) -> GvnsParams:
        return cls(
            k_max=max(9 * math.ceil(n / 25), K_MAX_FLOOR) if k_max is None else k_max,
            rho_max=math.ceil(n / 10),
            tabu_size=2 if n <= 20 else 7,
        )


class TabuList:
    """Recently perturbed solutions, forgotten after ``capacity`` drone moves.

    Only moves that change drone service advance the ageing clock.  When
    full, the oldest entry is dropped.
    """

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._entries: deque[tuple[tuple, int]] = deque()
        self._clock = 0

    def insert(self, signature: tuple) -> None:
        self._entries = deque((s, t) for s, t in self._entries if s != signature)
        self._entries.append((signature, self._clock))
        while len(self._entries) > self.capacity:
            self._entries.popleft()

    def note_drone_move(self) -> None:
        self._clock += 1
        while self._entries and self._clock - self._entries[0][1] >= self.capacity:
            self._entries.popleft()

    def __contains__(self, signature) -> bool:
        return any(s == signature for s, _ in self._entries)

    def __len__(self) -> int:
        return len(self._entries)


@dataclass
class RunStats:
    seed: int
    best_objective: float = math.inf
    initial_objective: float = math.inf
    iterations: int = 0
    shakes: int = 0
    time_ms: float = 0.0
    tsp_seed_time_ms: float = 0.0


def rvnd(
    sol: Solution,
    tabu: TabuList,
    ev: Evaluator,
    rng: np.random.Generator,
    deadline: float = math.inf,
) -> tuple[Solution, float]:
    """Best-improvement descent over the eight structures in random order.

    While the last visited solution is tabu only intra-route structures are
    tried, chosen at random.
    """
    best = sol
    f_best = ev.cost(sol)
    last = sol
    order = list(DESCENT_KINDS)
    rng.shuffle(order)
    k = 0
    while k < len(order) and time.perf_counter() < deadline:
        if last.signature in tabu:
            kind = INTRA_KINDS[int(rng.integers(len(INTRA_KINDS)))]
        else:
            kind = order[k]
        found = best_move(best, kind, ev, f_best)
        if found is None:
            last = best
            k += 1
            continue
        mv, _ = found
        last = apply(best, mv)
        if kind in DRONE_KINDS:
            tabu.note_drone_move()
        best, f_best = last, ev.cost(last)
        k = 0
        rng.shuffle(order)
    return best, f_best


def gvns(
    inst: Instance,
    seed: int = 0,
    params: GvnsParams | None = None,
    time_limit: float | None = None,
    ev: Evaluator | None = None,
) -> tuple[Solution, RunStats]:
    """One run: seed tour, greedy construction, then perturb-and-descend."""
    ev = ev or Evaluator(inst)
    params = params or GvnsParams.for_size(inst.n)
    descent_rng, shake_rng = (np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(2))
    stats = RunStats(seed=seed)
    start = time.perf_counter()
    deadline = math.inf if time_limit is None else start + time_limit

    tour = choose_seed(inst.tau)
    stats.tsp_seed_time_ms = (time.perf_counter() - start) * 1e3
    cur = greedy_construction(tour, inst, ev)
    f_cur = ev.cost(cur)
    best, f_best = cur, f_cur
    stats.initial_objective = f_cur

    tabu = TabuList(params.tabu_size)
    k, rho = 1, 0
    while k <= params.k_max and time.perf_counter() < deadline:
        stats.iterations += 1
        kind = ALL_KINDS[(k - 1) % len(ALL_KINDS)]
        mv = random_move(cur, kind, ev, shake_rng)
        if mv is None:
            k += 1
            continue
        cur = apply(cur, mv)
        stats.shakes += 1
        if kind in DRONE_KINDS:
            tabu.note_drone_move()
        if kind in TABU_KINDS:
            tabu.insert(cur.signature)
        cur, f_cur = rvnd(cur, tabu, ev, descent_rng, deadline)
        if f_cur < f_best - IMPROVE_TOL:
            best, f_best = cur, f_cur
            k, rho = 1, 0
        else:
            k += 1
        for _ in range(rho):
            mv = random_swap01(cur, ev, shake_rng)
            if mv is None:
                break
            cur = apply(cur, mv)
            tabu.note_drone_move()
            stats.shakes += 1
        f_cur = ev.cost(cur)
        rho = rho % params.rho_max + 1

    stats.best_objective = f_best
    stats.time_ms = (time.perf_counter() - start) * 1e3
    return best, stats


def solve(
    inst: Instance,
    seed: int = 0,
    runs: int = 1,
    time_limit: float | None = None,
    params: GvnsParams | None = None,
) -> tuple[Solution, list[RunStats]]:
    """Best of ``runs`` independent runs; run ``r`` uses seed ``seed + r``."""
    ev = Evaluator(inst)
    best, f_best, all_stats = None, math.inf, []
    for r in range(runs):
        sol, stats = gvns(inst, seed + r, params, time_limit, ev)
        all_stats.append(stats)
        if stats.best_objective < f_best - IMPROVE_TOL or best is None:
            best, f_best = sol, stats.best_objective
    return best, all_stats
