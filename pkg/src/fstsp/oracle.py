"""Exhaustive reference solver for tiny instances.

Every split of the customers into truck and drone sets, every truck order
and every placement of sorties on the route is enumerated.  The makespan of
a candidate is the truck path length plus, for each sortie spanning route
positions ``x..y``, the surcharge ``setup + max(path, flight) + recovery - path``.
Branches whose partial makespan already exceeds the incumbent are cut, which
cannot remove an optimum because every surcharge is non-negative.
"""
from __future__ import annotations

from itertools import combinations, permutations

from .instance import ELAPSED, Instance
from .solution import EPS, SizeError, Solution, Sortie, check_feasibility, evaluate_timeline

ORACLE_MAX = 8
TIE_TOL = 1e-9


def brute_force(inst: Instance) -> tuple[float, Solution]:
    """Optimal makespan and solution; ties go to the smallest truck route."""
    if inst.n > ORACLE_MAX:
        raise SizeError(f"exhaustive search limited to {ORACLE_MAX} customers, got {inst.n}")
    tau, tau_d = inst.tau, inst.tau_d
    s_l, s_r, e = inst.s_l, inst.s_r, inst.e
    elapsed = inst.variant.endurance_mode == ELAPSED
    in_flight = inst.variant.setup_in_flight_time
    allow_eq = inst.variant.allow_launch_equals_return
    best = [float("inf"), None]

    def offer(value, seq, chosen):
        key = (seq, tuple(sorted(chosen)))
        if value < best[0] - TIE_TOL or (value <= best[0] + TIE_TOL and key < best[1]):
            best[0], best[1] = value, key

    def surcharge(seq, pref, x, y, k):
        i, j = seq[x], seq[y]
        legs = tau_d[i, k] + tau_d[k, j]
        if legs > e + EPS:
            return None
        path = pref[y] - pref[x]
        if x == 0:
            fly = legs + s_l if in_flight else legs
            return max(path, fly) + s_r - path
        span = s_l + max(path, legs) + s_r
        if elapsed and span > e + EPS:
            return None
        return span - path

    def place(seq, pref, base, min_x, prev_x, remaining, acc, chosen):
        if not remaining:
            offer(base + acc, seq, chosen)
            return
        last = len(seq) - 1
        for x in range(max(min_x, prev_x + 1), last):
            for y in range(x, last + 1):
                if y == x and not (allow_eq and x > 0):
                    continue
                for k in remaining:
                    g = surcharge(seq, pref, x, y, k)
                    if g is None or base + acc + g > best[0] + TIE_TOL:
                        continue
                    rest = tuple(c for c in remaining if c != k)
                    place(seq, pref, base, y, x, rest, acc + g, chosen + [(seq[x], k, seq[y])])

    customers = list(inst.customers)
    eligible = sorted(inst.eligible)
    for size in range(len(eligible) + 1):
        for drone in combinations(eligible, size):
            truck = [c for c in customers if c not in drone]
            if size > len(truck) + 1:
                continue
            for perm in permutations(truck):
                seq = (0, *perm, 0)
                pref = [0.0]
                for a, b in zip(seq, seq[1:]):
                    pref.append(pref[-1] + tau[a, b])
                base = pref[-1]
                if base > best[0] + TIE_TOL:
                    continue
                place(seq, pref, base, 0, -1, drone, 0.0, [])

    seq, triples = best[1]
    sol = Solution(seq, tuple(Sortie(*t) for t in triples))
    report = check_feasibility(sol, inst)
    assert report.ok, report.violations
    return evaluate_timeline(sol, inst).objective, sol


def brute_force_optimum(inst: Instance) -> tuple[Solution, float]:
    """Same as :func:`brute_force` with the pair in ``(solution, objective)`` order."""
    value, sol = brute_force(inst)
    return sol, value
