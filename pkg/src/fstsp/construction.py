"""Greedy conversion of a truck tour into a truck-and-drone solution."""
from __future__ import annotations

from .instance import Instance
from .neighborhoods import IMPROVE_TOL, Evaluator, MoveKind, apply
from .solution import Solution


def greedy_construction(tour, inst: Instance, ev: Evaluator | None = None) -> Solution:
    """Repeatedly relocate or launch the single most profitable eligible customer.

    Each pass compares the best truck relocation of an eligible customer with
    the best way to serve one of them by a new sortie, applies the cheaper
    (the relocation on a tie) and stops once neither lowers the makespan.
    """
    ev = ev or Evaluator(inst)
    sol = Solution(tuple(tour))
    current = ev.cost(sol)
    while True:
        _, truck_mv, truck_obj = ev.scan(sol, MoveKind.REINSERTION, node_mask=ev.elig)
        _, drone_mv, drone_obj = ev.scan(sol, MoveKind.SHIFT10)
        if drone_mv is not None and (truck_mv is None or drone_obj < truck_obj):
            mv, obj = drone_mv, drone_obj
        else:
            mv, obj = truck_mv, truck_obj
        if mv is None or obj >= current - IMPROVE_TOL:
            return sol
        sol = apply(sol, mv)
        current = ev.cost(sol)


create_initial_solution = greedy_construction
