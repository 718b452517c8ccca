import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fstsp.construction import create_initial_solution, greedy_construction
from fstsp.instance import random_instance
from fstsp.neighborhoods import Evaluator, MoveKind
from fstsp.solution import Solution, Sortie, check_feasibility, objective
from fstsp.tsp_seed import choose_seed, tour_length

from conftest import make_instance


def test_no_eligible_customers_keeps_tour():
    inst = random_instance(7, seed=1, eligible_fraction=0.0)
    tour = choose_seed(inst.tau)
    sol = greedy_construction(tour, inst)
    assert sol == Solution(tuple(tour))


def test_tiny_endurance_keeps_tour():
    inst = random_instance(6, seed=2, endurance=1e-6)
    tour = choose_seed(inst.tau)
    assert greedy_construction(tour, inst).sorties == ()


def test_far_customer_goes_to_drone():
    tau = np.array([[0, 2, 30], [2, 0, 30], [30, 30, 0]], dtype=float)
    inst = make_instance(tau, tau / 2, e=100, eligible={2})
    sol = create_initial_solution([0, 1, 2, 0], inst)
    assert sol.drone_customers == {2}
    truck_only = objective(Solution((0, 1, 2, 0)), inst)
    assert objective(sol, inst) < truck_only
    assert sol.sorties[0] in (Sortie(0, 2, 1), Sortie(1, 2, 0), Sortie(0, 2, 0))


@given(st.integers(1, 12), st.integers(0, 10_000), st.sampled_from(["ponza", "murray", "tspd"]))
def test_construction_is_feasible_and_never_worse(n, seed, preset):
    inst = random_instance(n, preset, seed=seed)
    tour = choose_seed(inst.tau)
    sol = greedy_construction(tour, inst)
    assert check_feasibility(sol, inst).ok
    assert objective(sol, inst) <= tour_length(tour, inst.tau) + 1e-9
    ev = Evaluator(inst)
    # local optimality with respect to the two construction moves
    best_drone = ev.scan(sol, MoveKind.SHIFT10)[2]
    best_truck = ev.scan(sol, MoveKind.REINSERTION, node_mask=ev.elig)[2]
    assert min(best_drone, best_truck) >= objective(sol, inst) - 1e-9


def test_construction_prefers_truck_on_exact_tie():
    # moving customer 2 between 1 and 3 and flying it from 1 to 3 both give 4
    tau = np.array([[0, 1, 3, 1], [1, 0, 1, 2], [3, 1, 0, 1], [1, 2, 1, 0]], dtype=float)
    inst = make_instance(tau, tau, e=100, eligible={2})
    ev = Evaluator(inst)
    start = Solution((0, 2, 1, 3, 0))
    assert ev.scan(start, MoveKind.SHIFT10)[2] == pytest.approx(4.0)
    sol = greedy_construction(start.truck_seq, inst)
    assert sol == Solution((0, 1, 2, 3, 0))
