import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fstsp.instance import random_instance
from fstsp.oracle import ORACLE_MAX, brute_force, brute_force_optimum
from fstsp.search import GvnsParams, gvns
from fstsp.solution import Solution, SizeError, Sortie, check_feasibility, objective
from fstsp.tsp_seed import held_karp

from conftest import make_instance, random_solution

PRESET = st.sampled_from(["ponza", "murray", "tspd"])


@pytest.mark.parametrize("n", [1, 4, 7])
def test_no_eligible_customers_gives_tsp(n):
    inst = random_instance(n, "ponza", seed=n, eligible_fraction=0.0)
    value, sol = brute_force(inst)
    assert not sol.sorties
    assert value == pytest.approx(held_karp(inst.tau)[0], abs=1e-9)


@pytest.mark.parametrize("preset", ["ponza", "murray", "tspd"])
@pytest.mark.parametrize("speed", [0.25, 3.0])
def test_single_customer(preset, speed):
    tau = np.array([[0, 6], [6, 0]], dtype=float)
    inst = make_instance(tau, tau * speed, e=100, s_l=1, s_r=1, eligible={1}, preset=preset)
    value, sol = brute_force(inst)
    by_truck = 12.0
    # a depot launch charges the launch setup only where it counts as flight time
    by_drone = 12.0 * speed + (1.0 if preset == "murray" else 2.0)
    assert value == pytest.approx(min(by_truck, by_drone))
    assert bool(sol.sorties) == (by_drone < by_truck)


def test_size_limit():
    with pytest.raises(SizeError):
        brute_force(random_instance(ORACLE_MAX + 1, seed=0))


@settings(max_examples=30)
@given(st.integers(1, 6), st.integers(0, 10_000), PRESET)
def test_optimum_is_feasible_and_a_lower_bound(n, seed, preset):
    inst = random_instance(n, preset, seed=seed, endurance=25)
    sol, value = brute_force_optimum(inst)
    assert check_feasibility(sol, inst).ok
    assert objective(sol, inst) == pytest.approx(value, abs=1e-9)
    assert value <= held_karp(inst.tau)[0] + 1e-9
    rng = np.random.default_rng(seed)
    for _ in range(5):
        assert value <= objective(random_solution(inst, rng, steps=10), inst) + 1e-9
    found = gvns(inst, seed=seed, params=GvnsParams.for_size(n, 20))[1].best_objective
    assert value <= found + 1e-9


def test_hand_checked_two_sortie_case():
    # unit square, depot at a corner; a fast drone serves the two far corners
    tau = np.array([[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]], dtype=float)
    inst = make_instance(tau, tau / 10, eligible={1, 3})
    value, sol = brute_force(inst)
    assert value == pytest.approx(4.0)
    # the truck alone can do no better than 4; any sortie also needs the truck's 4
    assert objective(Solution((0, 2, 0), (Sortie(0, 1, 2), Sortie(2, 3, 0))), inst) == pytest.approx(4.0)
