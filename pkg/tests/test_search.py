import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fstsp.instance import random_instance
from fstsp.neighborhoods import DESCENT_KINDS, Evaluator, best_move
from fstsp.oracle import brute_force
from fstsp.search import K_MAX_FLOOR, GvnsParams, TabuList, gvns, rvnd, solve
from fstsp.solution import Solution, Sortie, check_feasibility, objective
from fstsp.tsp_seed import held_karp

from conftest import make_instance, random_solution


def test_tabu_list_fifo_and_ageing():
    tabu = TabuList(2)
    tabu.insert("a")
    tabu.insert("b")
    assert "a" in tabu and "b" in tabu
    tabu.insert("c")
    assert "a" not in tabu and len(tabu) == 2
    tabu.note_drone_move()
    assert "b" in tabu
    tabu.note_drone_move()
    assert "b" not in tabu and "c" not in tabu and len(tabu) == 0


def test_tabu_reinsert_refreshes_age():
    tabu = TabuList(2)
    tabu.insert("a")
    tabu.note_drone_move()
    tabu.insert("a")
    assert len(tabu) == 1
    tabu.note_drone_move()
    assert "a" in tabu
    tabu.note_drone_move()
    assert "a" not in tabu


def test_signature_ignores_sortie_order():
    a = Solution((0, 1, 2, 0), (Sortie(0, 3, 1), Sortie(1, 4, 2)))
    b = Solution((0, 1, 2, 0), (Sortie(1, 4, 2), Sortie(0, 3, 1)))
    tabu = TabuList(2)
    tabu.insert(a.signature)
    assert b.signature in tabu


@pytest.mark.parametrize(
    "n, k_max, rho_max, tabu_size",
    [(5, K_MAX_FLOOR, 1, 2), (20, K_MAX_FLOOR, 2, 2), (21, K_MAX_FLOOR, 3, 7), (250, 90, 25, 7), (500, 180, 50, 7)],
)
def test_params_for_size(n, k_max, rho_max, tabu_size):
    assert GvnsParams.for_size(n) == GvnsParams(k_max, rho_max, tabu_size)
    assert GvnsParams.for_size(n, 7).k_max == 7


@settings(max_examples=40)
@given(st.integers(3, 10), st.integers(0, 10_000), st.sampled_from(["ponza", "murray", "tspd"]))
def test_rvnd_reaches_local_optimum(n, seed, preset):
    inst = random_instance(n, preset, seed=seed, endurance=30)
    ev = Evaluator(inst)
    start = random_solution(inst, np.random.default_rng(seed))
    out, f = rvnd(start, TabuList(2), ev, np.random.default_rng(seed))
    assert check_feasibility(out, inst).ok
    assert f == pytest.approx(objective(out, inst), abs=1e-9)
    assert f <= objective(start, inst) + 1e-9
    assert all(best_move(out, kind, ev, f) is None for kind in DESCENT_KINDS)
    again, g = rvnd(start, TabuList(2), ev, np.random.default_rng(seed))
    assert again == out and g == f
    same, h = rvnd(out, TabuList(2), ev, np.random.default_rng(seed + 1))
    assert same == out and h == f


def test_gvns_single_customer_is_optimal():
    tau = np.array([[0, 6], [6, 0]], dtype=float)
    for preset in ("ponza", "murray", "tspd"):
        inst = make_instance(tau, tau / 3, e=100, s_l=1, s_r=1, eligible={1}, preset=preset)
        sol, stats = gvns(inst, seed=0)
        assert stats.best_objective == pytest.approx(brute_force(inst)[0])
        assert objective(sol, inst) == pytest.approx(stats.best_objective)


def test_gvns_is_deterministic():
    inst = random_instance(12, "ponza", seed=8)
    a, sa = gvns(inst, seed=4)
    b, sb = gvns(inst, seed=4)
    assert a == b and sa.best_objective == sb.best_objective and sa.iterations == sb.iterations


@pytest.mark.parametrize("n", [4, 9, 13])
def test_no_eligible_customers_gives_tsp(n):
    inst = random_instance(n, "ponza", seed=n, eligible_fraction=0.0)
    assert not inst.eligible
    sol, stats = gvns(inst, seed=1)
    assert not sol.sorties
    assert stats.best_objective == pytest.approx(held_karp(inst.tau)[0], abs=1e-9)


@settings(max_examples=15)
@given(st.integers(2, 15), st.integers(0, 10_000), st.sampled_from(["ponza", "murray", "tspd"]))
def test_incumbent_is_feasible_and_not_worse_than_start(n, seed, preset):
    inst = random_instance(n, preset, seed=seed)
    sol, stats = gvns(inst, seed=seed, params=GvnsParams.for_size(n, 20))
    assert check_feasibility(sol, inst).ok
    assert objective(sol, inst) == pytest.approx(stats.best_objective, abs=1e-9)
    assert stats.best_objective <= stats.initial_objective + 1e-9


def test_solve_uses_consecutive_seeds():
    inst = random_instance(8, "murray", seed=2)
    params = GvnsParams.for_size(8, 15)
    best, stats = solve(inst, seed=10, runs=3, params=params)
    assert [s.seed for s in stats] == [10, 11, 12]
    singles = [gvns(inst, seed=s, params=params)[1].best_objective for s in (10, 11, 12)]
    assert [s.best_objective for s in stats] == singles
    assert objective(best, inst) == pytest.approx(min(singles))


def test_time_limit_stops_early():
    inst = random_instance(60, "ponza", seed=1)
    _, stats = gvns(inst, seed=0, params=GvnsParams.for_size(60, 10_000), time_limit=0.5)
    assert stats.time_ms < 5_000
    assert stats.iterations < 10_000


def test_single_run_matches_oracle_on_small_ponza():
    hits = 0
    for s in range(50):
        inst = random_instance(5, "ponza", seed=500 + s)
        opt = brute_force(inst)[0]
        found = gvns(inst, seed=s)[1].best_objective
        assert found >= opt - 1e-6
        hits += math.isclose(found, opt, abs_tol=1e-6)
    assert hits >= 45
