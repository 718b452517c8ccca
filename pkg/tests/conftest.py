import math

import numpy as np
from hypothesis import HealthCheck, settings

from fstsp.instance import Instance, VariantConfig

settings.register_profile(
    "repo", deadline=None, derandomize=True, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")


def make_instance(tau, tau_d=None, e=math.inf, s_l=0.0, s_r=0.0, eligible=None, preset="ponza", name="t"):
    tau = np.asarray(tau, dtype=float)
    tau_d = tau if tau_d is None else np.asarray(tau_d, dtype=float)
    n = tau.shape[0] - 1
    eligible = range(1, n + 1) if eligible is None else eligible
    return Instance(n, tau, tau_d, e, s_l, s_r, frozenset(eligible), VariantConfig.preset(preset), name)


def square_tau(points):
    xy = np.asarray(points, dtype=float)
    return np.sqrt(((xy[:, None] - xy[None]) ** 2).sum(axis=2))


def random_solution(inst, rng, steps=6):
    """A feasible solution reached by random moves from a shuffled tour."""
    from fstsp.neighborhoods import ALL_KINDS, Evaluator, apply, random_move
    from fstsp.solution import Solution

    ev = Evaluator(inst)
    perm = [int(c) for c in rng.permutation(np.arange(1, inst.n + 1))]
    sol = Solution((0, *perm, 0))
    for _ in range(steps):
        kind = ALL_KINDS[int(rng.integers(len(ALL_KINDS)))]
        mv = random_move(sol, kind, ev, rng)
        if mv is not None:
            sol = apply(sol, mv)
    return sol


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS, key=lambda k: (int(k.split()[1]), k)):
            terminalreporter.write_line(RESULTS[key])
