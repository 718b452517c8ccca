"""Solution representation, the reference timeline evaluator and feasibility checks.

A solution is a truck sequence ``(0, c1, ..., cm, 0)`` plus drone sorties
``(launch, customer, return)``.  Launch node 0 means the starting depot and
return node 0 the closing depot.  Between a launch and its rendezvous the two
vehicles move independently; whoever arrives first waits, and the recovery
setup blocks both.  A launch setup at a customer delays both vehicles, while
a launch at the depot never delays the truck.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np

from .instance import ELAPSED, Instance

EPS = 1e-9
OBJ_TOL = 1e-6


class ContractViolation(ValueError):
    """A solution that breaks a structural rule of the problem."""


class SizeError(ValueError):
    """Instance too large for an exact method."""


@dataclass(frozen=True, order=True)
class Sortie:
    launch: int
    customer: int
    ret: int

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.launch, self.customer, self.ret)


def is_catalog_sortie(inst: Instance, i: int, k: int, j: int) -> bool:
    """Whether ``(i, k, j)`` is a legal drone trip on its own.

    Launching and returning at the depot always uses two distinct route
    positions; launching and returning at the same customer needs the
    ``allow_launch_equals_return`` rule.
    """
    if k not in inst.eligible or i == k or j == k:
        return False
    if not (0 <= i <= inst.n and 0 <= j <= inst.n):
        return False
    if i == j and i != 0 and not inst.variant.allow_launch_equals_return:
        return False
    return inst.tau_d[i, k] + inst.tau_d[k, j] <= inst.e + EPS


class SortieCatalog:
    """All legal drone trips of an instance, ordered by ``(i, k, j)``."""

    def __init__(self, inst: Instance):
        self.inst = inst
        self._entries: list[tuple[int, int, int]] | None = None

    def __contains__(self, triple) -> bool:
        i, k, j = triple
        return is_catalog_sortie(self.inst, i, k, j)

    @property
    def entries(self) -> list[tuple[int, int, int]]:
        if self._entries is None:
            inst = self.inst
            nodes = range(inst.n + 1)
            self._entries = [
                (i, k, j)
                for i, k, j in product(nodes, sorted(inst.eligible), nodes)
                if is_catalog_sortie(inst, i, k, j)
            ]
        return self._entries

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def enumerate_sorties(inst: Instance) -> SortieCatalog:
    return SortieCatalog(inst)


@dataclass(frozen=True)
class Solution:
    truck_seq: tuple[int, ...]
    sorties: tuple[Sortie, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "truck_seq", tuple(int(v) for v in self.truck_seq))
        object.__setattr__(
            self, "sorties", tuple(s if isinstance(s, Sortie) else Sortie(*s) for s in self.sorties)
        )

    @property
    def signature(self) -> tuple:
        return (self.truck_seq, tuple(sorted(s.as_tuple() for s in self.sorties)))

    @property
    def drone_customers(self) -> frozenset[int]:
        return frozenset(s.customer for s in self.sorties)

    def spans(self) -> list[tuple[int, int, Sortie]]:
        """``(launch_pos, return_pos, sortie)`` sorted by launch position."""
        pos = {v: p for p, v in enumerate(self.truck_seq[:-1])}
        last = len(self.truck_seq) - 1
        out = []
        for s in self.sorties:
            if s.launch not in pos:
                raise ContractViolation(f"launch node {s.launch} of {s.as_tuple()} not on truck route")
            if s.ret == 0:
                rp = last
            elif s.ret in pos:
                rp = pos[s.ret]
            else:
                raise ContractViolation(f"return node {s.ret} of {s.as_tuple()} not on truck route")
            out.append((pos[s.launch], rp, s))
        out.sort(key=lambda t: (t[0], t[1]))
        return out


@dataclass(frozen=True)
class SubRoute:
    """A contiguous stretch of the truck route between consecutive anchors."""

    start: int
    end: int
    nodes: tuple[int, ...]
    sortie: Sortie | None = None

    @property
    def paired(self) -> bool:
        return self.sortie is not None


def _check_structure(sol: Solution, inst: Instance) -> list[tuple[str, str]]:
    """Structural problems as ``(kind, detail)`` pairs."""
    problems = []
    seq = sol.truck_seq
    if len(seq) < 2 or seq[0] != 0 or seq[-1] != 0:
        problems.append(("route", f"truck route must start and end at the depot: {seq}"))
        return problems
    inner = seq[1:-1]
    if any(not 1 <= v <= inst.n for v in inner):
        problems.append(("route", "truck route contains unknown or repeated depot nodes"))
        return problems
    served = list(inner) + [s.customer for s in sol.sorties]
    if any(not 0 <= c <= inst.n for c in served):
        problems.append(("coverage", "sortie customer out of range"))
        return problems
    counts = np.bincount(np.array(served, dtype=int), minlength=inst.n + 1)
    for c in inst.customers:
        if counts[c] != 1:
            problems.append(("coverage", f"customer {c} served {int(counts[c])} times"))
    if counts[0]:
        problems.append(("coverage", "the depot cannot be a drone customer"))
    if problems:
        return problems
    for s in sol.sorties:
        if not is_catalog_sortie(inst, s.launch, s.customer, s.ret):
            problems.append(("catalog", f"sortie {s.as_tuple()} is not a legal drone trip"))
    launches = [s.launch for s in sol.sorties]
    for v in set(launches):
        if launches.count(v) > 1:
            problems.append(("relaunch", f"node {v} launches {launches.count(v)} sorties"))
    try:
        spans = sol.spans()
    except ContractViolation as exc:
        problems.append(("overlap", str(exc)))
        return problems
    for lp, rp, s in spans:
        if rp < lp or (rp == lp and s.launch == 0):
            problems.append(("overlap", f"sortie {s.as_tuple()} returns before it launches"))
    for (lp1, rp1, s1), (lp2, rp2, s2) in zip(spans, spans[1:]):
        if lp2 < rp1 or lp2 == lp1:
            problems.append(("overlap", f"sorties {s1.as_tuple()} and {s2.as_tuple()} overlap"))
    return problems


def subroute_partition(sol: Solution) -> list[SubRoute]:
    """Split the truck route at every launch and return position.

    A sortie that launches and returns at the same position yields a
    zero-length paired sub-route.
    """
    spans = sol.spans()
    seq = sol.truck_seq
    out = []
    cursor = 0
    for lp, rp, s in spans:
        if lp > cursor:
            out.append(SubRoute(cursor, lp, seq[cursor : lp + 1]))
        out.append(SubRoute(lp, rp, seq[lp : rp + 1], s))
        cursor = rp
    last = len(seq) - 1
    if cursor < last:
        out.append(SubRoute(cursor, last, seq[cursor:]))
    return out


@dataclass(frozen=True)
class SortieTiming:
    sortie: Sortie
    launch_pos: int
    return_pos: int
    launch_clock: float
    drone_arrival: float
    truck_arrival: float
    rendezvous: float

    @property
    def truck_wait(self) -> float:
        return max(0.0, self.drone_arrival - self.truck_arrival)

    @property
    def drone_wait(self) -> float:
        return max(0.0, self.truck_arrival - self.drone_arrival)

    @property
    def flight(self) -> float:
        return self.drone_arrival - self.launch_clock

    @property
    def elapsed(self) -> float:
        return self.rendezvous - self.launch_clock


@dataclass(frozen=True)
class Timeline:
    """Clock values per truck position.

    ``clock[p]`` is when the truck is ready at position ``p`` (after any
    recovery setup, before any launch setup); ``clock[-1]`` is the makespan.
    """

    clock: tuple[float, ...]
    sorties: tuple[SortieTiming, ...] = field(default=())

    @property
    def objective(self) -> float:
        return self.clock[-1]


def evaluate_timeline(sol: Solution, inst: Instance) -> Timeline:
    """Compute the schedule of a structurally valid solution.

    Raises ContractViolation if the route or sorties are malformed.
    Endurance is not checked here.
    """
    problems = _check_structure(sol, inst)
    if problems:
        raise ContractViolation("; ".join(d for _, d in problems))
    seq = sol.truck_seq
    tau, tau_d = inst.tau, inst.tau_d
    s_l, s_r = inst.s_l, inst.s_r
    by_launch = {lp: (rp, s) for lp, rp, s in sol.spans()}
    clock = [0.0] * len(seq)
    timings = []
    pending = None  # (return_pos, sortie, launch_clock, drone_arrival, lp)
    t = 0.0
    for p, v in enumerate(seq):
        if p:
            t += tau[seq[p - 1], v]
        if pending is not None and pending[0] == p:
            rp, s, t0, arr, lp = pending
            r = max(t, arr) + s_r
            timings.append(SortieTiming(s, lp, rp, t0, arr, t, r))
            t = r
            pending = None
        clock[p] = t
        if p in by_launch:
            rp, s = by_launch[p]
            legs = tau_d[s.launch, s.customer] + tau_d[s.customer, s.ret]
            if p == 0:
                depart = t
                arr = t + legs + (s_l if inst.variant.setup_in_flight_time else 0.0)
            else:
                depart = t + s_l
                arr = depart + legs
            if rp == p:
                r = max(depart, arr) + s_r
                timings.append(SortieTiming(s, p, p, t, arr, depart, r))
                t = r
            else:
                pending = (rp, s, t, arr, p)
                t = depart
    return Timeline(tuple(clock), tuple(timings))


@dataclass(frozen=True)
class FeasibilityReport:
    violations: tuple[tuple[str, str], ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def kinds(self) -> set[str]:
        return {k for k, _ in self.violations}


def check_feasibility(sol: Solution, inst: Instance, tl: Timeline | None = None) -> FeasibilityReport:
    """Collect every rule the solution breaks, including drone endurance.

    In elapsed mode a sortie launched away from the depot must be recovered
    within ``e`` of the truck reaching its launch node, setups and waiting
    included.  Otherwise only the two flight legs count.
    """
    problems = _check_structure(sol, inst)
    if problems:
        return FeasibilityReport(tuple(problems))
    if tl is None:
        tl = evaluate_timeline(sol, inst)
    elapsed = inst.variant.endurance_mode == ELAPSED
    for st in tl.sorties:
        s = st.sortie
        legs = inst.tau_d[s.launch, s.customer] + inst.tau_d[s.customer, s.ret]
        used = st.elapsed if elapsed and st.launch_pos > 0 else legs
        if used > inst.e + EPS:
            problems.append(("endurance", f"sortie {s.as_tuple()} needs {used:.6g} > e={inst.e:.6g}"))
    return FeasibilityReport(tuple(problems))


def objective(sol: Solution, inst: Instance) -> float:
    return evaluate_timeline(sol, inst).objective


def solution_to_dict(sol: Solution, inst: Instance) -> dict:
    return {
        "truck_seq": list(sol.truck_seq),
        "sorties": [{"launch": s.launch, "customer": s.customer, "return": s.ret} for s in sol.sorties],
        "objective": objective(sol, inst),
    }


def solution_from_dict(d: dict, inst: Instance) -> Solution:
    """Rebuild a solution and verify its stored objective."""
    try:
        sol = Solution(
            tuple(d["truck_seq"]),
            tuple(Sortie(int(s["launch"]), int(s["customer"]), int(s["return"])) for s in d["sorties"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ContractViolation(f"malformed solution record: {exc}") from None
    report = check_feasibility(sol, inst)
    if not report.ok:
        raise ContractViolation("; ".join(d for _, d in report.violations))
    if "objective" in d:
        value = objective(sol, inst)
        stored = float(d["objective"])
        if not math.isclose(value, stored, rel_tol=0.0, abs_tol=OBJ_TOL):
            raise ContractViolation(f"stored objective {stored} differs from evaluated {value}")
    return sol


def save_solution(sol: Solution, inst: Instance, path) -> None:
    Path(path).write_text(json.dumps(solution_to_dict(sol, inst), indent=1))


def load_solution(path, inst: Instance) -> Solution:
    return solution_from_dict(json.loads(Path(path).read_text()), inst)
