"""Moment-indexed MIP formulation of the FSTSP and LP / MPS writers.

Variables: ``t_l`` is the clock at route moment ``l`` (``t_{n+1}`` is the
makespan), ``x_l_i_j`` says the truck drives arc ``(i, j)`` at moment ``l``
and ``y_l_lp_i_k_j`` says the drone leaves ``i`` at moment ``l``, serves
``k`` and rejoins the truck at ``j`` at moment ``lp``.

Only variables that can take value one in some feasible solution are
generated: the depot is left at moment 0 only, customers occupy moments
1..n-1 whenever a sortie exists, and in elapsed-endurance mode a sortie
whose shortest possible truck detour already exceeds the battery is dropped.
The single-customer case also gets a depot loop ``x_0_0_0`` so the truck may
stay home while the drone makes the only delivery.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .instance import ELAPSED, Instance
from .solution import Solution, SortieCatalog, evaluate_timeline

LE, GE, EQ = "<=", ">=", "="


class ModelError(ValueError):
    """The instance cannot be expressed by this formulation."""


@dataclass(frozen=True)
class Var:
    name: str
    binary: bool = False
    lb: float = 0.0
    ub: float = math.inf


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple[tuple[str, float], ...]
    sense: str
    rhs: float = 0.0


@dataclass
class Model:
    name: str = "fstsp"
    vars: list[Var] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: tuple[tuple[str, float], ...] = ()
    big_m: float = 0.0

    def stats(self) -> dict[str, int]:
        return model_stats(self)


def model_stats(model: Model) -> dict[str, int]:
    return {
        "n_vars": len(model.vars),
        "n_constrs": len(model.constraints),
        "n_binaries": sum(v.binary for v in model.vars),
    }


def t_name(l: int) -> str:
    return f"t_{l}"


def x_name(l: int, i: int, j: int) -> str:
    return f"x_{l}_{i}_{j}"


def y_name(l: int, lp: int, i: int, k: int, j: int) -> str:
    return f"y_{l}_{lp}_{i}_{k}_{j}"


def big_m(inst: Instance) -> float:
    """Upper bound on the makespan of any feasible solution.

    Each node is left once along its longest arc, and each customer may add
    one drone round trip through its farthest nodes plus both setups.
    """
    tau = np.asarray(inst.tau)
    tau_d = np.asarray(inst.tau_d)
    truck = float(tau.max(axis=1).sum())
    flight = sum(float(tau_d[:, k].max() + tau_d[k, :].max()) for k in inst.eligible)
    return truck + flight + inst.n * (inst.s_l + inst.s_r)


def _walk_bounds(inst: Instance, hops: int) -> np.ndarray:
    """``w[h, i, j]``: shortest truck walk from i to j using exactly h arcs via customers."""
    tau = np.asarray(inst.tau)
    n1 = inst.n + 1
    w = np.full((hops + 1, n1, n1), np.inf)
    w[1] = tau
    via = tau[1:, :]
    for h in range(2, hops + 1):
        w[h] = np.min(w[h - 1][:, 1:, None] + via[None, :, :], axis=1)
    return w


def _moment_pairs(inst: Instance, i: int, k: int, j: int, walks) -> list[tuple[int, int]]:
    n = inst.n
    launch = [0] if i == 0 else range(1, n)
    elapsed = inst.variant.endurance_mode == ELAPSED and math.isfinite(inst.e)
    legs = inst.tau_d[i, k] + inst.tau_d[k, j]
    pairs = []
    for l in launch:
        top = n if j == 0 else n - 1
        for lp in range(l + 1, top + 1):
            if j == 0 and i == 0 and lp == 1 and n > 1:
                continue
            if elapsed and l > 0:
                if inst.s_l + max(legs, walks[lp - l, i, j]) + inst.s_r > inst.e + 1e-9:
                    continue
            pairs.append((l, lp))
    return pairs


def build_model(inst: Instance) -> Model:
    """Formulation for the instance's variant.

    Elapsed endurance adds the big-M endurance rows; when the launch setup
    does not count as flight time, depot launches leave it out of the drone
    timing rows.  Launch-equals-return sorties cannot be represented.
    """
    if inst.variant.allow_launch_equals_return:
        raise ModelError("sorties returning to their launch customer are not representable")
    n = inst.n
    tau, tau_d = inst.tau, inst.tau_d
    s_l, s_r = inst.s_l, inst.s_r
    model = Model(name=inst.name or "fstsp", big_m=big_m(inst))
    big = model.big_m
    nodes = range(n + 1)

    arcs: dict[int, list[tuple[int, int]]] = {}
    arcs[0] = [(0, j) for j in range(1, n + 1)] + ([(0, 0)] if n == 1 else [])
    for l in range(1, n + 1):
        targets = [0] if l == n else list(nodes)
        arcs[l] = [(i, j) for i in range(1, n + 1) for j in targets if j != i]

    walks = _walk_bounds(inst, n)
    ys: list[tuple[int, int, int, int, int]] = []
    for i, k, j in SortieCatalog(inst):
        for l, lp in _moment_pairs(inst, i, k, j, walks):
            ys.append((l, lp, i, k, j))
    ys.sort()

    model.vars.extend(Var(t_name(l)) for l in range(n + 2))
    model.vars.extend(Var(x_name(l, i, j), binary=True) for l in range(n + 1) for i, j in arcs[l])
    model.vars.extend(Var(y_name(*key), binary=True) for key in ys)

    out_arcs = defaultdict(list)   # node -> [(l, name)]
    in_arcs = defaultdict(list)
    at_moment = defaultdict(list)  # l -> names
    for l in range(n + 1):
        for i, j in arcs[l]:
            name = x_name(l, i, j)
            out_arcs[i].append((l, name))
            in_arcs[j].append((l, name))
            at_moment[l].append(name)

    by_launch = defaultdict(list)   # (i, l) -> names
    by_return = defaultdict(list)   # (j, lp) -> names
    by_customer = defaultdict(list)
    by_pair = defaultdict(list)     # (l, lp) -> [(name, i, k, j)]
    for l, lp, i, k, j in ys:
        name = y_name(l, lp, i, k, j)
        by_launch[i, l].append(name)
        by_return[j, lp].append(name)
        by_customer[k].append(name)
        by_pair[l, lp].append((name, i, k, j))

    cons = model.constraints

    def add(name, terms, sense, rhs=0.0):
        merged: dict[str, float] = {}
        for var, coef in terms:
            merged[var] = merged.get(var, 0.0) + coef
        cons.append(Constraint(name, tuple((v, c) for v, c in merged.items() if c), sense, float(rhs)))

    # leave and re-enter the depot once
    add("depot_out", [(x, 1.0) for l, x in out_arcs[0] if l == 0], EQ, 1)
    add("depot_in", [(x, 1.0) for l, x in in_arcs[0] if l >= 1 or n == 1], EQ, 1)
    # every node entered as often as left, at most once
    for v in nodes:
        outs = [(x, 1.0) for _, x in out_arcs[v]]
        ins = [(x, 1.0) for _, x in in_arcs[v]]
        balance = defaultdict(float)
        for x, c in outs:
            balance[x] += c
        for x, c in ins:
            balance[x] -= c
        add(f"visit_bal_{v}", [(x, c) for x, c in balance.items() if c], EQ, 0)
        add(f"visit_max_{v}", outs, LE, 1)
    # a customer reached at moment l-1 is left at moment l
    for k in range(1, n + 1):
        for l in range(1, n + 1):
            terms = [(x, 1.0) for m, x in in_arcs[k] if m == l - 1]
            terms += [(x, -1.0) for m, x in out_arcs[k] if m == l]
            if terms:
                add(f"flow_{k}_{l}", terms, EQ, 0)
    # one arc per moment
    for l in range(n + 1):
        add(f"one_arc_{l}", [(x, 1.0) for x in at_moment[l]], LE, 1)
    # at most one sortie in the air across each moment
    for l in range(n + 1):
        terms = [(name, 1.0) for (a, b), group in by_pair.items() if a <= l < b for name, *_ in group]
        if terms:
            add(f"one_drone_{l}", sorted(terms), LE, 1)
    # each customer served once, by truck or drone
    for k in range(1, n + 1):
        add(f"cover_{k}", [(x, 1.0) for _, x in out_arcs[k]] + [(y, 1.0) for y in by_customer[k]], EQ, 1)
    # sorties leave from and return to the truck's current node
    for (i, l), names in sorted(by_launch.items()):
        terms = [(y, 1.0) for y in names] + [(x, -1.0) for m, x in out_arcs[i] if m == l]
        add(f"launch_{i}_{l}", terms, LE, 0)
    for (j, lp), names in sorted(by_return.items()):
        terms = [(y, 1.0) for y in names] + [(x, -1.0) for m, x in in_arcs[j] if m == lp - 1]
        add(f"return_{j}_{lp}", terms, LE, 0)
    # battery: launch to rendezvous within e, measured from customer launches
    if inst.variant.endurance_mode == ELAPSED and math.isfinite(inst.e):
        for (l, lp), group in sorted(by_pair.items()):
            if l == 0:
                continue
            terms = [(t_name(lp), 1.0), (t_name(l), -1.0)] + [(name, big) for name, *_ in group]
            add(f"endurance_{l}_{lp}", terms, LE, inst.e + big)
    # truck clock
    for l in range(1, n + 2):
        terms = [(t_name(l), 1.0), (t_name(l - 1), -1.0)]
        terms += [(x_name(l - 1, i, j), -float(tau[i, j])) for i, j in arcs.get(l - 1, ()) if tau[i, j]]
        if l > 1 and s_l:
            terms += [(name, -s_l) for (a, b), group in sorted(by_pair.items()) if a == l - 1 for name, *_ in group]
        if s_r:
            terms += [(name, -s_r) for (a, b), group in sorted(by_pair.items()) if b == l for name, *_ in group]
        add(f"time_truck_{l}", terms, GE, 0)
    # drone clock
    in_flight = inst.variant.setup_in_flight_time
    for (l, lp), group in sorted(by_pair.items()):
        terms = [(t_name(lp), 1.0), (t_name(l), -1.0)]
        for name, i, k, j in group:
            setup = s_l if (l > 0 or in_flight) else 0.0
            terms.append((name, -(setup + float(tau_d[i, k] + tau_d[k, j]) + s_r)))
        add(f"time_drone_{l}_{lp}", terms, GE, 0)
    add("t_start", [(t_name(0), 1.0)], EQ, 0)

    model.objective = ((t_name(n + 1), 1.0),)
    return model


def adapt_murray(model: Model, inst: Instance) -> Model:
    """Drop the endurance rows and leave the launch setup out of depot-launch flight time.

    Drone timing rows are rewritten from the instance data, so applying the
    adaptation twice, or to a model already built without the setup, is harmless.
    """
    tau_d = inst.tau_d
    out = []
    for c in model.constraints:
        if c.name.startswith("endurance_"):
            continue
        if c.name.startswith("time_drone_0_"):
            terms = []
            for name, coef in c.terms:
                if name.startswith("y_"):
                    i, k, j = map(int, name.split("_")[3:])
                    coef = -(float(tau_d[i, k] + tau_d[k, j]) + inst.s_r)
                terms.append((name, coef))
            c = replace(c, terms=tuple(terms))
        out.append(c)
    return replace(model, constraints=out)


def encode_solution(sol: Solution, inst: Instance) -> dict[str, float]:
    """Model values that represent ``sol``; unlisted variables are zero."""
    tl = evaluate_timeline(sol, inst)
    seq = sol.truck_seq
    values: dict[str, float] = {}
    for l, (a, b) in enumerate(zip(seq, seq[1:])):
        values[x_name(l, a, b)] = 1.0
    for lp, rp, s in sol.spans():
        values[y_name(lp, rp, s.launch, s.customer, s.ret)] = 1.0
    clock = list(tl.clock)
    for l in range(inst.n + 2):
        values[t_name(l)] = clock[min(l, len(clock) - 1)]
    return values


def check_assignment(model: Model, values: dict[str, float], tol: float = 1e-6) -> list[str]:
    """Names of violated rows plus any variable missing from the model."""
    known = {v.name for v in model.vars}
    problems = [f"unknown variable {name}" for name in values if name not in known]
    for c in model.constraints:
        lhs = sum(coef * values.get(name, 0.0) for name, coef in c.terms)
        if c.sense == LE and lhs > c.rhs + tol:
            problems.append(c.name)
        elif c.sense == GE and lhs < c.rhs - tol:
            problems.append(c.name)
        elif c.sense == EQ and abs(lhs - c.rhs) > tol:
            problems.append(c.name)
    return problems


def objective_value(model: Model, values: dict[str, float]) -> float:
    return sum(coef * values.get(name, 0.0) for name, coef in model.objective)


def _num(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _lp_expr(terms) -> list[str]:
    parts = []
    for name, coef in terms:
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = name if mag == 1 else f"{_num(mag)} {name}"
        parts.append(f"{sign} {body}")
    if parts and parts[0].startswith("+ "):
        parts[0] = parts[0][2:]
    return parts or ["0 " + "t_0"]


def _wrap(head: str, parts: list[str], tail: str = "") -> list[str]:
    lines, cur = [], head
    for p in parts:
        if len(cur) + len(p) + 1 > 250:
            lines.append(cur)
            cur = "   "
        cur += " " + p
    if tail:
        cur += " " + tail
    lines.append(cur)
    return lines


def emit_lp(model: Model, path) -> None:
    """Write the model in CPLEX LP format."""
    lines = [f"\\ {model.name}", "Minimize"]
    if model.objective:
        lines += _wrap(" obj:", _lp_expr(model.objective))
    else:
        lines.append(" obj:")
    lines.append("Subject To")
    for c in model.constraints:
        lines += _wrap(f" {c.name}:", _lp_expr(c.terms), f"{c.sense} {_num(c.rhs)}")
    bounded = [v for v in model.vars if not v.binary and (v.lb != 0.0 or v.ub != math.inf)]
    if bounded:
        lines.append("Bounds")
        for v in bounded:
            lb = "-inf" if v.lb == -math.inf else _num(v.lb)
            ub = "+inf" if v.ub == math.inf else _num(v.ub)
            lines.append(f" {lb} <= {v.name} <= {ub}")
    binaries = [v.name for v in model.vars if v.binary]
    if binaries:
        lines.append("Binaries")
        lines += _wrap("", binaries)
    lines.append("End")
    Path(path).write_text("\n".join(lines) + "\n")


def emit_mps(model: Model, path) -> None:
    """Write the model as MPS with the classic column layout.

    Fields start at the fixed columns 2, 5, 15, 25, 40 and 50; names longer
    than eight characters widen their field but never contain blanks, so
    readers in either fixed or free mode parse the file.
    """
    def row(f1="", f2="", f3="", f4="", f5="", f6=""):
        s = f" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}"
        if f5:
            s += f"   {f5:<8}  {f6:>12}"
        return s.rstrip()

    sense = {LE: "L", GE: "G", EQ: "E"}
    lines = [f"NAME          {model.name}", "ROWS", row("N", "obj")]
    lines += [row(sense[c.sense], c.name) for c in model.constraints]
    columns: dict[str, list[tuple[str, float]]] = {v.name: [] for v in model.vars}
    for name, coef in model.objective:
        columns[name].append(("obj", coef))
    for c in model.constraints:
        for name, coef in c.terms:
            columns[name].append((c.name, coef))
    lines.append("COLUMNS")
    in_int = False
    for v in model.vars:
        if v.binary and not in_int:
            lines.append(row("", "MARKER", "'MARKER'", "", "'INTORG'"))
            in_int = True
        elif not v.binary and in_int:
            lines.append(row("", "MARKER", "'MARKER'", "", "'INTEND'"))
            in_int = False
        entries = columns[v.name] or [("obj", 0.0)]
        for r, coef in entries:
            lines.append(row("", v.name, r, _num(coef)))
    if in_int:
        lines.append(row("", "MARKER", "'MARKER'", "", "'INTEND'"))
    lines.append("RHS")
    for c in model.constraints:
        if c.rhs:
            lines.append(row("", "RHS", c.name, _num(c.rhs)))
    lines.append("BOUNDS")
    for v in model.vars:
        if v.binary:
            lines.append(row("BV", "BND", v.name))
        else:
            if v.lb != 0.0:
                lines.append(row("LO", "BND", v.name, _num(v.lb)))
            if v.ub != math.inf:
                lines.append(row("UP", "BND", v.name, _num(v.ub)))
    lines.append("ENDATA")
    Path(path).write_text("\n".join(lines) + "\n")
