"""The nine move structures and their best-improvement / random scans.

Intra-route moves act on truck positions ``(p, q)`` and keep every sortie
attached to its launch, customer and return nodes; a move that changes the
relative order of those anchor nodes, or breaks the endurance limit, is
infeasible.  Inter-route moves change which customers the drone serves:

* Shift10 ``(i, j, k)`` takes truck customer ``j`` and serves it by a new
  sortie from ``i`` to ``k``.
* InterSwap11 ``(d, u)`` exchanges drone customer ``d`` with truck customer
  ``u``; ``u`` inherits the sortie and ``d`` the route position.
* Swap01 ``(d, q)`` cancels the sortie of ``d`` and inserts ``d`` at route
  position ``q``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels as K
from .instance import ELAPSED, Instance
from .solution import ContractViolation, Solution, Sortie

IMPROVE_TOL = 1e-9


class MoveKind(str, Enum):
    INTRA_SWAP11 = "IntraSwap11"
    INTRA_SWAP21 = "IntraSwap21"
    INTRA_SWAP22 = "IntraSwap22"
    TWO_OPT = "TwoOpt"
    REINSERTION = "Reinsertion"
    OR_OPT2 = "OrOpt2"
    SHIFT10 = "Shift10"
    INTER_SWAP11 = "InterSwap11"
    SWAP01 = "Swap01"

    def __str__(self) -> str:
        return self.value


INTRA_KINDS = MoveKind.INTRA_SWAP11, MoveKind.INTRA_SWAP21, MoveKind.INTRA_SWAP22, \
    MoveKind.TWO_OPT, MoveKind.REINSERTION, MoveKind.OR_OPT2
INTER_KINDS = MoveKind.SHIFT10, MoveKind.INTER_SWAP11, MoveKind.SWAP01
ALL_KINDS = INTRA_KINDS + INTER_KINDS
# structures explored by local descent; Swap01 is reserved for perturbation
DESCENT_KINDS = ALL_KINDS[:8]
DRONE_KINDS = frozenset(INTER_KINDS)
_INTRA_CODE = {kind: code for code, kind in enumerate(INTRA_KINDS)}


@dataclass(frozen=True)
class Move:
    kind: MoveKind
    ops: tuple[int, ...]

    def __str__(self) -> str:
        return f"{self.kind}{self.ops}"


def apply(sol: Solution, mv: Move) -> Solution:
    """Return the solution produced by ``mv``.  Feasibility is not checked."""
    s = list(sol.truck_seq)
    sorties = list(sol.sorties)
    kind = mv.kind
    m = len(s) - 2
    if kind in _INTRA_CODE:
        p, q = mv.ops
        if not (1 <= p <= m and 1 <= q <= m):
            raise ContractViolation(f"{mv} is outside the route")
        if kind == MoveKind.INTRA_SWAP11:
            s[p], s[q] = s[q], s[p]
        elif kind == MoveKind.INTRA_SWAP21:
            if q > p:
                s = s[:p] + [s[q]] + s[p + 2 : q] + s[p : p + 2] + s[q + 1 :]
            else:
                s = s[:q] + s[p : p + 2] + s[q + 1 : p] + [s[q]] + s[p + 2 :]
        elif kind == MoveKind.INTRA_SWAP22:
            s = s[:p] + s[q : q + 2] + s[p + 2 : q] + s[p : p + 2] + s[q + 2 :]
        elif kind == MoveKind.TWO_OPT:
            s[p : q + 1] = s[p : q + 1][::-1]
        elif kind == MoveKind.REINSERTION:
            s.insert(q, s.pop(p))
        else:
            block = s[p : p + 2]
            del s[p : p + 2]
            s[q:q] = block
        return Solution(tuple(s), tuple(sorties))
    if kind == MoveKind.SHIFT10:
        i, j, k = mv.ops
        s.remove(j)
        sorties.append(Sortie(i, j, k))
    elif kind == MoveKind.INTER_SWAP11:
        d, u = mv.ops
        idx = next(n for n, t in enumerate(sorties) if t.customer == d)
        old = sorties[idx]
        sorties[idx] = Sortie(old.launch, u, old.ret)
        s[s.index(u)] = d
    elif kind == MoveKind.SWAP01:
        d, q = mv.ops
        sorties = [t for t in sorties if t.customer != d]
        s.insert(q, d)
    else:
        raise ContractViolation(f"unknown move kind {kind!r}")
    return Solution(tuple(s), tuple(sorties))


class Evaluator:
    """Instance data laid out for the compiled kernels."""

    def __init__(self, inst: Instance):
        self.inst = inst
        self.tau = np.ascontiguousarray(inst.tau, dtype=np.float64)
        self.tau_d = np.ascontiguousarray(inst.tau_d, dtype=np.float64)
        self.s_l = inst.s_l
        self.s_r = inst.s_r
        self.e = inst.e
        self.elapsed = inst.variant.endurance_mode == ELAPSED
        self.in_flight = inst.variant.setup_in_flight_time
        self.allow_eq = inst.variant.allow_launch_equals_return
        self.elig = np.zeros(inst.n + 1, dtype=np.bool_)
        self.elig[list(inst.eligible)] = True
        self.all_nodes = np.ones(inst.n + 1, dtype=np.bool_)

    @property
    def params(self):
        return self.tau, self.tau_d, self.s_l, self.s_r, self.e, self.elapsed, self.in_flight

    def arrays(self, sol: Solution):
        n1 = self.inst.n + 1
        seq = np.array(sol.truck_seq, dtype=np.int64)
        lc = np.full(n1, -1, dtype=np.int64)
        lr = np.full(n1, -1, dtype=np.int64)
        anchor = np.zeros(n1, dtype=np.bool_)
        ordered = sorted(sol.sorties, key=lambda t: t.customer)
        for t in ordered:
            lc[t.launch] = t.customer
            lr[t.launch] = t.ret
            anchor[t.launch] = anchor[t.ret] = True
        dl = np.array([t.launch for t in ordered], dtype=np.int64)
        dc = np.array([t.customer for t in ordered], dtype=np.int64)
        dr = np.array([t.ret for t in ordered], dtype=np.int64)
        return seq, lc, lr, anchor, dl, dc, dr

    def cost(self, sol: Solution) -> float:
        """Makespan via the compiled path; ``inf`` if infeasible."""
        seq, lc, lr, *_ = self.arrays(sol)
        return K.route_cost(seq, len(seq), lc, lr, *self.params)

    def scan(self, sol: Solution, kind: MoveKind, target: int = -1, node_mask=None, only: int = -1):
        """Run one kernel; returns ``(count, Move | None, objective)``."""
        seq, lc, lr, anchor, dl, dc, dr = self.arrays(sol)
        npos = len(seq)
        if kind in _INTRA_CODE:
            mask = self.all_nodes if node_mask is None else node_mask
            count, p, q, obj = K.scan_intra(
                _INTRA_CODE[kind], seq, npos, lc, lr, *self.params, mask, target
            )
            ops = (p, q)
        elif kind == MoveKind.SHIFT10:
            count, i, j, k, obj = K.scan_shift10(
                seq, npos, lc, lr, anchor, self.elig, *self.params, self.allow_eq, only, target
            )
            ops = (i, j, k)
        elif kind == MoveKind.INTER_SWAP11:
            count, d, u, obj = K.scan_interswap(
                seq, npos, lc, lr, anchor, self.elig, dl, dc, dr, *self.params, target
            )
            ops = (d, u)
        else:
            count, d, q, obj = K.scan_swap01(seq, npos, lc, lr, dl, dc, *self.params, only, target)
            ops = (d, q)
        if target >= 0:
            found = count > target
        else:
            found = count > 0
        return count, (Move(kind, tuple(int(o) for o in ops)) if found else None), float(obj)


def best_move(sol: Solution, kind: MoveKind, ev: Evaluator, current: float | None = None):
    """Best feasible move of one structure as ``(move, delta)``.

    Returns None when no candidate improves the solution, except for Swap01,
    whose least-bad move is returned even if it worsens the makespan.
    """
    if current is None:
        current = ev.cost(sol)
    count, mv, obj = ev.scan(sol, kind)
    if mv is None:
        return None
    delta = obj - current
    if kind != MoveKind.SWAP01 and delta >= -IMPROVE_TOL:
        return None
    return mv, delta


def best_intra(sol: Solution, kind: MoveKind, ev: Evaluator):
    if kind not in INTRA_KINDS:
        raise ValueError(f"{kind} is not an intra-route structure")
    return best_move(sol, kind, ev)


def best_shift10(sol: Solution, ev: Evaluator):
    return best_move(sol, MoveKind.SHIFT10, ev)


def best_inter_swap11(sol: Solution, ev: Evaluator):
    return best_move(sol, MoveKind.INTER_SWAP11, ev)


def best_swap01(sol: Solution, ev: Evaluator):
    return best_move(sol, MoveKind.SWAP01, ev)


def count_moves(sol: Solution, kind: MoveKind, ev: Evaluator) -> int:
    return ev.scan(sol, kind)[0]


def iter_moves(sol: Solution, kind: MoveKind, ev: Evaluator):
    """Every feasible move of one structure with its resulting makespan."""
    total = count_moves(sol, kind, ev)
    for r in range(total):
        _, mv, obj = ev.scan(sol, kind, target=r)
        yield mv, obj


def random_move(sol: Solution, kind: MoveKind, ev: Evaluator, rng: np.random.Generator):
    """A feasible move drawn uniformly from one structure, or None if empty."""
    total = count_moves(sol, kind, ev)
    if total == 0:
        return None
    _, mv, _ = ev.scan(sol, kind, target=int(rng.integers(total)))
    return mv


def random_swap01(sol: Solution, ev: Evaluator, rng: np.random.Generator):
    """Pick a sortie at random and put its customer back on the truck where it hurts least."""
    if not sol.sorties:
        return None
    d = sorted(t.customer for t in sol.sorties)[int(rng.integers(len(sol.sorties)))]
    _, mv, _ = ev.scan(sol, MoveKind.SWAP01, only=d)
    return mv


def delta_evaluate(sol: Solution, mv: Move, ev: Evaluator) -> float:
    """Makespan change caused by ``mv``; ``inf`` if the result is infeasible."""
    after = ev.cost(apply(sol, mv))
    before = ev.cost(sol)
    return math.inf if math.isinf(after) else after - before
