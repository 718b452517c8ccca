"""Solve emitted models with third-party MIP solvers (test-only)."""
import numpy as np


def solve_with_scipy(model):
    """Optimal objective of ``model`` via scipy's HiGHS binding."""
    from scipy.optimize import Bounds, LinearConstraint, milp
    from scipy.sparse import lil_matrix

    idx = {v.name: i for i, v in enumerate(model.vars)}
    a = lil_matrix((len(model.constraints), len(idx)))
    lo, hi = [], []
    for r, c in enumerate(model.constraints):
        for name, coef in c.terms:
            a[r, idx[name]] += coef
        lo.append(-np.inf if c.sense == "<=" else c.rhs)
        hi.append(np.inf if c.sense == ">=" else c.rhs)
    cost = np.zeros(len(idx))
    for name, coef in model.objective:
        cost[idx[name]] = coef
    binary = np.array([v.binary for v in model.vars], dtype=int)
    lb = np.array([v.lb for v in model.vars])
    ub = np.array([1.0 if v.binary else v.ub for v in model.vars])
    res = milp(cost, constraints=LinearConstraint(a.tocsr(), lo, hi), integrality=binary, bounds=Bounds(lb, ub))
    assert res.success, res.message
    return float(res.fun)


def solve_file_with_highs(path):
    """``(read_status_ok, n_cols, n_rows, objective)`` for an LP or MPS file."""
    import highspy

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    ok = h.readModel(str(path)) == highspy.HighsStatus.kOk
    h.run()
    lp = h.getLp()
    return ok, lp.num_col_, lp.num_row_, h.getInfo().objective_function_value
