#!/usr/bin/env python3
"""High-accuracy reference solutions for exported instances.

Usage: solve_reference.py INSTANCE.json [...] --store references.json

Instances come from `tos ref --export`. Supported: isotonic (order chain) and
portfolio (simplex plus return floor). Each entry carries x*, f* and an
optimality certificate u* + v* + w* = 0 split over f, g and h.
"""

import argparse
import json

import numpy as np


def loss_value(kind, p, r):
    if kind == "least_squares":
        return 0.5 * float(r @ r)
    if kind == "l1_residual":
        return float(np.abs(r).sum())
    if kind == "lp_power":
        return float((np.abs(r) ** p).sum() / p)
    raise SystemExit(f"unsupported loss {kind}")


def loss_grad(kind, p, a, r):
    if kind == "least_squares":
        return a.T @ r
    if kind == "l1_residual" or (kind == "lp_power" and p == 1):
        return a.T @ np.sign(r)
    return a.T @ (np.sign(r) * np.abs(r) ** (p - 1))


def solve_isotonic_l1(a, b):
    # min sum t  s.t.  -t <= Ax - b <= t,  x_i <= x_{i+1}
    from scipy.optimize import linprog

    m, n = a.shape
    d = np.zeros((n - 1, n))
    d[np.arange(n - 1), np.arange(n - 1)] = 1.0
    d[np.arange(n - 1), np.arange(1, n)] = -1.0
    c = np.r_[np.zeros(n), np.ones(m)]
    eye = np.eye(m)
    a_ub = np.block([[a, -eye], [-a, -eye], [d, np.zeros((n - 1, m))]])
    b_ub = np.r_[b, -b, np.zeros(n - 1)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=[(None, None)] * n + [(0, None)] * m, method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise SystemExit(f"linprog failed: {res.message}")
    mu = -res.ineqlin.marginals[2 * m:]
    return res.x[:n], np.maximum(mu, 0.0), "HiGHS LP"


def solve_isotonic_cvx(a, b, kind, p):
    import cvxpy as cp

    n = a.shape[1]
    x = cp.Variable(n)
    r = a @ x - b
    if kind == "least_squares" or p == 2:
        obj = cp.sum_squares(r) / 2
    elif p == 1:
        obj = cp.norm1(r)
    else:
        obj = cp.sum(cp.power(cp.abs(r), p)) / p
    cons = [x[:-1] <= x[1:]]
    prob = cp.Problem(cp.Minimize(obj), cons)
    prob.solve(solver="CLARABEL", tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise SystemExit(f"solver status {prob.status}")
    return x.value, np.maximum(cons[0].dual_value, 0.0), f"Clarabel ({prob.status})"


def isotonic(inst, a, b):
    kind, p = inst["loss"], inst["p"]
    n = a.shape[1]
    if kind == "lp_power" and p == 1:
        x, mu, method = solve_isotonic_l1(a, b)
    else:
        x, mu, method = solve_isotonic_cvx(a, b, kind, p)
    # constraint i contributes mu_i (e_i - e_{i+1}); even i belong to g, odd i to h
    v = np.zeros(n)
    w = np.zeros(n)
    for i, m in enumerate(mu):
        target = v if i % 2 == 0 else w
        target[i] += m
        target[i + 1] -= m
    # project onto the chain to remove solver-level infeasibility
    x = np.maximum.accumulate(x)
    return x, v, w, method


def portfolio(inst, a, b):
    import cvxpy as cp

    kind = inst["loss"]
    a_av = np.array(inst["a_av"])
    n = a.shape[1]
    x = cp.Variable(n)
    r = a @ x - b
    obj = cp.sum_squares(r) / 2 if kind == "least_squares" else cp.norm1(r)
    floor = a_av @ x >= a_av.mean()
    prob = cp.Problem(cp.Minimize(obj), [cp.sum(x) == 1, x >= 0, floor])
    prob.solve(solver="CLARABEL", tol_gap_abs=1e-11, tol_gap_rel=1e-11, tol_feas=1e-11)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise SystemExit(f"solver status {prob.status}")
    xv = np.maximum(x.value, 0.0)
    xv /= xv.sum()
    w = -max(float(floor.dual_value), 0.0) * a_av
    return xv, None, w, f"Clarabel ({prob.status})"


def solve(inst):
    m, n = inst["rows"], inst["cols"]
    a = np.array(inst["A"]).reshape(m, n)
    b = np.array(inst["b"])
    kind, p = inst["loss"], inst["p"]
    name = inst["spec"]["name"]
    if name == "isotonic":
        x, v, w, method = isotonic(inst, a, b)
    elif name == "portfolio":
        x, v, w, method = portfolio(inst, a, b)
    else:
        raise SystemExit(f"unsupported problem {name}")
    grad = loss_grad(kind, p, a, a @ x - b)
    if v is None:
        v = -grad - w
    u = -(v + w)
    f_star = loss_value(kind, p, a @ x - b)
    # relative mismatch between the certificate's u* and the (sub)gradient at x*
    mismatch = float(np.linalg.norm(u - grad) / max(np.linalg.norm(grad), 1e-12))
    return {
        "fingerprint": inst["fingerprint"],
        "x_star": x.tolist(),
        "f_star": f_star,
        "method": method,
        "accuracy": 1e-9,
        "low_confidence": False,
        "u_star": u.tolist(),
        "v_star": v.tolist(),
        "w_star": w.tolist(),
    }, mismatch


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("instances", nargs="+")
    ap.add_argument("--store", required=True, help="references file to update")
    args = ap.parse_args()
    try:
        with open(args.store) as fh:
            refs = json.load(fh)
    except FileNotFoundError:
        refs = {}
    for path in args.instances:
        with open(path) as fh:
            inst = json.load(fh)
        ref, mismatch = solve(inst)
        refs[ref["fingerprint"]] = ref
        print(f"{ref['fingerprint']} f*={ref['f_star']!r} {ref['method']} certificate mismatch={mismatch:.2e}")
    with open(args.store, "w") as fh:
        json.dump(refs, fh, indent=1)
        fh.write("\n")


if __name__ == "__main__":
    main()
