#!/usr/bin/env python3
"""Solve a sparse SDPA file with an external conic solver and classify the margin.

Usage: sdpa_crosscheck.py FILE THRESHOLD
Prints one JSON object: {"status": ..., "t": ..., "solver": ...}.
The minimized objective t is classified as Feasible (t <= -THRESHOLD),
Infeasible (t >= THRESHOLD) or Inconclusive.
"""
import json
import sys

import cvxpy as cp
import numpy as np


def read_sdpa(path):
    lines = []
    with open(path) as f:
        for raw in f:
            s = raw.strip()
            if not s or s[0] in "*\"":
                continue
            for ch in "{},()":
                s = s.replace(ch, " ")
            lines.append(s.split())
    tokens = iter(lines)
    m = int(next(tokens)[0])
    nblocks = int(next(tokens)[0])
    sizes = []
    while len(sizes) < nblocks:
        sizes += [abs(int(x)) for x in next(tokens)]
    c = []
    while len(c) < m:
        c += [float(x) for x in next(tokens)]
    mats = [[np.zeros((n, n)) for n in sizes] for _ in range(m + 1)]
    for fields in tokens:
        k, b, i, j, v = int(fields[0]), int(fields[1]) - 1, int(fields[2]) - 1, int(fields[3]) - 1, float(fields[4])
        mats[k][b][i, j] = v
        mats[k][b][j, i] = v
    return np.array(c), sizes, mats


def main():
    path, threshold = sys.argv[1], float(sys.argv[2])
    c, sizes, mats = read_sdpa(path)
    y = cp.Variable(len(c))
    cons = []
    for b, n in enumerate(sizes):
        expr = -mats[0][b]
        for k in range(1, len(c) + 1):
            if np.any(mats[k][b]):
                expr = expr + y[k - 1] * mats[k][b]
        cons.append(0.5 * (expr + expr.T) >> 0)
    prob = cp.Problem(cp.Minimize(c @ y), cons)
    solver = "CLARABEL" if "CLARABEL" in cp.installed_solvers() else "SCS"
    prob.solve(solver=solver)
    t = prob.value
    if prob.status not in ("optimal", "optimal_inaccurate") or t is None:
        status = "Inconclusive"
    elif t <= -threshold:
        status = "Feasible"
    elif t >= threshold:
        status = "Infeasible"
    else:
        status = "Inconclusive"
    print(json.dumps({"status": status, "t": t, "solver": solver, "solver_status": prob.status}))


if __name__ == "__main__":
    main()
