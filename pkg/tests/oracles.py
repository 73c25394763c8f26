"""Slow, independent reference computations used only by the test-suite."""
from __future__ import annotations

import warnings

import numpy as np
from scipy.optimize import minimize

from twtoa.gtrs import GtrsProblem
from twtoa.socp import SocpProblem


# -- GTRS: dense search over the feasible set --------------------------------

def gtrs_reduced(p: GtrsProblem):
    """Objective over (x1, x2, alpha) with y4 eliminated in closed form.

    The constraint only ties y1 + y4 to x1^2 + x2^2 + alpha^2, so for fixed
    (x, alpha) the objective is a convex quadratic in y4 alone. Returned
    values are divided by |W^(1/2) b|^2 so they are O(1).
    """
    A, b, w = p.A, p.b, p.weights
    scale = float(np.sum(w * b * b))
    e4 = np.array([-1.0, 0, 0, 1.0, 0])
    u = A @ e4

    def y_of(v):
        x1, x2, al = v
        base = np.array([x1 * x1 + x2 * x2 + al * al, x1, x2, 0.0, al])
        r0 = A @ base - b
        den = float(np.sum(w * u * u))
        y4 = -float(np.sum(w * u * r0)) / den if den > 0 else 0.0
        return base + y4 * e4

    def f(v):
        y = y_of(v)
        r = A @ y - b
        return float(np.sum(w * r * r)) / scale

    return f, y_of, scale


def gtrs_oracle(p: GtrsProblem, center, half_width=1000.0, grid=41, alphas=(0.9, 1.0, 1.1)):
    """Grid over (x, alpha) around ``center`` followed by local refinement.

    Returns (normalised objective, y).
    """
    f, y_of, _ = gtrs_reduced(p)
    cx, cy = center
    xs = np.linspace(cx - half_width, cx + half_width, grid)
    ys = np.linspace(cy - half_width, cy + half_width, grid)
    cands = []
    for al in alphas:
        for x1 in xs:
            for x2 in ys:
                cands.append((f((x1, x2, al)), (x1, x2, al)))
    cands.sort(key=lambda t: t[0])
    best_v, best_y = np.inf, None
    sc = np.array([100.0, 100.0, 0.01])
    for _, v0 in cands[:5]:
        res = minimize(lambda q: f(q * sc), np.asarray(v0) / sc, method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 20000, "maxfev": 40000})
        res = minimize(lambda q: f(q * sc), res.x, method="BFGS", options={"gtol": 1e-14})
        if res.fun < best_v:
            best_v, best_y = float(res.fun), y_of(res.x * sc)
    return best_v, best_y


# -- SOCP: independent solver via cvxpy ---------------------------------------

def socp_oracle(p: SocpProblem):
    import cvxpy as cp

    x = cp.Variable(p.n)
    cons = []
    for blk in p.cones:
        if blk.A.shape[0] == 0:
            cons.append(blk.c @ x + blk.d >= 0)
        else:
            cons.append(cp.norm(blk.A @ x + blk.b, 2) <= blk.c @ x + blk.d)
    if p.bound is not None:
        cons.append(cp.norm(x, 2) <= p.bound)
    prob = cp.Problem(cp.Minimize(p.cost @ x), cons)
    with warnings.catch_warnings():
        # CLARABEL flags "inaccurate" when it stalls just short of 1e-11
        warnings.simplefilter("ignore", UserWarning)
        prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-11, tol_gap_rel=1e-11, tol_feas=1e-11)
    return float(prob.value), np.asarray(x.value)


def random_socp(rng, n_max=20, cones_max=15):
    """Feasible, bounded random instance: strictly feasible x0 and dual-feasible cost."""
    from twtoa.socp import ConeBlock

    n = int(rng.integers(2, n_max + 1))
    m = int(rng.integers(1, cones_max + 1))
    x0 = rng.standard_normal(n)
    blocks = []
    cost = np.zeros(n)
    for _ in range(m):
        k = int(rng.integers(0, 5))
        A = rng.standard_normal((k, n))
        b = rng.standard_normal(k)
        c = rng.standard_normal(n)
        d = float(np.linalg.norm(A @ x0 + b) - c @ x0 + rng.uniform(0.1, 2.0))
        blocks.append(ConeBlock(A, b, c, d))
        # a point of the dual cone: (u0, u1) with |u1| <= u0
        u1 = rng.standard_normal(k)
        u0 = float(np.linalg.norm(u1) + rng.uniform(0.0, 1.0))
        cost += u0 * c + A.T @ u1
    bound = float(np.linalg.norm(x0) * 3 + 1) if rng.random() < 0.5 else None
    return SocpProblem(cost, tuple(blocks), bound)


# -- finite differences --------------------------------------------------------

def central_diff(f, x, rel=1e-6, abs_floor=1e-12):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        h = max(rel * abs(x[i]), abs_floor)
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def central_diff_jac(f, x, rel=1e-6, abs_floor=1e-12):
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        h = max(rel * abs(x[i]), abs_floor)
        e = np.zeros_like(x)
        e[i] = h
        cols.append((f(x + e) - f(x - e)) / (2 * h))
    return np.column_stack(cols)
