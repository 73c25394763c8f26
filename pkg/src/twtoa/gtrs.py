"""Generalized trust-region subproblem for squared-range least squares.

    minimize    || W^(1/2) (A y - b) ||^2
    subject to  y' D y + 2 f' y = 0

with y = [||x||^2, x1, x2, alpha^2, alpha]. The global solution is
y(mu) = (A'WA + mu D)^-1 (A'Wb - mu f) where mu is the root of the secular
function phi(mu) = y(mu)' D y(mu) + 2 f' y(mu), which is strictly decreasing
on the interval where A'WA + mu D is positive semidefinite.

Physical-unit problems are badly scaled (columns of A range over ~25 orders
of magnitude), so :func:`solve_gtrs` works on an equivalent problem with
equilibrated columns, a unit-norm right-hand side and a unit-scale
constraint, and maps the multiplier back.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import Degenerate, IllConditioned, NoRoot, RankDeficient
from .model import EstimateReport, MeasurementBatch, SolverStatus

D_DIAG = np.array([0.0, 1.0, 1.0, 0.0, 1.0])
F_VEC = np.array([-0.5, 0.0, 0.0, -0.5, 0.0])
COND_LIMIT = 1e12
REL_CONSTRAINT_TOL = 1e-11


@dataclass(frozen=True)
class GtrsProblem:
    A: np.ndarray
    b: np.ndarray
    weights: np.ndarray
    D: np.ndarray = field(default_factory=lambda: np.diag(D_DIAG))
    f: np.ndarray = field(default_factory=lambda: F_VEC.copy())

    def __post_init__(self):
        m, n = self.A.shape
        if n != 5 or self.b.shape != (m,) or self.weights.shape != (m,):
            raise ValueError("inconsistent GTRS dimensions")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")

    @property
    def W(self):
        return np.diag(self.weights)

    def objective(self, y):
        r = self.A @ y - self.b
        return float(np.sum(self.weights * r * r))

    def constraint(self, y):
        y = np.asarray(y, dtype=float)
        return float(y @ self.D @ y + 2.0 * self.f @ y)


@dataclass(frozen=True)
class GtrsSolution:
    y: np.ndarray
    mu: float
    phi_at_mu: float
    bisection_steps: int
    expansions: int = 0
    constraint_residual: float = 0.0
    min_eig: float = 0.0
    objective: float = float("nan")
    ill_conditioned: bool = False


def gtrs_weights(position, alpha, anchors, sigma, gamma, floor=1e-12):
    """Diagonal weights 1 / (d_i^2 (alpha^2 sigma_i^2 + gamma_i^2)) for one round."""
    d = np.linalg.norm(np.asarray(anchors, float) - np.asarray(position, float), axis=1)
    d2 = np.maximum(d * d, floor * max(1.0, float(np.max(d * d))))
    return 1.0 / (d2 * (alpha**2 * np.asarray(sigma) ** 2 + np.asarray(gamma) ** 2))


def _check_rank(A, weights):
    Aw = A * np.sqrt(weights)[:, None]
    norms = np.linalg.norm(Aw, axis=0)
    if np.any(norms == 0):
        raise RankDeficient("design matrix has a zero column")
    cond = np.linalg.cond(Aw / norms)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise RankDeficient(f"design matrix condition number {cond:.3g} exceeds {COND_LIMIT:g}")


def build_gtrs(batch: MeasurementBatch, anchors, c, weights=None) -> GtrsProblem:
    """Rows are ordered round-major: (k=0, i=0..N-1), (k=1, ...), ..."""
    anchors = np.asarray(anchors, dtype=float)
    k, n = batch.z.shape
    if k * n < 5:
        raise RankDeficient("need K*N >= 5 measurements")
    z = batch.z.reshape(-1)
    t = batch.t_hat.reshape(-1)
    a = np.tile(anchors, (k, 1))
    A = np.column_stack([
        np.full(k * n, 1.0 / c**2),
        -2.0 * a / c**2,
        -(z**2),
        z * t,
    ])
    b = -np.sum(a * a, axis=1) / c**2 + t**2 / 4.0
    if weights is None:
        w = np.ones(k * n)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape == (n,):
            w = np.tile(w, k)
    _check_rank(A, w)
    return GtrsProblem(A, b, w)


class _Scaled:
    """y = beta * S y_s ; W = omega W_s ; constraint = beta^2 rho * constraint_s."""

    def __init__(self, p: GtrsProblem):
        self.omega = float(np.max(p.weights))
        ws = p.weights / self.omega
        sw = np.sqrt(ws)
        col = np.linalg.norm(p.A * sw[:, None], axis=0)
        self.s = 1.0 / col
        As = p.A * self.s
        bn = float(np.linalg.norm(p.b * sw))
        self.beta = bn if bn > 0 else 1.0
        bs = p.b / self.beta
        d = np.diag(p.D) * self.s**2
        self.rho = float(np.max(d)) if np.max(d) > 0 else 1.0
        self.d = d / self.rho
        self.f = p.f * self.s / (self.beta * self.rho)
        self.M = (As * ws[:, None]).T @ As
        self.M = 0.5 * (self.M + self.M.T)
        self.g = (As * ws[:, None]).T @ bs
        self.bs_norm2 = float(np.sum(ws * bs * bs))

    def to_physical(self, ys):
        return self.beta * self.s * ys

    def mu_physical(self, mu_s):
        return mu_s * self.omega / self.rho

    def mu_scaled(self, mu):
        return mu * self.rho / self.omega

    def phi_physical(self, phi_s):
        return phi_s * self.beta**2 * self.rho


def _y_of_mu(sc: _Scaled, mu):
    K = sc.M + mu * np.diag(sc.d)
    rhs = sc.g - mu * sc.f
    try:
        y = np.linalg.solve(K, rhs)
        ill = False
    except np.linalg.LinAlgError:
        y = np.linalg.pinv(K) @ rhs
        ill = True
    if not np.all(np.isfinite(y)):
        raise IllConditioned(f"linear solve failed at mu={mu}")
    return y, ill


def _phi(sc: _Scaled, mu):
    y, ill = _y_of_mu(sc, mu)
    return float(y @ (sc.d * y) + 2.0 * sc.f @ y), y, ill


def _largest_gen_eig(sc: _Scaled):
    lam, V = np.linalg.eigh(sc.M)
    if lam[0] <= 0:
        raise RankDeficient("A'WA is not positive definite")
    inv_sqrt = (V / np.sqrt(lam)) @ V.T
    G = inv_sqrt @ np.diag(sc.d) @ inv_sqrt
    return float(np.linalg.eigvalsh(0.5 * (G + G.T))[-1])


def secular_interval(p: GtrsProblem):
    """Left end -1/mu_1 of the admissible interval (physical multiplier units)."""
    sc = _Scaled(p)
    return sc.mu_physical(-1.0 / _largest_gen_eig(sc))


def phi(p: GtrsProblem, mu):
    """Secular function in the problem's own (physical) units."""
    sc = _Scaled(p)
    val, _, _ = _phi(sc, sc.mu_scaled(mu))
    return sc.phi_physical(val)


def solve_gtrs(p: GtrsProblem, tol=None, max_steps=200) -> GtrsSolution:
    sc = _Scaled(p)
    mu1 = _largest_gen_eig(sc)
    lo = -1.0 / mu1 + 1e-12 * (1.0 + 1.0 / mu1)
    hi = 1.0 / mu1
    phi_lo, ys_lo, _ = _phi(sc, lo)
    if phi_lo < 0:
        raise NoRoot("secular function is negative at the left end of the interval")
    phi_hi, ys_hi, _ = _phi(sc, hi)
    expansions = 0
    while phi_hi > 0:
        lo, phi_lo, ys_lo = hi, phi_hi, ys_hi
        hi = 10.0 * hi
        expansions += 1
        if hi > 1e15 / mu1:
            raise NoRoot("bracket expansion exceeded 1e15 / mu_1")
        phi_hi, ys_hi, _ = _phi(sc, hi)

    def done(val, ys):
        if tol is not None:
            return abs(val) <= tol
        # default: constraint residual relative to |y1| + |y4|, physical units
        y = sc.to_physical(ys)
        return abs(p.constraint(y)) <= REL_CONSTRAINT_TOL * max(abs(y[0]) + abs(y[3]), 1e-300)

    steps = 0
    ill = False
    if abs(phi_lo) <= abs(phi_hi):
        mu, val, ys = lo, phi_lo, ys_lo
    else:
        mu, val, ys = hi, phi_hi, ys_hi
    while not done(val, ys) and steps < max_steps:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        steps += 1
        val, ys, ill_mid = _phi(sc, mid)
        ill |= ill_mid
        mu = mid
        if val > 0:
            lo, phi_lo, ys_lo = mid, val, ys
        else:
            hi, phi_hi, ys_hi = mid, val, ys

    if not done(val, ys) and phi_lo > 0 > phi_hi:
        # the bracket has collapsed to adjacent floats but rounding in the
        # linear solve leaves phi jumping across zero; both end points are
        # stationary to working precision, so take the point on the segment
        # between them where the quadratic constraint vanishes
        ys = _blend(sc, ys_lo, ys_hi, phi_lo)
        val = float(ys @ (sc.d * ys) + 2.0 * sc.f @ ys)

    y = sc.to_physical(ys)
    K = sc.M + mu * np.diag(sc.d)
    min_eig = float(np.linalg.eigvalsh(0.5 * (K + K.T))[0])
    cres = p.constraint(y)
    scale = max(abs(y[0]) + abs(y[3]), 1e-300)
    return GtrsSolution(
        y=y,
        mu=sc.mu_physical(mu),
        phi_at_mu=sc.phi_physical(val),
        bisection_steps=steps,
        expansions=expansions,
        constraint_residual=abs(cres) / scale,
        min_eig=min_eig,
        objective=p.objective(y),
        ill_conditioned=ill,
    )


def _blend(sc: _Scaled, y0, y1, phi0):
    """Root in [0, 1] of the constraint along y0 + t (y1 - y0)."""
    dy = y1 - y0
    a = float(dy @ (sc.d * dy))
    b = 2.0 * float(y0 @ (sc.d * dy) + sc.f @ dy)
    roots = np.roots([a, b, phi0]) if a != 0 else np.array([-phi0 / b])
    roots = roots[np.isreal(roots)].real
    roots = roots[(roots >= 0) & (roots <= 1)]
    t = float(roots[0]) if roots.size else 0.5
    return y0 + t * dy


def extract_estimate(sol: GtrsSolution, method="GTRS") -> EstimateReport:
    y = sol.y
    if not y[4] > 0:
        raise Degenerate(f"alpha component {y[4]:.3g} is not positive")
    x = y[1:3]
    diagnostics = {
        "norm_consistency": abs(y[0] - float(x @ x)),
        "alpha_consistency": abs(y[3] - y[4] ** 2),
        "skew_from_alpha_sq": 1.0 / np.sqrt(y[3]) if y[3] > 0 else float("nan"),
        "mu": sol.mu,
        "bisection_steps": sol.bisection_steps,
        "ill_conditioned": sol.ill_conditioned,
    }
    return EstimateReport(
        method=method,
        position=x,
        skew=1.0 / y[4],
        status=SolverStatus.CONVERGED,
        iterations=sol.bisection_steps,
        objective=sol.objective,
        diagnostics=diagnostics,
    )
