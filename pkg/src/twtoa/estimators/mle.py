"""Maximum-likelihood (MLE) and approximate maximum-likelihood (AMLE) estimators.

MLE searches over (x, w, T_1..T_N) and minimises

    sum_k sum_i 2/sigma_i^2 (z - w T_i/2 - w d_i/c)^2 + (T_hat - T_i)^2 / gamma_i^2

AMLE eliminates the turn-around times by substituting the reported
estimates, which inflates the variance of each reading to
sigma_i^2 + w^2 gamma_i^2, and searches over (x, w) only:

    sum_k sum_i 2/(sigma_i^2 + w^2 gamma_i^2) (z - w T_hat/2 - w d_i/c)^2
                + ln(sigma_i^2 + w^2 gamma_i^2)

Both are solved with Levenberg-Marquardt in metre units (times multiplied
by c) so the parameters are of comparable magnitude; a Nelder-Mead path is
kept for comparison with derivative-free implementations.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ..errors import NonFinite
from ..model import EstimateReport, MeasurementBatch, SolverStatus
from ._lm import levenberg_marquardt

W_FLOOR = 1e-9
D_FLOOR = 1e-12


@dataclass(frozen=True)
class MleState:
    """Starting point for the MLE search: position (m), skew w, turn-around times (s)."""

    x: np.ndarray
    w: float
    t_a: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(2))
        object.__setattr__(self, "t_a", np.asarray(self.t_a, dtype=float).reshape(-1))
        if not self.w > 0:
            raise ValueError("skew must be positive")
        if np.any(self.t_a < 0):
            raise ValueError("turn-around times must be non-negative")


def _dist(x, anchors):
    diff = x - anchors
    d = np.linalg.norm(diff, axis=1)
    return diff, np.maximum(d, D_FLOOR)


# -- objectives in physical units (seconds), used by tests and diagnostics --

def mle_objective(psi, batch: MeasurementBatch, anchors, sigma, gamma, c):
    """psi = (x1, x2, w, T_1..T_N) with T in seconds."""
    psi = np.asarray(psi, dtype=float)
    anchors = np.asarray(anchors, dtype=float)
    x, w, T = psi[:2], psi[2], psi[3:]
    d = np.linalg.norm(x - anchors, axis=1)
    e = batch.z - w * T / 2.0 - w * d / c
    u = batch.t_hat - T
    return float(np.sum(2.0 / sigma**2 * e * e) + np.sum(u * u / gamma**2))


def mle_gradient(psi, batch: MeasurementBatch, anchors, sigma, gamma, c):
    psi = np.asarray(psi, dtype=float)
    anchors = np.asarray(anchors, dtype=float)
    x, w, T = psi[:2], psi[2], psi[3:]
    diff, d = _dist(x, anchors)
    e = batch.z - w * T / 2.0 - w * d / c
    u = batch.t_hat - T
    ws = 4.0 / sigma**2 * e  # d/de of 2 e^2 / sigma^2, per (k, i)
    g = np.empty_like(psi)
    g[:2] = np.sum(ws, axis=0) @ (-w * diff / (c * d[:, None]))
    g[2] = float(np.sum(ws * (-T / 2.0 - d / c)))
    g[3:] = np.sum(ws * (-w / 2.0), axis=0) - np.sum(2.0 * u / gamma**2, axis=0)
    return g


def amle_objective(theta, batch: MeasurementBatch, anchors, sigma, gamma, c):
    """theta = (x1, x2, w)."""
    theta = np.asarray(theta, dtype=float)
    anchors = np.asarray(anchors, dtype=float)
    x, w = theta[:2], theta[2]
    d = np.linalg.norm(x - anchors, axis=1)
    s = sigma**2 + w**2 * gamma**2
    e = batch.z - w * batch.t_hat / 2.0 - w * d / c
    return float(np.sum(2.0 / s * e * e) + batch.rounds * np.sum(np.log(s)))


def amle_gradient(theta, batch: MeasurementBatch, anchors, sigma, gamma, c):
    theta = np.asarray(theta, dtype=float)
    anchors = np.asarray(anchors, dtype=float)
    x, w = theta[:2], theta[2]
    diff, d = _dist(x, anchors)
    s = sigma**2 + w**2 * gamma**2
    e = batch.z - w * batch.t_hat / 2.0 - w * d / c
    g = np.empty(3)
    g[:2] = np.sum(4.0 / s * e, axis=0) @ (-w * diff / (c * d[:, None]))
    ds = 2.0 * w * gamma**2
    g[2] = float(np.sum(4.0 / s * e * (-batch.t_hat / 2.0 - d / c))
                 - np.sum(2.0 * e * e / s**2 * ds)
                 + batch.rounds * np.sum(ds / s))
    return g


# -- metre-unit residual forms for Levenberg-Marquardt --

class _Meters:
    def __init__(self, batch, anchors, sigma, gamma, c):
        self.z = batch.z * c
        self.t = batch.t_hat * c
        self.a = np.asarray(anchors, dtype=float)
        n = self.a.shape[0]
        self.sig = np.broadcast_to(np.asarray(sigma, float) * c, (n,))
        self.gam = np.broadcast_to(np.asarray(gamma, float) * c, (n,))
        self.k, self.n = batch.z.shape
        self.c = c


def _mle_residual(m: _Meters):
    k, n = m.k, m.n
    rz = np.sqrt(2.0) / m.sig

    def fun(p):
        x, w, T = p[:2], p[2], p[3:]
        diff, d = _dist(x, m.a)
        e = m.z - w * T / 2.0 - w * d
        r = np.concatenate([(rz * e).ravel(), ((m.t - T) / m.gam).ravel()])
        J = np.zeros((2 * k * n, 3 + n))
        for kk in range(k):
            rows = slice(kk * n, (kk + 1) * n)
            J[rows, :2] = rz[:, None] * (-w * diff / d[:, None])
            J[rows, 2] = rz * (-T / 2.0 - d)
            J[rows, 3:] = np.diag(rz * (-w / 2.0))
            rows_t = slice(k * n + kk * n, k * n + (kk + 1) * n)
            J[rows_t, 3:] = np.diag(-1.0 / m.gam)
        return r, J

    return fun


def _project_mle(p):
    q = p.copy()
    q[2] = max(q[2], W_FLOOR)
    q[3:] = np.maximum(q[3:], 0.0)
    return q


def _amle_parts(m: _Meters):
    k = m.k

    def fun(p):
        x, w = p[:2], p[2]
        diff, d = _dist(x, m.a)
        s = m.sig**2 + w**2 * m.gam**2
        sq = np.sqrt(2.0 / s)
        e = m.z - w * m.t / 2.0 - w * d
        r = (sq * e).ravel()
        J = np.empty((r.size, 3))
        de_dw = -(m.t / 2.0 + d)
        dsq_dw = -np.sqrt(2.0) * w * m.gam**2 * s**-1.5
        J[:, 0] = np.broadcast_to(sq * (-w * diff[:, 0] / d), e.shape).ravel()
        J[:, 1] = np.broadcast_to(sq * (-w * diff[:, 1] / d), e.shape).ravel()
        J[:, 2] = (sq * de_dw + dsq_dw * e).ravel()
        return r, J

    def extra(p):
        w = p[2]
        s = m.sig**2 + w**2 * m.gam**2
        value = k * float(np.sum(np.log(s)))
        g = np.zeros(3)
        g[2] = k * float(np.sum(2.0 * w * m.gam**2 / s))
        H = np.zeros((3, 3))
        H[2, 2] = max(0.0, k * float(np.sum(2.0 * m.gam**2 * (m.sig**2 - w**2 * m.gam**2) / s**2)))
        return value, g, H

    return fun, extra


def _project_w(p):
    q = p.copy()
    q[2] = max(q[2], W_FLOOR)
    return q


def _simplex(f, p0, project, max_iter):
    res = minimize(lambda q: f(project(q)), p0, method="Nelder-Mead",
                   options={"maxiter": max_iter, "xatol": 1e-10, "fatol": 1e-12})
    return project(res.x), float(res.fun), int(res.nit), bool(res.success)


def mle(batch: MeasurementBatch, anchors, sigma, gamma, c, init: MleState,
        *, max_iter=500, simplex=False) -> EstimateReport:
    """Joint ML estimate of position, skew and turn-around times from ``init``."""
    m = _Meters(batch, anchors, sigma, gamma, c)
    if init.t_a.size != m.n:
        raise ValueError("initial turn-around vector has wrong length")
    p0 = np.concatenate([init.x, [init.w], init.t_a * c])
    fun = _mle_residual(m)
    if simplex:
        def f(q):
            r, _ = fun(q)
            return float(r @ r)
        p, value, its, ok = _simplex(f, p0, _project_mle, max_iter * len(p0))
        grad_norm = float("nan")
    else:
        res = levenberg_marquardt(fun, p0, _project_mle, max_iter=max_iter)
        p, value, its, ok, grad_norm = res.p, res.value, res.iterations, res.converged, res.grad_norm
    if not np.all(np.isfinite(p)) or not np.isfinite(value):
        raise NonFinite("MLE iterate is not finite")
    return EstimateReport(
        method="MLE",
        position=p[:2],
        skew=float(p[2]),
        status=SolverStatus.CONVERGED if ok else SolverStatus.MAX_ITER,
        iterations=its,
        turnaround=p[3:] / c,
        objective=value,
        diagnostics={"grad_norm": grad_norm, "simplex": simplex},
    )


def amle(batch: MeasurementBatch, anchors, sigma, gamma, c, init,
         *, max_iter=500, simplex=False) -> EstimateReport:
    """Approximate ML estimate over (x, w); ``init`` is (position, skew)."""
    x0, w0 = init
    m = _Meters(batch, anchors, sigma, gamma, c)
    p0 = np.concatenate([np.asarray(x0, float).reshape(2), [float(w0)]])
    fun, extra = _amle_parts(m)
    if simplex:
        def f(q):
            r, _ = fun(q)
            return float(r @ r) + extra(q)[0]
        p, value, its, ok = _simplex(f, p0, _project_w, max_iter * 3)
        grad_norm = float("nan")
    else:
        res = levenberg_marquardt(fun, p0, _project_w, extra=extra, max_iter=max_iter)
        p, value, its, ok, grad_norm = res.p, res.value, res.iterations, res.converged, res.grad_norm
    if not np.all(np.isfinite(p)) or not np.isfinite(value):
        raise NonFinite("AMLE iterate is not finite")
    return EstimateReport(
        method="AMLE",
        position=p[:2],
        skew=float(p[2]),
        status=SolverStatus.CONVERGED if ok else SolverStatus.MAX_ITER,
        iterations=its,
        objective=value,
        diagnostics={"grad_norm": grad_norm, "simplex": simplex},
    )
