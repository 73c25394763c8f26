"""Linear least squares with a second-stage correction.

Stage one ignores the coupling between the entries of
y = [||x||^2, x1, x2, alpha^2, alpha] and solves the weighted linear model
A y = b. Stage two re-estimates theta = [x1^2, x2^2, alpha^2] from the four
noisy functions h = [y1 + y4, y2^2, y3^2, y5^2] of y, which are linear in
theta up to a first-order error whose covariance comes from stage one.
"""
from __future__ import annotations

import numpy as np

from ..errors import Degenerate, RankDeficient
from ..gtrs import build_gtrs, gtrs_weights
from ..model import EstimateReport, MeasurementBatch, SolverStatus

COND_LIMIT = 1e12
NEG_SIGMAS = 10.0

B_MATRIX = np.array([
    [1.0, 1.0, 1.0],
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
])


def weighted_ls(A, b, weights):
    """Return (y, cov_y, regularised) for min |W^(1/2)(A y - b)|^2.

    The normal matrix is formed on equilibrated columns; when its condition
    number exceeds 1e12 a Tikhonov term 1e-10 * trace / 5 is added.
    """
    sw = np.sqrt(weights)
    col = np.linalg.norm(A * sw[:, None], axis=0)
    if np.any(col == 0):
        raise RankDeficient("design matrix has a zero column")
    s = 1.0 / col
    As = A * s
    M = (As * weights[:, None]).T @ As
    M = 0.5 * (M + M.T)
    reg = False
    if not np.linalg.cond(M) <= COND_LIMIT:
        M = M + 1e-10 * np.trace(M) / M.shape[0] * np.eye(M.shape[0])
        reg = True
    Minv = np.linalg.inv(M)
    ys = Minv @ ((As * weights[:, None]).T @ b)
    return s * ys, Minv * np.outer(s, s), reg


def _correction(y, cov_y):
    h = np.array([y[0] + y[3], y[1] ** 2, y[2] ** 2, y[4] ** 2])
    P = np.zeros((4, 5))
    P[0, 0] = P[0, 3] = 1.0
    P[1, 1] = 2.0 * y[1]
    P[2, 2] = 2.0 * y[2]
    P[3, 4] = 2.0 * y[4]
    C = P @ cov_y @ P.T
    C = 0.5 * (C + C.T)
    # whiten with the equilibrated covariance; fall back to a pseudo-inverse
    sd = np.sqrt(np.maximum(np.diag(C), 0.0))
    sd = np.where(sd > 0, sd, max(float(np.max(sd)), 1.0) * 1e-16)
    Cn = C / np.outer(sd, sd)
    Bn = B_MATRIX / sd[:, None]
    hn = h / sd
    cs = 1.0 / np.linalg.norm(Bn, axis=0)
    Bs = Bn * cs
    try:
        L = np.linalg.cholesky(Cn)
        Bw = np.linalg.solve(L, Bs)
        hw = np.linalg.solve(L, hn)
        F = Bw.T @ Bw
        rhs = Bw.T @ hw
    except np.linalg.LinAlgError:
        Ci = np.linalg.pinv(Cn, hermitian=True)
        F = Bs.T @ Ci @ Bs
        rhs = Bs.T @ Ci @ hn
    Fi = np.linalg.pinv(0.5 * (F + F.T), hermitian=True)
    theta = cs * (Fi @ rhs)
    cov_theta = Fi * np.outer(cs, cs)
    return theta, cov_theta


def lls(batch: MeasurementBatch, anchors, c, sigma, gamma) -> EstimateReport:
    anchors = np.asarray(anchors, dtype=float)
    p0 = build_gtrs(batch, anchors, c)
    y0, _, reg0 = weighted_ls(p0.A, p0.b, p0.weights)
    alpha0 = abs(y0[4]) if y0[4] != 0 else 1.0
    w = gtrs_weights(y0[1:3], alpha0, anchors, sigma, gamma)
    p = build_gtrs(batch, anchors, c, weights=w)
    y, cov_y, reg = weighted_ls(p.A, p.b, p.weights)

    theta, cov_theta = _correction(y, cov_y)
    sd = np.sqrt(np.maximum(np.diag(cov_theta), 0.0))
    negative = theta < -NEG_SIGMAS * sd
    root = np.sqrt(np.abs(theta))
    x = np.sign(y[1:3]) * root[:2]
    # alpha > 0 by construction; a negative stage-one alpha only says that
    # component is poorly determined, so it is flagged rather than trusted
    alpha = root[2]
    if not alpha > 0:
        raise Degenerate("alpha^2 estimate is zero")
    sign_flip = not y[4] > 0
    status = SolverStatus.DEGENERATE if np.any(negative) or sign_flip else SolverStatus.CONVERGED
    return EstimateReport(
        method="LLS",
        position=x,
        skew=1.0 / alpha,
        status=status,
        iterations=2,
        diagnostics={
            "y": y,
            "theta": theta,
            "theta_sd": sd,
            "negative_theta": negative,
            "alpha_sign_flip": sign_flip,
            "regularised": bool(reg or reg0),
        },
    )
