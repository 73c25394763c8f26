"""Fisher information and Cramer-Rao bound for psi = (x1, x2, w, T_1..T_N).

Per round, the observation vector stacks (z_i, T_hat_i) for each anchor
with mean (w (d_i/c + T_i/2), T_i) and diagonal covariance
(sigma_i^2/4, gamma_i^2). Rounds are independent, so J = K G' C^-1 G with G
the 2N x (N+3) Jacobian of the mean.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Singular
from .model import NetworkScenario

SINGULAR_EPS = 1e-9


@dataclass(frozen=True)
class FisherMatrix:
    J: np.ndarray
    mean: np.ndarray
    cov: np.ndarray
    jacobian: np.ndarray
    closed_form: dict


def mean_vector(psi, anchors, c):
    """Stacked (z_i mean, T_i) pairs for psi = (x1, x2, w, T_1..T_N)."""
    psi = np.asarray(psi, dtype=float)
    x, w, T = psi[:2], psi[2], psi[3:]
    d = np.linalg.norm(np.asarray(anchors, float) - x, axis=1)
    mu = np.empty(2 * T.size)
    mu[0::2] = w * (d / c + T / 2.0)
    mu[1::2] = T
    return mu


def mean_jacobian(psi, anchors, c):
    psi = np.asarray(psi, dtype=float)
    anchors = np.asarray(anchors, float)
    x, w, T = psi[:2], psi[2], psi[3:]
    n = T.size
    diff = x - anchors
    d = np.linalg.norm(diff, axis=1)
    if np.any(d < SINGULAR_EPS):
        raise Singular("target coincides with an anchor")
    G = np.zeros((2 * n, n + 3))
    G[0::2, :2] = w * diff / (c * d[:, None])
    G[0::2, 2] = d / c + T / 2.0
    idx = np.arange(n)
    G[2 * idx, 3 + idx] = w / 2.0
    G[2 * idx + 1, 3 + idx] = 1.0
    return G


def _closed_form(scenario: NetworkScenario):
    """Hand-derived entries of J, kept as an independent cross-check."""
    K, c = scenario.rounds, scenario.c
    w = scenario.target_clock.skew
    x, a = scenario.target, scenario.anchors
    d = np.linalg.norm(x - a, axis=1)
    s2, g2, T = scenario.sigma**2, scenario.gamma**2, scenario.turnaround
    u1, u2 = (x[0] - a[:, 0]) / d, (x[1] - a[:, 1]) / d
    pre = 4.0 * K / s2
    return {
        "J11": float(np.sum(pre * w**2 * u1 * u1 / c**2)),
        "J22": float(np.sum(pre * w**2 * u2 * u2 / c**2)),
        "J12": float(np.sum(pre * w**2 * u1 * u2 / c**2)),
        "J33": float(np.sum(pre * (d / c + T / 2.0) ** 2)),
        "J13": float(np.sum(pre * w * u1 / c * (d / c + T / 2.0))),
        "J23": float(np.sum(pre * w * u2 / c * (d / c + T / 2.0))),
        "Jjj": K * (w**2 / s2 + 1.0 / g2),
        "Jj1": pre * w**2 * u1 / (2.0 * c),
        "Jj2": pre * w**2 * u2 / (2.0 * c),
        "Jj3": pre * w / 2.0 * (d / c + T / 2.0),
    }


def fisher(scenario: NetworkScenario) -> FisherMatrix:
    psi = np.concatenate([scenario.target, [scenario.target_clock.skew], scenario.turnaround])
    G = mean_jacobian(psi, scenario.anchors, scenario.c)
    var = np.empty(2 * scenario.n_anchors)
    var[0::2] = scenario.sigma**2 / 4.0
    var[1::2] = scenario.gamma**2
    J = scenario.rounds * (G.T / var) @ G
    J = 0.5 * (J + J.T)
    return FisherMatrix(J=J, mean=mean_vector(psi, scenario.anchors, scenario.c),
                        cov=np.diag(var), jacobian=G, closed_form=_closed_form(scenario))


def crlb_matrix(fm: FisherMatrix) -> np.ndarray:
    """J^-1 computed on the diagonally equilibrated matrix."""
    dg = np.diag(fm.J)
    if np.any(dg <= 0):
        raise Singular("Fisher matrix has a non-positive diagonal entry")
    s = 1.0 / np.sqrt(dg)
    Js = fm.J * np.outer(s, s)
    try:
        L = np.linalg.cholesky(Js)
    except np.linalg.LinAlgError as exc:
        raise Singular("Fisher matrix is not positive definite") from exc
    if np.linalg.cond(L) ** 2 > 1e14:
        raise Singular("Fisher matrix is numerically singular")
    Li = np.linalg.inv(L)
    return (Li.T @ Li) * np.outer(s, s)


def crlb_position(scenario: NetworkScenario) -> float:
    """Lower bound on E|x_hat - x|^2 in square metres."""
    inv = crlb_matrix(fisher(scenario))
    return float(inv[0, 0] + inv[1, 1])
