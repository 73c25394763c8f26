"""Levenberg-Marquardt for sum-of-squares objectives with an optional smooth extra term."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonFinite


@dataclass
class LmResult:
    p: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    converged: bool
    stalled: bool


def levenberg_marquardt(residual, p0, project=None, extra=None, max_iter=500, gtol=1e-10):
    """Minimise F(p) = |r(p)|^2 + e(p).

    ``residual(p)`` returns (r, J). ``extra(p)``, if given, returns the value,
    gradient and a positive semidefinite Hessian approximation of e. After
    each trial step ``project`` maps p back onto the feasible box.

    Stops when |grad F| <= gtol * (1 + F), or when the damping grows without
    a decrease being found. The second case means the iterate sits at a
    minimum to working precision, so it is also reported as converged.
    """
    project = project or (lambda q: q)
    p = project(np.asarray(p0, dtype=float).copy())

    def evaluate(q):
        r, J = residual(q)
        F = float(r @ r)
        g = 2.0 * J.T @ r
        H = 2.0 * J.T @ J
        if extra is not None:
            ev, eg, eh = extra(q)
            F += ev
            g = g + eg
            H = H + eh
        return F, g, H

    F, g, H = evaluate(p)
    if not np.isfinite(F):
        raise NonFinite("objective is not finite at the initial point")
    lam = 1e-3
    for it in range(max_iter):
        gn = float(np.linalg.norm(g))
        if gn <= gtol * (1.0 + abs(F)):
            return LmResult(p, F, gn, it, True, False)
        diag = np.maximum(np.diag(H), 1e-12 * max(1.0, float(np.max(np.diag(H)))))
        while True:
            try:
                step = np.linalg.solve(H + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                step = None
            if step is not None and np.all(np.isfinite(step)):
                q = project(p + step)
                Fq, gq, Hq = evaluate(q)
                if np.isfinite(Fq) and Fq < F:
                    p, F, g, H = q, Fq, gq, Hq
                    lam = max(lam / 3.0, 1e-12)
                    break
            lam *= 4.0
            if lam > 1e16:
                return LmResult(p, F, float(np.linalg.norm(g)), it, True, True)
    return LmResult(p, F, float(np.linalg.norm(g)), max_iter, False, False)
