"""Dense second-order cone programming by a primal-dual interior-point method.

Problem family::

    minimize    cost' x
    subject to  || A_i x + b_i ||_2 <= c_i' x + d_i,   i = 1..m
                || x ||_2 <= R                         (optional)

A block with zero rows (k_i = 0) is the linear inequality c_i' x + d_i >= 0.

Internally the problem is put in the conic form ``G x + s = h, s in K`` with
K a product of a nonnegative orthant and Lorentz cones, and solved with the
homogeneous self-dual embedding, Nesterov-Todd scaling and a Mehrotra
predictor-corrector step. Everything is dense; the intended sizes are a few
dozen variables and cones.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

log = logging.getLogger(__name__)


class SocpStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    MAX_ITER = "MaxIter"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ConeBlock:
    """|| A x + b || <= c' x + d."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float


@dataclass(frozen=True)
class SocpProblem:
    cost: np.ndarray
    cones: tuple = ()
    bound: float | None = None

    def __post_init__(self):
        cost = np.asarray(self.cost, dtype=float).reshape(-1)
        object.__setattr__(self, "cost", cost)
        n = cost.size
        blocks = []
        for blk in self.cones:
            if not isinstance(blk, ConeBlock):
                blk = ConeBlock(*blk)
            A = np.asarray(blk.A, dtype=float).reshape(-1, n)
            b = np.asarray(blk.b, dtype=float).reshape(-1)
            c = np.asarray(blk.c, dtype=float).reshape(-1)
            if b.size != A.shape[0] or c.size != n:
                raise ValueError("inconsistent cone block dimensions")
            blocks.append(ConeBlock(A, b, c, float(blk.d)))
        object.__setattr__(self, "cones", tuple(blocks))
        if self.bound is not None and not self.bound > 0:
            raise ValueError("norm bound R must be positive")
        if not blocks and self.bound is None:
            raise ValueError("need at least one cone or a norm bound")

    @property
    def n(self):
        return self.cost.size

    def max_violation(self, x):
        """Largest amount by which x violates any constraint (<= 0 means feasible)."""
        v = -np.inf
        for blk in self.cones:
            v = max(v, float(np.linalg.norm(blk.A @ x + blk.b) - blk.c @ x - blk.d))
        if self.bound is not None:
            v = max(v, float(np.linalg.norm(x) - self.bound))
        return v


@dataclass(frozen=True)
class SocpSolution:
    x: np.ndarray
    objective: float
    status: SocpStatus
    gap: float
    iterations: int
    dual_objective: float = float("nan")
    primal_residual: float = float("nan")
    dual_residual: float = float("nan")
    z: np.ndarray = field(default=None, repr=False)


class _Cone:
    """Product cone R+^l x Q^q1 x ... with index bookkeeping."""

    def __init__(self, l, socs):
        self.l = l
        self.socs = list(socs)
        self.slices = []
        start = l
        for q in self.socs:
            self.slices.append(slice(start, start + q))
            start += q
        self.dim = start
        self.degree = l + len(self.socs)
        self.e = np.zeros(start)
        self.e[:l] = 1.0
        for sl in self.slices:
            self.e[sl.start] = 1.0

    def max_step(self, u, du):
        """Largest a >= 0 with u + a du in the cone (inf if unbounded)."""
        amax = np.inf
        if self.l:
            neg = du[: self.l] < 0
            if np.any(neg):
                amax = min(amax, float(np.min(-u[: self.l][neg] / du[: self.l][neg])))
        for sl in self.slices:
            amax = min(amax, _soc_step(u[sl], du[sl]))
        return amax

    def interior_shift(self, u):
        """Smallest a with u + a e in the cone boundary."""
        a = -np.inf
        if self.l:
            a = max(a, float(np.max(-u[: self.l])))
        for sl in self.slices:
            v = u[sl]
            a = max(a, float(np.linalg.norm(v[1:]) - v[0]))
        return a

    def prod(self, u, v):
        out = np.empty_like(u)
        out[: self.l] = u[: self.l] * v[: self.l]
        for sl in self.slices:
            a, b = u[sl], v[sl]
            out[sl.start] = a @ b
            out[sl.start + 1: sl.stop] = a[0] * b[1:] + b[0] * a[1:]
        return out

    def div(self, lam, v):
        """Solve lam o x = v for x."""
        out = np.empty_like(v)
        out[: self.l] = v[: self.l] / lam[: self.l]
        for sl in self.slices:
            a, b = lam[sl], v[sl]
            det = _jdet(a)
            x0 = (a[0] * b[0] - a[1:] @ b[1:]) / det
            out[sl.start] = x0
            out[sl.start + 1: sl.stop] = (b[1:] - x0 * a[1:]) / a[0]
        return out

    def nt_scaling(self, s, z):
        """Return (W, W^-1, lambda) with W z = W^-1 s = lambda."""
        W = np.zeros((self.dim, self.dim))
        Wi = np.zeros((self.dim, self.dim))
        if self.l:
            d = np.sqrt(s[: self.l] / z[: self.l])
            idx = np.arange(self.l)
            W[idx, idx] = d
            Wi[idx, idx] = 1.0 / d
        for sl in self.slices:
            ss, zz = s[sl], z[sl]
            q = ss.size
            sn = np.sqrt(max(_jdet(ss), 1e-300))
            zn = np.sqrt(max(_jdet(zz), 1e-300))
            sb, zb = ss / sn, zz / zn
            gam = np.sqrt(max((1.0 + sb @ zb) / 2.0, 1e-300))
            wb = sb.copy()
            wb[0] += zb[0]
            wb[1:] -= zb[1:]
            wb /= 2.0 * gam
            v = wb.copy()
            v[0] += 1.0
            v /= np.sqrt(2.0 * (wb[0] + 1.0))
            beta = np.sqrt(sn / zn)
            J = -np.eye(q)
            J[0, 0] = 1.0
            W[sl, sl] = beta * (2.0 * np.outer(v, v) - J)
            Jv = v.copy()
            Jv[1:] = -Jv[1:]
            Wi[sl, sl] = (2.0 * np.outer(Jv, Jv) - J) / beta
        lam = W @ z
        return W, Wi, lam


def _jdet(u):
    """u0^2 - |u1|^2 without cancellation in the difference of squares."""
    r = np.linalg.norm(u[1:])
    return (u[0] - r) * (u[0] + r)


def _soc_step(u, du):
    a = _jdet(du)
    b = u[0] * du[0] - u[1:] @ du[1:]
    c = _jdet(u)
    if c <= 0:
        return 0.0
    roots = []
    if abs(a) < 1e-300:
        if b < 0:
            roots.append(-c / (2.0 * b))
    else:
        disc = b * b - a * c
        if disc >= 0:
            sq = np.sqrt(disc)
            qq = -(b + np.copysign(sq, b))
            if qq != 0:
                roots.extend([qq / a, c / qq])
            else:
                roots.append(0.0)
    pos = [r for r in roots if r > 0]
    return min(pos) if pos else np.inf


def to_conic(p: SocpProblem):
    """Build (G, h, cone) with s = h - G x."""
    n = p.n
    lin_rows, lin_h = [], []
    soc_G, soc_h, socs = [], [], []
    for blk in p.cones:
        if blk.A.shape[0] == 0:
            lin_rows.append(-blk.c)
            lin_h.append(blk.d)
        else:
            soc_G.append(np.vstack([-blk.c[None, :], -blk.A]))
            soc_h.append(np.concatenate([[blk.d], blk.b]))
            socs.append(blk.A.shape[0] + 1)
    if p.bound is not None:
        soc_G.append(np.vstack([np.zeros((1, n)), -np.eye(n)]))
        soc_h.append(np.concatenate([[p.bound], np.zeros(n)]))
        socs.append(n + 1)
    G = np.vstack([np.array(lin_rows).reshape(-1, n)] + soc_G)
    h = np.concatenate([np.array(lin_h, dtype=float)] + soc_h)
    return G, h, _Cone(len(lin_rows), socs)


def _chol_solver(H):
    H = 0.5 * (H + H.T)
    try:
        cf = sla.cho_factor(H, check_finite=False)
        return lambda r: sla.cho_solve(cf, r, check_finite=False)
    except np.linalg.LinAlgError:
        reg = 1e-13 * max(1.0, float(np.max(np.abs(np.diag(H)))))
        cf = sla.cho_factor(H + reg * np.eye(H.shape[0]), check_finite=False)
        return lambda r: sla.cho_solve(cf, r, check_finite=False)


def solve_socp(p: SocpProblem, gap_tol=1e-8, feas_tol=1e-8, max_iter=100, refine=3) -> SocpSolution:
    G, h, K = to_conic(p)
    c = p.cost
    n = p.n
    hnorm = max(1.0, float(np.linalg.norm(h)))
    cnorm = max(1.0, float(np.linalg.norm(c)))

    solve0 = _chol_solver(G.T @ G)
    full_rank = G.shape[0] >= n and np.linalg.matrix_rank(G) == n
    reg = 1e-8 * max(1.0, float(np.linalg.norm(G)))
    x = solve0(G.T @ h)
    s = h - G @ x
    a = K.interior_shift(s)
    if a >= 0:
        s = s + (1.0 + a) * K.e
    z = G @ solve0(-c)
    a = K.interior_shift(z)
    if a >= 0:
        z = z + (1.0 + a) * K.e
    tau = kappa = 1.0

    status = SocpStatus.MAX_ITER
    it = 0
    pcost = dcost = np.nan
    pres = dres = rel_gap = np.inf
    best = None
    for it in range(max_iter + 1):
        r1 = -(G.T @ z + c * tau)
        r3 = s + G @ x - h * tau
        r4 = kappa + c @ x + h @ z
        pcost = float(c @ x) / tau
        dcost = float(-h @ z) / tau
        pres = float(np.linalg.norm(r3)) / tau / hnorm
        dres = float(np.linalg.norm(r1)) / tau / cnorm
        compl = float(s @ z) / tau**2
        rel_gap = compl / max(1.0, abs(pcost))
        if pres <= feas_tol and dres <= feas_tol and rel_gap <= gap_tol:
            status = SocpStatus.OPTIMAL
            break
        hz = float(h @ z)
        if hz < 0 and np.linalg.norm(G.T @ z) / -hz <= feas_tol:
            status = SocpStatus.INFEASIBLE
            break
        cx = float(c @ x)
        if cx < 0 and np.linalg.norm(G @ x + s) / -cx <= feas_tol:
            status = SocpStatus.UNBOUNDED
            break
        log.debug("it %d pcost %.6e dcost %.6e pres %.2e dres %.2e gap %.2e tau %.2e kappa %.2e",
                  it, pcost, dcost, pres, dres, rel_gap, tau, kappa)
        if best is None or max(pres, dres, rel_gap) < best[0]:
            best = (max(pres, dres, rel_gap), x / tau, pcost, dcost, rel_gap, pres, dres, z / tau)
        if it == max_iter:
            break

        W, Wi, lam = K.nt_scaling(s, z)
        Gs = Wi @ G
        Gq = Gs if full_rank else np.vstack([Gs, reg * np.eye(n)])
        try:
            Q, R = np.linalg.qr(Gq)
            Q = Q[: K.dim]
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(R)) or np.min(np.abs(np.diag(R))) == 0:
            break
        mu = (float(s @ z) + kappa * tau) / (K.degree + 1)

        def kkt(rx, rz):
            # G'dz = rx, G dx - W^2 dz = rz; with u = W dz this is the least
            # squares system Gs'u = rx, Gs dx - u = W^-1 rz, Gs = W^-1 G = QR
            wr = Wi @ rz

            def once(ex, ew):
                y = sla.solve_triangular(R, ex, trans="T", check_finite=False)
                dx = sla.solve_triangular(R, y + Q.T @ ew, check_finite=False)
                return dx, Gs @ dx - ew

            dx, u = once(rx, wr)
            for _ in range(refine):
                cx, cu = once(rx - Gs.T @ u, wr - (Gs @ dx - u))
                dx, u = dx + cx, u + cu
            return dx, Wi @ u

        x1, z1 = kkt(-c, h)
        # c'x1 + h'z1 = -|W z1|^2 for the exact KKT solution; the direct sum cancels
        denom = -float(np.sum((W @ z1) ** 2)) - kappa / tau

        def direction(eta, xi_s, xi_k):
            wl = W @ K.div(lam, xi_s)
            x2, z2 = kkt(eta * r1, -eta * r3 - wl)
            dtau = (-eta * r4 - xi_k / tau - float(c @ x2 + h @ z2)) / denom
            dx = x2 + dtau * x1
            dz = z2 + dtau * z1
            ds = -eta * r3 - G @ dx + h * dtau
            dkappa = (xi_k - kappa * dtau) / tau
            return dx, ds, dz, dtau, dkappa

        def step_len(ds, dz, dtau, dkappa):
            amax = min(K.max_step(s, ds), K.max_step(z, dz))
            if dtau < 0:
                amax = min(amax, -tau / dtau)
            if dkappa < 0:
                amax = min(amax, -kappa / dkappa)
            return amax

        lam_lam = K.prod(lam, lam)
        aff = direction(1.0, -lam_lam, -kappa * tau)
        a_aff = min(1.0, step_len(*aff[1:]))
        sigma = float(np.clip((1.0 - a_aff) ** 3, 0.0, 1.0))
        corr = K.prod(Wi @ aff[1], W @ aff[2])
        xi_s = -lam_lam + sigma * mu * K.e - corr
        xi_k = -kappa * tau + sigma * mu - aff[3] * aff[4]
        dx, ds, dz, dtau, dkappa = direction(1.0 - sigma, xi_s, xi_k)
        alpha = min(1.0, 0.99 * step_len(ds, dz, dtau, dkappa))
        if not np.isfinite(alpha) or alpha < 1e-12:
            log.debug("step length %.3g, stopping", alpha)
            break
        x = x + alpha * dx
        s = s + alpha * ds
        z = z + alpha * dz
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkappa
        if not (np.all(np.isfinite(x)) and tau > 0):
            break

    if status is SocpStatus.OPTIMAL:
        return SocpSolution(x / tau, pcost, status, rel_gap, it, dcost, pres, dres, z / tau)
    if status in (SocpStatus.INFEASIBLE, SocpStatus.UNBOUNDED):
        return SocpSolution(np.full(n, np.nan), np.nan, status, np.nan, it, np.nan, pres, dres)
    _, xb, pb, db, gb, prb, drb, zb = best
    return SocpSolution(xb, pb, SocpStatus.MAX_ITER, gb, it, db, prb, drb, zb)


def dump_socp(p: SocpProblem, path):
    """Plain-text block format: header line, cost line, then one block per cone."""
    lines = [f"socp n {p.n} cones {len(p.cones)} bound {p.bound if p.bound is not None else 'none'}",
             "cost " + " ".join(repr(float(v)) for v in p.cost)]
    for blk in p.cones:
        lines.append(f"cone {blk.A.shape[0]}")
        for row in blk.A:
            lines.append("A " + " ".join(repr(float(v)) for v in row))
        lines.append("b " + " ".join(repr(float(v)) for v in blk.b))
        lines.append("c " + " ".join(repr(float(v)) for v in blk.c))
        lines.append(f"d {float(blk.d)!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_socp(path) -> SocpProblem:
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    head = lines[0]
    n, m = int(head[2]), int(head[4])
    bound = None if head[6] == "none" else float(head[6])
    cost = np.array(lines[1][1:], dtype=float)
    pos = 2
    cones = []
    for _ in range(m):
        k = int(lines[pos][1])
        pos += 1
        A = np.array([lines[pos + r][1:] for r in range(k)], dtype=float).reshape(k, n)
        pos += k
        b = np.array(lines[pos][1:], dtype=float)
        c = np.array(lines[pos + 1][1:], dtype=float)
        d = float(lines[pos + 2][1])
        pos += 3
        cones.append(ConeBlock(A, b, c, d))
    return SocpProblem(cost, tuple(cones), bound)
