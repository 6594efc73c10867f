"""Standard-form semidefinite programs and a primal-dual interior-point solver.

Primal problem::

    minimize    <C, X>
    subject to  <A_i, X> = b_i,  i = 1..m
                X = (x_free, x_nonneg, X_1, ..., X_k),  x_nonneg >= 0,  X_j PSD

Dual problem::

    maximize    b'y
    subject to  C - sum_i y_i A_i = S,  S in the dual cone (S_free = 0)

The built-in solver runs a homogeneous self-dual embedding with
Nesterov-Todd scaling and a Mehrotra predictor-corrector. The embedding
yields either an optimal pair or an infeasibility ray, which is what the
gamma bisection downstream relies on.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .linalg import jacobi_eigh

log = logging.getLogger(__name__)

STEP_FRACTION = 0.98
# A Farkas ray with normalized residual rho proves every feasible point has norm >= 1/rho.
TOL_INFEAS = 1e-6
# complementarity below this (with tau = kappa = 1 initially) without convergence means stalling
MU_STALL = 1e-20


class SdpStatus(str, Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    MAX_ITERATIONS = "MaxIterations"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True)
class Block:
    kind: str  # 'f' free, 'l' nonnegative orthant, 's' PSD cone
    size: int

    def __post_init__(self):
        if self.kind not in ("f", "l", "s"):
            raise ValueError(f"unknown block kind {self.kind!r}")
        if self.size < 1:
            raise ValueError("block size must be positive")


class SdpProblem:
    """Block-structured SDP data.

    ``A[j]`` holds the constraint data of block ``j``: shape ``(m, size)`` for
    free/nonnegative blocks and ``(m, size, size)`` (symmetric slices) for PSD
    blocks. ``C[j]`` has shape ``(size,)`` or ``(size, size)``.
    """

    def __init__(self, blocks: Sequence[Block], C: Sequence[np.ndarray], A: Sequence[np.ndarray], b):
        self.blocks = list(blocks)
        self.b = np.asarray(b, dtype=float).reshape(-1)
        m = self.b.size
        if not (len(self.blocks) == len(C) == len(A)):
            raise ValueError("C and A must have one entry per block")
        self.C = []
        self.A = []
        for blk, Cj, Aj in zip(self.blocks, C, A):
            Cj = np.asarray(Cj, dtype=float)
            Aj = np.asarray(Aj, dtype=float)
            if blk.kind == "s":
                if Cj.shape != (blk.size, blk.size) or Aj.shape != (m, blk.size, blk.size):
                    raise ValueError("PSD block data does not conform to the block size")
                Cj = 0.5 * (Cj + Cj.T)
                Aj = 0.5 * (Aj + Aj.transpose(0, 2, 1))
            else:
                if Cj.shape != (blk.size,) or Aj.shape != (m, blk.size):
                    raise ValueError("vector block data does not conform to the block size")
            self.C.append(Cj)
            self.A.append(Aj)

    @property
    def m(self) -> int:
        return self.b.size

    def apply_A(self, X: Sequence[np.ndarray]) -> np.ndarray:
        out = np.zeros(self.m)
        for blk, Aj, Xj in zip(self.blocks, self.A, X):
            if blk.kind == "s":
                out += np.tensordot(Aj, Xj, axes=([1, 2], [0, 1]))
            else:
                out += Aj @ Xj
        return out

    def apply_At(self, y) -> list[np.ndarray]:
        y = np.asarray(y, dtype=float)
        return [np.tensordot(y, Aj, axes=1) for Aj in self.A]

    def objective(self, X) -> float:
        return float(sum(np.sum(Cj * Xj) for Cj, Xj in zip(self.C, X)))


@dataclass
class SdpSolution:
    status: SdpStatus
    X: list[np.ndarray]
    y: np.ndarray
    S: list[np.ndarray]
    primal_objective: float = np.nan
    dual_objective: float = np.nan
    primal_residual: float = np.nan
    dual_residual: float = np.nan
    gap: float = np.nan
    iterations: int = 0
    ray: dict | None = None
    history: list[dict] = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status == SdpStatus.OPTIMAL


# ---------------------------------------------------------------------------
# scaling helpers


class _NtScaling:
    """Nesterov-Todd scaling of one cone block: X = G L G', S = G^{-T} L G^{-1}, L diagonal."""

    def __init__(self, kind: str, X, S):
        self.kind = kind
        if kind == "l":
            self.lam = np.sqrt(X * S)
            self.w = np.sqrt(X / S)
            return
        Lx = np.linalg.cholesky(X)
        Ls = np.linalg.cholesky(S)
        U, d, Vt = np.linalg.svd(Ls.T @ Lx)
        if d.min() <= 0:
            raise np.linalg.LinAlgError("degenerate scaling")
        self.lam = d
        rs = 1.0 / np.sqrt(d)
        self.G = (Lx @ Vt.T) * rs
        # G^{-1} = diag(sqrt d) Vt Lx^{-1};  G^{-T} = Ls U diag(1/sqrt d)
        self.GinvT = (Ls @ U) * rs
        self.W = self.G @ self.G.T

    def scale_primal(self, dX):
        if self.kind == "l":
            return dX / self.w
        return self.GinvT.T @ dX @ self.GinvT

    def scale_dual(self, dS):
        if self.kind == "l":
            return dS * self.w
        return self.G.T @ dS @ self.G

    def apply_W(self, U):
        if self.kind == "l":
            return self.w * self.w * U
        return self.W @ U @ self.W

    def unscale_primal(self, Z):
        if self.kind == "l":
            return self.w * Z
        return self.G @ Z @ self.G.T

    def solve_lambda(self, R):
        """Solve lam o Z = R (Jordan product) for Z."""
        if self.kind == "l":
            return R / self.lam
        return 2.0 * R / (self.lam[:, None] + self.lam[None, :])

    def max_step(self, dXs, dSs) -> float:
        """Largest alpha keeping lam + alpha*dXs and lam + alpha*dSs in the cone."""
        if self.kind == "l":
            alpha = np.inf
            for d in (dXs, dSs):
                neg = d < 0
                if np.any(neg):
                    alpha = min(alpha, float(np.min(-self.lam[neg] / d[neg])))
            return alpha
        r = 1.0 / np.sqrt(self.lam)
        alpha = np.inf
        for d in (dXs, dSs):
            ev = np.linalg.eigvalsh(r[:, None] * d * r[None, :])[0]
            if ev < 0:
                alpha = min(alpha, -1.0 / ev)
        return alpha


def _jordan(kind, a, b):
    if kind == "l":
        return a * b
    return 0.5 * (a @ b + b @ a)


# ---------------------------------------------------------------------------
# built-in solver


def _presolve_rows(problem: SdpProblem):
    """Row norms; detects empty rows (dropped if b_i = 0, infeasible otherwise)."""
    norms = np.zeros(problem.m)
    for blk, Aj in zip(problem.blocks, problem.A):
        flat = Aj.reshape(problem.m, -1)
        norms += np.sum(flat * flat, axis=1)
    return np.sqrt(norms)


def _blockwise_zero(problem: SdpProblem, value: float = 0.0):
    out = []
    for blk in problem.blocks:
        if blk.kind == "s":
            out.append(np.eye(blk.size) * value)
        else:
            out.append(np.full(blk.size, value))
    return out


def _infeasible_from_empty_row(problem: SdpProblem, i: int) -> SdpSolution:
    y = np.zeros(problem.m)
    y[i] = np.sign(problem.b[i])
    ray_S = [-a for a in problem.apply_At(y)]
    sol = SdpSolution(SdpStatus.PRIMAL_INFEASIBLE, _blockwise_zero(problem), y / abs(problem.b[i]), ray_S)
    sol.ray = {"y": sol.y, "S": ray_S}
    return sol


def hsd_solve(problem: SdpProblem, tol_feas: float = 1e-8, tol_gap: float = 1e-8, max_iters: int = 100) -> SdpSolution:
    """Homogeneous self-dual interior-point method with NT scaling and Mehrotra correction."""
    norms = _presolve_rows(problem)
    for i in np.flatnonzero(norms == 0):
        if abs(problem.b[i]) > 0:
            return _infeasible_from_empty_row(problem, i)
    keep = norms > 0
    D = np.ones(problem.m)
    D[keep] = 1.0 / norms[keep]

    blocks = problem.blocks
    m = int(keep.sum())
    b = (problem.b * D)[keep]
    A = []
    for blk, Aj in zip(blocks, problem.A):
        scaled = Aj * (D.reshape(-1, *([1] * (Aj.ndim - 1))))
        A.append(scaled[keep])
    C = problem.C

    free = [j for j, blk in enumerate(blocks) if blk.kind == "f"]
    cone = [j for j, blk in enumerate(blocks) if blk.kind != "f"]
    Af = np.hstack([A[j] for j in free]) if free else np.zeros((m, 0))
    cf = np.concatenate([C[j] for j in free]) if free else np.zeros(0)
    nf = Af.shape[1]
    free_slices = {}
    off = 0
    for j in free:
        free_slices[j] = slice(off, off + blocks[j].size)
        off += blocks[j].size

    # rows touched by each cone block (Schur complement assembly)
    rows = {}
    for j in cone:
        flat = A[j].reshape(m, -1)
        rows[j] = np.flatnonzero(np.any(flat != 0, axis=1))

    nu = sum(blocks[j].size for j in cone)
    normb = np.linalg.norm(b)
    normC = np.sqrt(sum(np.sum(Cj * Cj) for Cj in C))

    X = {j: (np.eye(blocks[j].size) if blocks[j].kind == "s" else np.ones(blocks[j].size)) for j in cone}
    S = {j: X[j].copy() for j in cone}
    xf = np.zeros(nf)
    y = np.zeros(m)
    tau = 1.0
    kappa = 1.0

    Arows = {j: A[j][rows[j]] for j in cone}

    def A_of(Xd, xfree):
        out = Af @ xfree if nf else np.zeros(m)
        for j in cone:
            if blocks[j].kind == "s":
                out[rows[j]] += np.tensordot(Arows[j], Xd[j], axes=([1, 2], [0, 1]))
            else:
                out[rows[j]] += Arows[j] @ Xd[j]
        return out

    def At_of(yv):
        return {j: np.tensordot(yv[rows[j]], Arows[j], axes=1) for j in cone}

    def inner(P, Q):
        return float(sum(np.sum(P[j] * Q[j]) for j in cone))

    Cc = {j: C[j] for j in cone}
    history = []
    status = SdpStatus.MAX_ITERATIONS
    it = 0

    def residuals():
        rp = b * tau - A_of(X, xf)
        Aty = At_of(y)
        rd = {j: C[j] * tau - Aty[j] - S[j] for j in cone}
        rdf = cf * tau - Af.T @ y
        rg = inner(Cc, X) + cf @ xf - b @ y + kappa
        return rp, rd, rdf, rg

    ray = None
    for it in range(max_iters + 1):
        rp, rd, rdf, rg = residuals()
        pobj = (inner(Cc, X) + cf @ xf) / tau
        dobj = (b @ y) / tau
        compl = inner(X, S)
        mu = (compl + tau * kappa) / (nu + 1)
        pres = np.linalg.norm(rp) / tau / (1.0 + normb)
        dres = np.sqrt(sum(np.sum(r * r) for r in rd.values()) + rdf @ rdf) / tau / (1.0 + normC)
        denom = 1.0 + abs(pobj) + abs(dobj)
        relgap = max(abs(pobj - dobj), compl / tau**2) / denom
        history.append(dict(iter=it, pobj=pobj, dobj=dobj, pres=pres, dres=dres, gap=relgap, mu=mu, tau=tau, kappa=kappa))
        log.debug("it %3d pobj %+.6e dobj %+.6e pres %.2e dres %.2e gap %.2e tau %.2e kappa %.2e",
                  it, pobj, dobj, pres, dres, relgap, tau, kappa)

        if pres <= tol_feas and dres <= tol_feas and relgap <= tol_gap:
            status = SdpStatus.OPTIMAL
            break
        bty = b @ y
        if bty > 0:
            Aty = At_of(y)
            r = np.sqrt(sum(np.sum((Aty[j] + S[j]) ** 2) for j in cone) + np.sum((Af.T @ y) ** 2))
            if r / bty <= TOL_INFEAS:
                status = SdpStatus.PRIMAL_INFEASIBLE
                ray = True
                break
        ctx = inner(Cc, X) + cf @ xf
        if ctx < 0:
            r = np.linalg.norm(A_of(X, xf))
            if r / (-ctx) <= TOL_INFEAS:
                status = SdpStatus.DUAL_INFEASIBLE
                ray = True
                break
        if it == max_iters:
            status = SdpStatus.MAX_ITERATIONS
            break
        if mu < MU_STALL:
            log.debug("stalled at iteration %d", it)
            status = SdpStatus.NUMERICAL_FAILURE
            break

        # ---- Newton system -------------------------------------------------
        try:
            scal = {j: _NtScaling(blocks[j].kind, X[j], S[j]) for j in cone}
        except np.linalg.LinAlgError:
            status = SdpStatus.NUMERICAL_FAILURE
            break
        M = np.zeros((m, m))
        WCW = {}
        for j in cone:
            sc = scal[j]
            r_idx = rows[j]
            Ar = Arows[j]
            if blocks[j].kind == "s":
                WAW = sc.W @ Ar @ sc.W
                M[np.ix_(r_idx, r_idx)] += Ar.reshape(len(r_idx), -1) @ WAW.reshape(len(r_idx), -1).T
            else:
                M[np.ix_(r_idx, r_idx)] += (Ar * (sc.w * sc.w)) @ Ar.T
            WCW[j] = sc.apply_W(C[j])
        a_c = A_of(WCW, np.zeros(nf))
        cWc = inner(Cc, WCW)
        N = m + nf + 1
        K = np.zeros((N, N))
        K[:m, :m] = M
        K[:m, m:m + nf] = Af
        K[:m, -1] = -(a_c + b)
        K[m:m + nf, :m] = Af.T
        K[m:m + nf, -1] = -cf
        K[-1, :m] = a_c - b
        K[-1, m:m + nf] = cf
        K[-1, -1] = -(cWc + kappa / tau)
        reg = 1e-13 * max(1.0, np.abs(np.diag(M)).max(initial=1.0))
        Kreg = K.copy()
        Kreg[np.arange(m), np.arange(m)] += reg
        Kreg[m + np.arange(nf), m + np.arange(nf)] -= reg
        try:
            lu = scipy.linalg.lu_factor(Kreg, check_finite=True)
        except (ValueError, np.linalg.LinAlgError):
            status = SdpStatus.NUMERICAL_FAILURE
            break

        def solve_direction(eta, RX, rtk):
            h1 = eta * rp - A_of({j: RX[j] - scal[j].apply_W(eta * rd[j]) for j in cone}, np.zeros(nf))
            h2 = eta * rdf
            h3 = -eta * rg - rtk / tau - inner(Cc, {j: RX[j] - scal[j].apply_W(eta * rd[j]) for j in cone})
            rhs = np.concatenate([h1, h2, [h3]])
            sol = scipy.linalg.lu_solve(lu, rhs)
            for _ in range(3):
                res = rhs - K @ sol
                if np.linalg.norm(res) <= 1e-14 * (1 + np.linalg.norm(rhs)):
                    break
                sol = sol + scipy.linalg.lu_solve(lu, res)
            dy = sol[:m]
            dxf = sol[m:m + nf]
            dtau = sol[-1]
            dkap = (rtk - kappa * dtau) / tau
            Atdy = At_of(dy)
            dS = {j: eta * rd[j] - Atdy[j] + C[j] * dtau for j in cone}
            dX = {j: RX[j] - scal[j].apply_W(dS[j]) for j in cone}
            return dX, dS, dy, dxf, dtau, dkap

        def max_step(dX, dS, dtau, dkap):
            alpha = np.inf
            scaled = {}
            for j in cone:
                dXs = scal[j].scale_primal(dX[j])
                dSs = scal[j].scale_dual(dS[j])
                scaled[j] = (dXs, dSs)
                alpha = min(alpha, scal[j].max_step(dXs, dSs))
            if dtau < 0:
                alpha = min(alpha, -tau / dtau)
            if dkap < 0:
                alpha = min(alpha, -kappa / dkap)
            return alpha, scaled

        # predictor
        RX_aff = {j: -X[j] for j in cone}
        aff = solve_direction(1.0, RX_aff, -tau * kappa)
        alpha_aff, scaled_aff = max_step(aff[0], aff[1], aff[4], aff[5])
        alpha_aff = min(1.0, alpha_aff)
        sigma = (1.0 - alpha_aff) ** 3

        # corrector
        RX = {}
        for j in cone:
            sc = scal[j]
            dXs, dSs = scaled_aff[j]
            lam = sc.lam
            if blocks[j].kind == "s":
                target = sigma * mu * np.eye(lam.size) - np.diag(lam * lam) - _jordan("s", dXs, dSs)
            else:
                target = sigma * mu - lam * lam - dXs * dSs
            RX[j] = sc.unscale_primal(sc.solve_lambda(target))
        rtk = sigma * mu - tau * kappa - aff[4] * aff[5]
        dX, dS, dy, dxf, dtau, dkap = solve_direction(1.0 - sigma, RX, rtk)
        alpha, _ = max_step(dX, dS, dtau, dkap)
        alpha = min(1.0, STEP_FRACTION * alpha)
        if not np.isfinite(alpha) or alpha < 1e-12:
            status = SdpStatus.NUMERICAL_FAILURE
            break
        for j in cone:
            X[j] = X[j] + alpha * dX[j]
            S[j] = S[j] + alpha * dS[j]
            if blocks[j].kind == "s":
                X[j] = 0.5 * (X[j] + X[j].T)
                S[j] = 0.5 * (S[j] + S[j].T)
        y = y + alpha * dy
        xf = xf + alpha * dxf
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkap
        if not np.isfinite(tau) or tau <= 0 or kappa <= 0:
            status = SdpStatus.NUMERICAL_FAILURE
            break

    # ---- assemble output in the original row scaling --------------------------
    y_full = np.zeros(problem.m)
    y_full[keep] = y
    y_orig = y_full * D

    def assemble(div):
        Xout, Sout = [], []
        for j, blk in enumerate(blocks):
            if blk.kind == "f":
                Xout.append(xf[free_slices[j]] / div)
                Sout.append(np.zeros(blk.size))
            else:
                Xout.append(X[j] / div)
                Sout.append(S[j] / div)
        return Xout, Sout

    if status in (SdpStatus.PRIMAL_INFEASIBLE,):
        bty = problem.b @ y_orig
        Xout, Sout = assemble(1.0)
        sol = SdpSolution(status, Xout, y_orig / bty, [s / bty for s in Sout], iterations=it, history=history)
        sol.ray = {"y": sol.y, "S": sol.S}
        return sol
    if status == SdpStatus.DUAL_INFEASIBLE:
        Xout, Sout = assemble(1.0)
        ctx = problem.objective(Xout)
        sol = SdpSolution(status, [x / -ctx for x in Xout], y_orig, Sout, iterations=it, history=history)
        sol.ray = {"X": sol.X}
        return sol
    Xout, Sout = assemble(tau)
    sol = SdpSolution(status, Xout, y_orig / tau, Sout, iterations=it, history=history)
    _fill_metrics(problem, sol)
    return sol


def _fill_metrics(problem: SdpProblem, sol: SdpSolution):
    sol.primal_objective = problem.objective(sol.X)
    sol.dual_objective = float(problem.b @ sol.y)
    sol.primal_residual = float(np.linalg.norm(problem.apply_A(sol.X) - problem.b))
    Aty = problem.apply_At(sol.y)
    sol.dual_residual = float(np.sqrt(sum(np.sum((Cj - a - s) ** 2) for Cj, a, s in zip(problem.C, Aty, sol.S))))
    sol.gap = abs(sol.primal_objective - sol.dual_objective) / (1.0 + abs(sol.primal_objective) + abs(sol.dual_objective))


# ---------------------------------------------------------------------------
# backend contract

SolverBackend = Callable[..., SdpSolution]

BACKENDS: dict[str, SolverBackend] = {"builtin": hsd_solve}


def register_backend(name: str, fn: SolverBackend) -> None:
    """Register an external conic solver taking ``(problem, tol_feas, tol_gap, max_iters)``."""
    BACKENDS[name] = fn


def solve(problem: SdpProblem, tol_feas: float = 1e-8, tol_gap: float = 1e-8, max_iters: int = 100,
          backend: str | None = None) -> SdpSolution:
    name = backend or os.environ.get("ATTRAKT_SOLVER", "builtin")
    try:
        fn = BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown SDP backend {name!r}; available: {sorted(BACKENDS)}") from None
    return fn(problem, tol_feas=tol_feas, tol_gap=tol_gap, max_iters=max_iters)


# ---------------------------------------------------------------------------
# independent verification


@dataclass
class ResidualReport:
    primal_residual: float
    dual_residual: float
    gap: float
    min_eig_X: list[float]
    min_eig_S: list[float]
    min_nonneg: float

    @property
    def worst_min_eig(self) -> float:
        return min(self.min_eig_X + [self.min_nonneg], default=np.inf)


def verify_solution(problem: SdpProblem, sol: SdpSolution) -> ResidualReport:
    """Recompute residuals and block eigenvalues with the Jacobi eigensolver."""
    rp = float(np.linalg.norm(problem.apply_A(sol.X) - problem.b))
    Aty = problem.apply_At(sol.y)
    rd = 0.0
    eigX, eigS = [], []
    min_nonneg = np.inf
    for blk, Cj, a, Xj, Sj in zip(problem.blocks, problem.C, Aty, sol.X, sol.S):
        if blk.kind == "f":
            rd += float(np.sum((Cj - a) ** 2))
            continue
        rd += float(np.sum((Cj - a - Sj) ** 2))
        if blk.kind == "s":
            eigX.append(float(jacobi_eigh(Xj)[0][0]))
            eigS.append(float(jacobi_eigh(Sj)[0][0]))
        else:
            min_nonneg = min(min_nonneg, float(Xj.min()), float(Sj.min()))
    pobj = problem.objective(sol.X)
    dobj = float(problem.b @ sol.y)
    gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    return ResidualReport(rp, float(np.sqrt(rd)), gap, eigX, eigS, min_nonneg)


# ---------------------------------------------------------------------------
# sparse text dump


def dump_sparse(problem: SdpProblem) -> str:
    """Text dump: ``m``, block descriptors, ``b``, then ``i block row col value`` lines.

    ``i = 0`` is the objective, ``i >= 1`` the constraints; indices are 1-based
    and only the upper triangle of PSD blocks is written.
    """
    lines = [str(problem.m), " ".join(f"{blk.kind}{blk.size}" for blk in problem.blocks),
             " ".join(repr(float(v)) for v in problem.b)]

    def emit(i, j, data, kind):
        if kind == "s":
            r, c = np.nonzero(np.triu(data))
            for rr, cc in zip(r, c):
                lines.append(f"{i} {j + 1} {rr + 1} {cc + 1} {float(data[rr, cc])!r}")
        else:
            for rr in np.flatnonzero(data):
                lines.append(f"{i} {j + 1} {rr + 1} {rr + 1} {float(data[rr])!r}")

    for j, blk in enumerate(problem.blocks):
        emit(0, j, problem.C[j], blk.kind)
    for i in range(problem.m):
        for j, blk in enumerate(problem.blocks):
            emit(i + 1, j, problem.A[j][i], blk.kind)
    return "\n".join(lines) + "\n"


def load_sparse(text: str) -> SdpProblem:
    raw = [ln for ln in text.splitlines() if ln.strip()]
    m = int(raw[0])
    blocks = [Block(tok[0], int(tok[1:])) for tok in raw[1].split()]
    b = np.array([float(v) for v in raw[2].split()]) if m else np.zeros(0)
    C = [np.zeros((blk.size, blk.size)) if blk.kind == "s" else np.zeros(blk.size) for blk in blocks]
    A = [np.zeros((m, blk.size, blk.size)) if blk.kind == "s" else np.zeros((m, blk.size)) for blk in blocks]
    for ln in raw[3:]:
        i, j, r, c, v = ln.split()
        i, j, r, c, v = int(i), int(j) - 1, int(r) - 1, int(c) - 1, float(v)
        target = C[j] if i == 0 else A[j][i - 1]
        if blocks[j].kind == "s":
            target[r, c] = v
            target[c, r] = v
        else:
            target[r] = v
    return SdpProblem(blocks, C, A, b)
