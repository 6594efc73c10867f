"""Small dense linear algebra helpers.

``jacobi_eigh`` is deliberately self-contained (cyclic Jacobi rotations) so that
certificate checks do not share a code path with the LAPACK routines used
inside the SDP solver.
"""

from __future__ import annotations

import numpy as np

from .sysparse import PolySystem


class NotHurwitzError(ValueError):
    """The Lyapunov equation A'P + PA = -I has no positive definite solution."""


def cholesky(M) -> np.ndarray | None:
    """Lower Cholesky factor of a symmetric matrix, or ``None`` if it is not positive definite."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("cholesky expects a square matrix")
    if not np.allclose(M, M.T, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(M).max(initial=0.0))):
        raise ValueError("cholesky expects a symmetric matrix")
    try:
        return np.linalg.cholesky(0.5 * (M + M.T))
    except np.linalg.LinAlgError:
        return None


def is_positive_definite(M) -> bool:
    return cholesky(M) is not None


def solve_lyapunov(A, Q=None) -> np.ndarray:
    """Solve A'P + PA = -Q (default Q = I) by Kronecker vectorization.

    Raises :class:`NotHurwitzError` when the vectorized system is singular or
    the solution is not positive definite.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("A must be square")
    Q = np.eye(n) if Q is None else np.asarray(Q, dtype=float)
    I = np.eye(n)
    # vec(A'P) = (I kron A') vec(P), vec(PA) = (A' kron I) vec(P)  (column-major vec)
    K = np.kron(I, A.T) + np.kron(A.T, I)
    rhs = -Q.reshape(-1, order="F")
    if np.linalg.cond(K) > 1e12:
        raise NotHurwitzError("Lyapunov equation is singular: linearization has eigenvalues summing to zero")
    P = np.linalg.solve(K, rhs).reshape(n, n, order="F")
    P = 0.5 * (P + P.T)
    if cholesky(P) is None:
        raise NotHurwitzError("Lyapunov solution is not positive definite: linearization is not Hurwitz")
    return P


def linearize(sys: PolySystem) -> np.ndarray:
    """Jacobian of f at the origin: A[i][j] = coefficient of x_j in f_i."""
    n = sys.nvars
    A = np.zeros((n, n))
    for i, fi in enumerate(sys.f):
        for j in range(n):
            e = [0] * n
            e[j] = 1
            A[i, j] = fi.coeff(tuple(e))
    return A


def jacobi_eigh(M, tol: float = 1e-12, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues sorted ascending.
    Iterates until the off-diagonal Frobenius norm is below ``tol`` times the
    matrix norm.
    """
    A = np.array(M, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("jacobi_eigh expects a square matrix")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    scale = max(np.linalg.norm(A), 1e-300)
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    w = np.diag(A).copy()
    order = np.argsort(w)
    return w[order], V[:, order]


def min_eigenvalue(M) -> float:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return np.inf
    return float(jacobi_eigh(M)[0][0])
