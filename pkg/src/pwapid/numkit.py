"""Dense linear-algebra kernel: Riccati and Lyapunov solvers, Schur-stability
certificates and a pivoted rank test.

Everything here targets the small dense matrices of the controller pipeline
(dimension up to about a dozen), so clarity beats asymptotic cost.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import TOL
from .errors import DimensionMismatch, NonConvergent, SingularSystem, UnstableMatrix


@dataclass(frozen=True)
class RankReport:
    rank: int
    tolerance: float
    singular_gap: float


def as_matrix(M, name="matrix") -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2:
        raise DimensionMismatch(f"{name} must be two-dimensional")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def min_eig_sym(M: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(sym(M))[0])


def is_psd(M: np.ndarray, tol: float = TOL.pd) -> bool:
    return min_eig_sym(M) >= -tol * max(1.0, np.abs(M).max(initial=0.0))


def is_pd(M: np.ndarray, tol: float = TOL.pd) -> bool:
    return min_eig_sym(M) > tol


def dare_residual(A, B, Q, R, P) -> np.ndarray:
    BtPA = B.T @ P @ A
    return Q + A.T @ P @ A - BtPA.T @ np.linalg.solve(R + B.T @ P @ B, BtPA) - P


def _check_dare_shapes(A, B, Q, R):
    n, m = B.shape
    if A.shape != (n, n) or Q.shape != (n, n) or R.shape != (m, m):
        raise DimensionMismatch(
            f"incompatible DARE shapes A{A.shape} B{B.shape} Q{Q.shape} R{R.shape}")


def _dare_doubling(A, B, Q, R, tol, max_iter):
    n = A.shape[0]
    Ak = A.copy()
    Gk = B @ np.linalg.solve(R, B.T)
    Hk = Q.copy()
    eye = np.eye(n)
    for _ in range(max_iter):
        W = eye + Gk @ Hk
        WA = np.linalg.solve(W, Ak)
        WG = np.linalg.solve(W, Gk)
        H_next = sym(Hk + Ak.T @ Hk @ WA)
        Gk = sym(Gk + Ak @ WG @ Ak.T)
        Ak = Ak @ WA
        delta = np.linalg.norm(H_next - Hk)
        Hk = H_next
        if not np.all(np.isfinite(Hk)):
            return None
        if delta <= tol * (1.0 + np.linalg.norm(Hk)):
            return Hk
    return None


def _dare_fixed_point(A, B, Q, R, tol, max_iter):
    P = Q.copy()
    for _ in range(max_iter):
        BtPA = B.T @ P @ A
        P_next = sym(Q + A.T @ P @ A - BtPA.T @ np.linalg.solve(R + B.T @ P @ B, BtPA))
        delta = np.linalg.norm(P_next - P)
        P = P_next
        if not np.all(np.isfinite(P)):
            return None
        if delta <= 1e-3 * tol * (1.0 + np.linalg.norm(P)):
            return P
    return None


def solve_dare(A, B, Q, R, *, tol: float = TOL.dare_residual,
               max_iter: int = TOL.dare_max_iter) -> np.ndarray:
    """Stabilizing solution of ``P = Q + A'PA - A'PB (R + B'PB)^-1 B'PA``.

    Structure-preserving doubling is tried first; the plain Riccati recursion
    is the fallback.  The returned ``P`` is certified by its residual.
    """
    A, B, Q, R = (as_matrix(M, nm) for M, nm in ((A, "A"), (B, "B"), (Q, "Q"), (R, "R")))
    _check_dare_shapes(A, B, Q, R)
    Q, R = sym(Q), sym(R)
    for P in (_dare_doubling(A, B, Q, R, 1e-13, max_iter),
              _dare_fixed_point(A, B, Q, R, tol, TOL.riccati_max_iter)):
        if P is None:
            continue
        res = np.linalg.norm(dare_residual(A, B, Q, R, P))
        if res <= tol * (1.0 + np.linalg.norm(P)) and is_psd(P):
            return P
    raise NonConvergent("DARE iteration did not reach the residual tolerance")


def lqr_gain(A, B, Q, R) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(K, P)`` with ``u = -K x`` the infinite-horizon LQR law."""
    P = solve_dare(A, B, Q, R)
    A, B, R = as_matrix(A), as_matrix(B), as_matrix(R)
    K = np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
    return K, P


def _dlyap_raw(A: np.ndarray, W: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    # vec(A' P A) = (A' kron A') vec(P) for column-major vec
    M = np.eye(n * n) - np.kron(A.T, A.T)
    rep = rank_with_tol(M, 1e-12)
    if rep.rank < n * n:
        raise SingularSystem("Lyapunov operator is numerically singular")
    p = np.linalg.solve(M, W.reshape(-1, order="F"))
    return sym(p.reshape((n, n), order="F"))


def solve_dlyap(A, W) -> np.ndarray:
    """Unique symmetric ``P`` with ``A'PA - P = -W`` for Schur-stable ``A``."""
    A, W = as_matrix(A, "A"), as_matrix(W, "W")
    n = A.shape[0]
    if A.shape != (n, n) or W.shape != (n, n):
        raise DimensionMismatch("solve_dlyap needs square A and W of equal size")
    if not is_schur(A):
        raise UnstableMatrix("A is not certified Schur-stable")
    return _dlyap_raw(A, sym(W))


def is_schur(A, eps: float = TOL.stab) -> bool:
    """Certify spectral radius < 1 - eps through Lyapunov solvability."""
    A = as_matrix(A, "A")
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch("is_schur needs a square matrix")
    As = A / (1.0 - eps)
    try:
        P = _dlyap_raw(As, np.eye(A.shape[0]))
    except (SingularSystem, np.linalg.LinAlgError):
        return False
    if not np.all(np.isfinite(P)):
        return False
    # A'PA - P = -I with P > 0 is the Lyapunov certificate; check the
    # residual so an ill-conditioned solve cannot pass as a certificate.
    res = np.linalg.norm(As.T @ P @ As - P + np.eye(A.shape[0]))
    return bool(is_pd(P) and res <= 1e-6 * (1.0 + np.linalg.norm(P)))


def rank_with_tol(M, tol: float = TOL.rank) -> RankReport:
    """Rank by Gaussian elimination with partial pivoting.

    A pivot is rejected when it falls below ``tol`` times the largest entry of
    ``M``.  ``singular_gap`` is the smallest accepted pivot divided by the
    largest rejected one (``inf`` when nothing was rejected).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    U = np.array(np.atleast_2d(M), dtype=float)
    rows, cols = U.shape
    scale = np.abs(U).max(initial=0.0)
    if scale == 0.0:
        return RankReport(0, tol, float("nan"))
    thresh = tol * scale
    rank = 0
    accepted, rejected = [], []
    for c in range(cols):
        if rank == rows:
            break
        col = np.abs(U[rank:, c])
        p = rank + int(np.argmax(col))
        piv = abs(U[p, c])
        if piv <= thresh:
            rejected.append(piv)
            continue
        accepted.append(piv)
        if p != rank:
            U[[rank, p]] = U[[p, rank]]
        f = U[rank + 1:, c] / U[rank, c]
        U[rank + 1:, c:] -= np.outer(f, U[rank, c:])
        rank += 1
    if rank < rows:
        tail = np.abs(U[rank:, :]).max(initial=0.0)
        rejected.append(tail)
    big_rej = max(rejected, default=0.0)
    gap = (min(accepted) / big_rej) if (accepted and big_rej > 0) else float("inf")
    return RankReport(rank, tol, gap)
