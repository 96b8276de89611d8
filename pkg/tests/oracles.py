"""Independent reference computations used by the tests.

None of these share code with the package: they use different algorithms
(power-type iterations, SVD, plain Riccati recursion, dual projected
gradient, brute-force enumeration) so agreement is meaningful.
"""
from __future__ import annotations

import itertools

import numpy as np


def spectral_radius(A, k: int = 2 ** 24) -> float:
    """Gelfand formula ``||A^k||^(1/k)`` evaluated with repeated squaring."""
    A = np.atleast_2d(np.asarray(A, float))
    M = A.copy()
    log_scale = 0.0
    steps = int(np.log2(k))
    for _ in range(steps):
        nrm = np.linalg.norm(M, 2)
        if nrm == 0.0:
            return 0.0
        M = M / nrm
        log_scale = 2.0 * (log_scale + np.log(nrm))
        M = M @ M
    nrm = np.linalg.norm(M, 2)
    if nrm == 0.0:
        return 0.0
    return float(np.exp((log_scale + np.log(nrm)) / 2 ** steps))


def svd_rank(M, tol: float = 1e-9) -> int:
    s = np.linalg.svd(np.atleast_2d(M), compute_uv=False)
    return int(np.sum(s > tol * max(s.max(initial=0.0), 1e-300)))


def riccati_recursion(A, B, Q, R, iters: int = 20000) -> np.ndarray:
    """Value iteration ``P <- Q + A'PA - A'PB (R + B'PB)^-1 B'PA`` from ``P = Q``."""
    A, B, Q, R = (np.atleast_2d(np.asarray(M, float)) for M in (A, B, Q, R))
    P = Q.copy()
    for _ in range(iters):
        S = R + B.T @ P @ B
        Pn = Q + A.T @ P @ A - A.T @ P @ B @ np.linalg.solve(S, B.T @ P @ A)
        if np.max(np.abs(Pn - P)) < 1e-15 * (1 + np.abs(P).max()):
            return Pn
        P = Pn
    return P


def lyapunov_series(A, W, terms: int = 5000) -> np.ndarray:
    """``sum_k (A')^k W A^k`` for Schur-stable ``A``."""
    A, W = np.atleast_2d(A), np.atleast_2d(W)
    P = np.zeros_like(W, dtype=float)
    T = W.astype(float)
    for _ in range(terms):
        P = P + T
        T = A.T @ T @ A
        if np.abs(T).max() < 1e-18:
            break
    return P


def dual_qp(H, c, G, b, iters: int = 200000, tol: float = 1e-13):
    """``min 1/2 U'HU + c'U  s.t.  G U <= b`` by accelerated projected gradient on the dual."""
    H, G = np.atleast_2d(H), np.atleast_2d(G)
    Hinv = np.linalg.inv(H)
    M = G @ Hinv @ G.T
    L = max(np.linalg.eigvalsh(0.5 * (M + M.T))[-1], 1e-12)
    lam = np.zeros(G.shape[0])
    y, t = lam.copy(), 1.0
    for _ in range(iters):
        grad = G @ (Hinv @ (c + G.T @ y)) + b  # gradient of the negated dual
        lam_new = np.maximum(y - grad / L, 0.0)
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        y = lam_new + (t - 1) / t_new * (lam_new - lam)
        if np.max(np.abs(lam_new - lam)) < tol:
            lam = lam_new
            break
        lam, t = lam_new, t_new
    U = -Hinv @ (c + G.T @ lam)
    return U, lam


def brute_force_qp(H, c, G, b, tol: float = 1e-9):
    """Enumerate active sets and keep the KKT point with the smallest cost."""
    H, G = np.atleast_2d(H), np.atleast_2d(G)
    n, r = H.shape[0], G.shape[0]
    best = None
    for size in range(0, min(n, r) + 1):
        for act in itertools.combinations(range(r), size):
            A = G[list(act)]
            K = np.block([[H, A.T], [A, np.zeros((size, size))]])
            rhs = np.concatenate([-c, b[list(act)]])
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            U, lam = sol[:n], sol[n:]
            if np.any(G @ U > b + tol) or np.any(lam < -tol):
                continue
            val = 0.5 * U @ H @ U + c @ U
            if best is None or val < best[0] - 1e-12:
                best = (val, U, act)
    return best


def lp_membership(H, k, z, eps: float = 0.0) -> bool:
    return bool(np.all(np.asarray(H) @ np.asarray(z) <= np.asarray(k) + eps))


def box_vertices(lo, hi) -> np.ndarray:
    return np.array(list(itertools.product(*zip(lo, hi))), float)
