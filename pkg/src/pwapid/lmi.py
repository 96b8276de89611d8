"""Small dense LMI solver.

Solves ``min t  s.t.  M_b(x) <= t I`` for a list of affine symmetric matrix
functions ``M_b(x) = M_b0 + sum_i x_i M_bi`` with a log-det barrier
path-following Newton method.  The problem is feasible in the strict LMI
sense iff the optimal ``t`` is negative.  Sizes here are tiny (tens of
variables, blocks of order ten), so dense Hessians are fine.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class AffineBlock:
    M0: np.ndarray
    Ms: list

    def __call__(self, x) -> np.ndarray:
        out = self.M0.copy()
        for xi, Mi in zip(x, self.Ms):
            out = out + xi * Mi
        return 0.5 * (out + out.T)


@dataclass(frozen=True)
class LmiResult:
    x: np.ndarray
    t: float
    iterations: int


def max_eig(blocks, x) -> float:
    return max(float(np.linalg.eigvalsh(b(x))[-1]) for b in blocks)


def _barrier(blocks, x, t, mu):
    val = mu * t
    for b in blocks:
        S = t * np.eye(b.M0.shape[0]) - b(x)
        try:
            L = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            return np.inf
        val -= 2.0 * np.log(np.diag(L)).sum()
    return val


def _newton_direction(blocks, x, t, mu):
    p = len(x)
    g = np.zeros(p + 1)
    Hs = np.zeros((p + 1, p + 1))
    g[-1] = mu
    for b in blocks:
        d = b.M0.shape[0]
        S = t * np.eye(d) - b(x)
        Sinv = np.linalg.inv(S)
        # dS/dx_i = -M_i, dS/dt = I
        W = [-Sinv @ Mi for Mi in b.Ms] + [Sinv]
        g -= np.array([np.trace(Wj) for Wj in W])
        Wt = np.array([Wj.T.reshape(-1) for Wj in W])
        Wf = np.array([Wj.reshape(-1) for Wj in W])
        Hs += Wf @ Wt.T
    Hs = 0.5 * (Hs + Hs.T) + 1e-14 * np.eye(p + 1)
    step = -np.linalg.solve(Hs, g)
    return step, g


def minimize_max_eig(blocks, x0, *, gap: float = 1e-9, max_newton: int = 2000,
                     stop_below: float | None = None) -> LmiResult:
    """Minimize the largest eigenvalue over all blocks.

    ``stop_below`` ends the path-following early once a point with maximum
    eigenvalue below that value is found.
    """
    x = np.asarray(x0, dtype=float).copy()
    t = max_eig(blocks, x) + 1.0
    total = sum(b.M0.shape[0] for b in blocks)
    mu = 1.0
    it = 0
    best_x, best_t = x.copy(), max_eig(blocks, x)
    while it < max_newton:
        # centering
        for _ in range(100):
            it += 1
            step, g = _newton_direction(blocks, x, t, mu)
            dec = -float(g @ step)
            if dec < 1e-10:
                break
            f0 = _barrier(blocks, x, t, mu)
            s = 1.0
            while s > 1e-12:
                xn, tn = x + s * step[:-1], t + s * step[-1]
                fn = _barrier(blocks, xn, tn, mu)
                if np.isfinite(fn) and fn <= f0 - 0.25 * s * dec:
                    break
                s *= 0.5
            else:
                break
            x, t = xn, tn
        cur = max_eig(blocks, x)
        if cur < best_t:
            best_x, best_t = x.copy(), cur
        if stop_below is not None and best_t < stop_below:
            break
        if total / mu < gap:
            break
        mu *= 8.0
    return LmiResult(best_x, best_t, it)


def sym_basis(d: int) -> list:
    """Basis of symmetric ``d x d`` matrices (``E_ii`` and ``E_ij + E_ji``)."""
    out = []
    for i in range(d):
        for j in range(i, d):
            E = np.zeros((d, d))
            E[i, j] = E[j, i] = 1.0
            out.append(E)
    return out


def sym_from_vec(v, d: int) -> np.ndarray:
    M = np.zeros((d, d))
    for val, E in zip(v, sym_basis(d)):
        M += val * E
    return M
