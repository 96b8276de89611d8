"""Unconstrained stabilizing gains, their PID blocks, the terminal cost and
steady-state targets.

Sign convention used throughout: the stored gain ``K`` acts on the error
``z_err = z_s - z`` and produces the plant input ``u = u_s + K z_err``.  In
the deviation input ``u_dev = u_s - u`` this is ``u_dev = -K z_err`` and the
error closed loop is ``A_m - B_m K``.  LQR gains come out in exactly this form,
and it is the form in which gains are usually tabulated for PID loops.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import numkit
from .config import TOL
from .errors import (LmiInfeasible, NonConvergent, NotInvertible, SingularTarget,
                     SynthesisFailed, TargetInfeasible)
from .lmi import AffineBlock, minimize_max_eig, sym_basis, sym_from_vec
from .sysmodel import AugModel, LtiModel, _pi_pair, augment_pid, check_pi_controllable

CONVENTION = "u = u_s + K (z_s - z); error closed loop A_m - B_m K"


@dataclass(frozen=True)
class PidGains:
    K1: np.ndarray
    K2: np.ndarray
    K3: np.ndarray
    kind: str
    convention: str = CONVENTION

    @property
    def K(self) -> np.ndarray:
        if self.kind == "plain":
            return self.K1
        if self.kind == "PI":
            return np.hstack([self.K1, self.K2])
        return np.hstack([self.K1, self.K2, self.K3])

    @classmethod
    def from_full(cls, K, n: int, q: int, kind: str) -> "PidGains":
        K = np.atleast_2d(K)
        m = K.shape[0]
        K1 = K[:, :n]
        K2 = K[:, n:n + q] if kind != "plain" else np.zeros((m, 0))
        K3 = K[:, n + q:n + 2 * q] if kind == "PID" else np.zeros((m, q if kind == "PI" else 0))
        return cls(K1, K2, K3, kind)


@dataclass(frozen=True)
class SofCertificate:
    """Certificate of the two-stage static-output-feedback design.

    ``lmi1_margin`` is ``-lambda_max(Abar P0^-1 Abar' - P0^-1 - sigma Bbar Bbar')``
    and ``lmi2_margin`` is ``-lambda_max(Acl' P0 Acl - P0)`` with
    ``Acl = Abar + Bbar F Cbar``.
    """

    P0: np.ndarray
    sigma: float
    F_sof: np.ndarray
    lmi1_margin: float
    lmi2_margin: float
    Abar: np.ndarray = field(repr=False, default=None)
    Bbar: np.ndarray = field(repr=False, default=None)
    Cbar: np.ndarray = field(repr=False, default=None)

    def lmi1_lhs(self) -> np.ndarray:
        Y = np.linalg.inv(self.P0)
        return numkit.sym(self.Abar @ Y @ self.Abar.T - Y
                          - self.sigma * self.Bbar @ self.Bbar.T)

    def lmi1_lhs_as_printed(self) -> np.ndarray:
        """The first inequality read literally: ``Abar' P0 Abar - P0 + sigma Bbar Bbar'``."""
        return numkit.sym(self.Abar.T @ self.P0 @ self.Abar - self.P0
                          + self.sigma * self.Bbar @ self.Bbar.T)

    def lmi2_lhs(self) -> np.ndarray:
        Acl = self.Abar + self.Bbar @ self.F_sof @ self.Cbar
        return numkit.sym(Acl.T @ self.P0 @ Acl - self.P0)


@dataclass(frozen=True)
class SteadyTarget:
    z_s: np.ndarray
    u_s: np.ndarray
    v_ref: np.ndarray
    x_s: np.ndarray


def closed_loop(aug: AugModel, K) -> np.ndarray:
    return aug.A_m - aug.B_m @ np.atleast_2d(K)


def lqr(aug: AugModel, Q, R) -> PidGains:
    """LQR gain on whatever augmentation ``aug`` carries."""
    try:
        K, _ = numkit.lqr_gain(aug.A_m, aug.B_m, Q, R)
    except NonConvergent as exc:
        raise SynthesisFailed(f"DARE failed: {exc}") from exc
    if not numkit.is_schur(closed_loop(aug, K)):
        raise SynthesisFailed("LQR closed loop is not certified Schur-stable")
    return PidGains.from_full(K, aug.base.n, aug.base.q, aug.kind)


def synth_pi_gain(aug: AugModel, Q, R) -> PidGains:
    """PI gain from LQR on the integral-augmented error model."""
    if aug.kind != "PI":
        raise ValueError("synth_pi_gain needs a PI augmentation")
    if not check_pi_controllable(aug.base):
        raise SynthesisFailed("PI-augmented system is not controllable")
    return lqr(aug, Q, R)


def sof_output_map(model: LtiModel) -> np.ndarray:
    """``phi = Cbar [x; sum v]`` with ``phi_3 = Cv (A - I) x``."""
    n, q = model.n, model.q
    return np.block([
        [np.eye(n), np.zeros((n, q))],
        [np.zeros((q, n)), np.eye(q)],
        [model.Cv @ (model.A - np.eye(n)), np.zeros((q, q))],
    ])


def _lmi1(Abar, Bbar, sigma_max=100.0, stop_below=-1e-3):
    """Find ``Y > 0, sigma > 0`` with ``Abar Y Abar' - Y - sigma Bbar Bbar' < 0``.

    ``Y`` is normalized by ``Y <= I``; ``sigma`` is kept in ``(0, sigma_max]``.
    """
    d = Abar.shape[0]
    basis = sym_basis(d)
    BB = Bbar @ Bbar.T
    # variables: entries of Y, then sigma
    main = AffineBlock(np.zeros((d, d)),
                       [Abar @ E @ Abar.T - E for E in basis] + [-BB])
    pos = AffineBlock(np.zeros((d, d)), [-E for E in basis] + [np.zeros((d, d))])
    upper = AffineBlock(-np.eye(d), [E for E in basis] + [np.zeros((d, d))])
    sig_lo = AffineBlock(np.zeros((1, 1)), [np.zeros((1, 1))] * len(basis) + [-np.ones((1, 1))])
    sig_hi = AffineBlock(-sigma_max * np.ones((1, 1)),
                         [np.zeros((1, 1))] * len(basis) + [np.ones((1, 1))])
    x0 = np.concatenate([0.5 * np.eye(d)[np.triu_indices(d)], [1.0]])
    res = minimize_max_eig([main, pos, upper, sig_lo, sig_hi], x0, stop_below=stop_below)
    Y = sym_from_vec(res.x[:-1], d)
    return Y, float(res.x[-1]), res.t


def _lmi2(Abar, Bbar, Cbar, P0, f_max=20.0, stop_below=-1e-1):
    """Find ``F`` with ``(Abar + Bbar F Cbar)' P0 (...) - P0 < 0`` via its Schur complement."""
    d = Abar.shape[0]
    m, r = Bbar.shape[1], Cbar.shape[0]
    Y = np.linalg.inv(P0)
    Y = numkit.sym(Y)
    # [[-P0, Acl'], [Acl, -Y]] < 0 is affine in F
    M0 = np.block([[-P0, Abar.T], [Abar, -Y]])
    Ms = []
    box = []
    nvar = m * r
    for i in range(m):
        for j in range(r):
            E = np.zeros((m, r))
            E[i, j] = 1.0
            D = Bbar @ E @ Cbar
            Ms.append(np.block([[np.zeros((d, d)), D.T], [D, np.zeros((d, d))]]))
    main = AffineBlock(M0, Ms)
    for v in range(nvar):
        for s in (1.0, -1.0):
            coeffs = [np.zeros((1, 1)) for _ in range(nvar)]
            coeffs[v] = s * np.ones((1, 1))
            box.append(AffineBlock(-f_max * np.ones((1, 1)), coeffs))
    res = minimize_max_eig([main] + box, np.zeros(nvar), stop_below=stop_below)
    return res.x.reshape(m, r)


def synth_pid_gain(model: LtiModel, *, sigma_max: float = 100.0, f_max: float = 20.0,
                   stop1: float = -1e-3, stop2: float = -1e-1,
                   eps_lmi: float = TOL.lmi) -> tuple[PidGains, SofCertificate]:
    """PID gain through static output feedback on the PI-augmented model.

    Stage one certifies SOF stabilizability and fixes ``P0``; stage two
    solves for ``F`` with ``P0`` frozen; the PID gain is recovered as
    ``(I + F3 Cv B)^-1 [F1 F2 F3]``.

    The barrier iterations stop once the largest eigenvalue drops below
    ``stop1`` / ``stop2``, which keeps the iterate near the central path
    instead of pushing it to an aggressive boundary solution.  ``sigma_max``
    and ``f_max`` box the multiplier and the gain entries.
    """
    n, m, q = model.n, model.m, model.q
    if 2 * q > m:
        raise SynthesisFailed("PID synthesis needs 2q <= m")
    pi = _pi_pair(model)
    Abar, Bbar = pi.A_m, pi.B_m
    Cbar = sof_output_map(model)
    Y, sigma, t1 = _lmi1(Abar, Bbar, sigma_max, stop1)
    if not t1 < -eps_lmi or sigma <= 0 or not numkit.is_pd(Y):
        raise LmiInfeasible(f"first LMI not certified (max eigenvalue {t1:.3e})")
    P0 = numkit.sym(np.linalg.inv(Y))
    F = _lmi2(Abar, Bbar, Cbar, P0, f_max, stop2)
    cert = SofCertificate(P0, sigma, F, 0.0, 0.0, Abar, Bbar, Cbar)
    m1 = -float(np.linalg.eigvalsh(cert.lmi1_lhs())[-1])
    m2 = -float(np.linalg.eigvalsh(cert.lmi2_lhs())[-1])
    cert = SofCertificate(P0, sigma, F, m1, m2, Abar, Bbar, Cbar)
    if m1 <= eps_lmi or m2 <= eps_lmi:
        raise LmiInfeasible(f"LMI margins too small ({m1:.3e}, {m2:.3e})")
    F1, F2, F3 = F[:, :n], F[:, n:n + q], F[:, n + q:]
    T = np.eye(m) + F3 @ model.Cv @ model.B
    if numkit.rank_with_tol(T, 1e-9).rank < m:
        raise NotInvertible("I + F3 Cv B is singular")
    K_sof = np.linalg.solve(T, np.hstack([F1, F2, F3]))
    # u_dev = K_sof z_err closes as A_m + B_m K_sof; stored gain has the opposite sign
    gains = PidGains.from_full(-K_sof, n, q, "PID")
    aug = augment_pid(model)
    if not numkit.is_schur(closed_loop(aug, gains.K), eps=1e-6):
        raise SynthesisFailed("PID-state closed loop is not certified Schur-stable")
    return gains, cert


def stage_weight(Q, R, K, C_m=None) -> np.ndarray:
    Q = np.atleast_2d(Q)
    if C_m is not None:
        Q = C_m.T @ Q @ C_m
    K = np.atleast_2d(K)
    return numkit.sym(Q + K.T @ np.atleast_2d(R) @ K)


def terminal_cost(A_m, B_m, K, Q, R, C_m=None) -> np.ndarray:
    """``P`` solving ``A_K' P A_K - P = -(Q + K' R K)`` for ``A_K = A_m - B_m K``."""
    A_K = np.atleast_2d(A_m) - np.atleast_2d(B_m) @ np.atleast_2d(K)
    return numkit.solve_dlyap(A_K, stage_weight(Q, R, K, C_m))


def _lexicographic_min_norm(M, rhs, n):
    """Solution of ``M s = rhs`` minimizing ``||s[:n]||`` first, then ``||s[n:]||``."""
    s0 = np.linalg.pinv(M) @ rhs
    N = scipy.linalg.null_space(M)
    if N.shape[1] == 0:
        return s0
    Nx, Nu = N[:n], N[n:]
    y = -np.linalg.pinv(Nx) @ s0[:n]
    s1 = s0 + N @ y
    N2 = scipy.linalg.null_space(Nx)
    if N2.shape[1]:
        w = -np.linalg.pinv(Nu @ N2) @ s1[n:]
        s1 = s1 + N @ (N2 @ w)
    return s1


def steady_target(model: LtiModel, v_ref, aug_kind: str = "PI", *, integral=0.0,
                  priority: str = "joint", tol: float = 1e-9) -> SteadyTarget:
    """Equilibrium ``(x_s, u_s)`` with ``Cv x_s = v_ref``, embedded in the augmented state.

    ``priority="joint"`` takes the minimum-norm ``[x_s; u_s]``;
    ``priority="state"`` minimizes ``||x_s||`` first and then ``||u_s||``.
    The integral coordinates of ``z_s`` are set to ``integral``; difference
    coordinates are zero.
    """
    n, m, q = model.n, model.m, model.q
    v_ref = np.atleast_1d(np.asarray(v_ref, dtype=float))
    if v_ref.shape != (q,):
        raise ValueError(f"v_ref must have length {q}")
    M = np.block([[model.A - np.eye(n), model.B], [model.Cv, np.zeros((q, m))]])
    if numkit.rank_with_tol(M).rank < n + q:
        raise SingularTarget("rank [A - I, B; Cv, 0] < n + q")
    rhs = np.concatenate([np.zeros(n), v_ref])
    if priority == "joint":
        s = np.linalg.pinv(M) @ rhs
    elif priority == "state":
        s = _lexicographic_min_norm(M, rhs, n)
    else:
        raise ValueError("priority must be 'joint' or 'state'")
    x_s, u_s = s[:n], s[n:]
    cons = model.constraints
    if cons.rows:
        if model.frame == "absolute":
            slack = cons.slack(x_s, u_s)
        else:
            slack = cons.G.copy()
        if np.any(slack < -tol):
            raise TargetInfeasible(
                f"equilibrium violates constraint rows {np.flatnonzero(slack < -tol).tolist()}")
    kind = aug_kind if aug_kind == "plain" else aug_kind.upper()
    parts = [x_s]
    if kind in ("PI", "PID"):
        parts.append(np.broadcast_to(np.asarray(integral, float), (q,)).copy())
    if kind == "PID":
        parts.append(np.zeros(q))
    return SteadyTarget(np.concatenate(parts), u_s, v_ref, x_s)
