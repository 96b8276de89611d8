"""Plant model, PI/PID state augmentation, Hautus tests and the state observer."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numkit
from .config import TOL
from .errors import DimensionMismatch, NonConvergent, PlacementFailed, TooManyTrackedOutputs

FRAMES = ("absolute", "deviation")


@dataclass(frozen=True)
class ConstraintSet:
    """Rows of ``E x + F u <= G``."""

    E: np.ndarray
    F: np.ndarray
    G: np.ndarray

    def __post_init__(self):
        E = np.atleast_2d(np.asarray(self.E, dtype=float))
        F = np.atleast_2d(np.asarray(self.F, dtype=float))
        G = np.asarray(self.G, dtype=float).reshape(-1)
        if E.shape[0] != F.shape[0] or E.shape[0] != G.shape[0]:
            raise DimensionMismatch("E, F, G must have the same number of rows")
        zero = np.all(E == 0, axis=1) & np.all(F == 0, axis=1)
        if zero.any():
            raise ValueError(f"constraint rows {np.flatnonzero(zero).tolist()} are all zero")
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "G", G)

    @property
    def rows(self) -> int:
        return self.G.shape[0]

    @classmethod
    def from_boxes(cls, x_lo=None, x_hi=None, u_lo=None, u_hi=None, n=None, m=None):
        """Expand box bounds on ``x`` and ``u`` into stacked ``(E, F, G)`` rows.

        Infinite bounds are skipped.
        """
        n = n if n is not None else len(x_lo if x_lo is not None else x_hi)
        m = m if m is not None else len(u_lo if u_lo is not None else u_hi)
        E, F, G = [], [], []
        for bounds, sign, is_state in ((x_hi, 1.0, True), (x_lo, -1.0, True),
                                       (u_hi, 1.0, False), (u_lo, -1.0, False)):
            if bounds is None:
                continue
            for i, b in enumerate(bounds):
                if not np.isfinite(b):
                    continue
                e, f = np.zeros(n), np.zeros(m)
                (e if is_state else f)[i] = sign
                E.append(e)
                F.append(f)
                G.append(sign * b)
        return cls(np.reshape(E, (-1, n)), np.reshape(F, (-1, m)), np.asarray(G))

    def stack(self, other: "ConstraintSet") -> "ConstraintSet":
        return ConstraintSet(np.vstack([self.E, other.E]), np.vstack([self.F, other.F]),
                             np.concatenate([self.G, other.G]))

    def slack(self, x, u) -> np.ndarray:
        return self.G - self.E @ np.asarray(x, float) - self.F @ np.asarray(u, float)


@dataclass(frozen=True)
class LtiModel:
    """``x+ = A x + B u``, tracked output ``v = Cv x``, measurement ``y = C x``.

    ``frame`` states how the constraint rows are read: ``"absolute"`` rows
    bound the physical ``(x, u)`` and are translated around the operating
    point; ``"deviation"`` rows bound the error variables ``(x_s - x,
    u_s - u)`` directly.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    Cv: np.ndarray
    constraints: ConstraintSet | None = None
    frame: str = "absolute"

    def __post_init__(self):
        A = numkit.as_matrix(self.A, "A")
        B = numkit.as_matrix(self.B, "B")
        C = numkit.as_matrix(self.C, "C")
        Cv = numkit.as_matrix(self.Cv, "Cv")
        n = A.shape[0]
        if A.shape != (n, n) or B.shape[0] != n or C.shape[1] != n or Cv.shape[1] != n:
            raise DimensionMismatch("inconsistent model dimensions")
        if Cv.shape[0] > n:
            raise DimensionMismatch("more tracked outputs than states")
        for M, nm in ((C, "C"), (Cv, "Cv")):
            if numkit.rank_with_tol(M).rank < M.shape[0]:
                raise ValueError(f"{nm} must have full row rank")
        cons = self.constraints
        if cons is None:
            cons = ConstraintSet(np.zeros((0, n)), np.zeros((0, B.shape[1])), np.zeros(0))
        if cons.E.shape[1] != n or cons.F.shape[1] != B.shape[1]:
            raise DimensionMismatch("constraint matrices do not match the model")
        if self.frame not in FRAMES:
            raise ValueError(f"frame must be one of {FRAMES}")
        for name, val in (("A", A), ("B", B), ("C", C), ("Cv", Cv), ("constraints", cons)):
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def q(self) -> int:
        return self.Cv.shape[0]

    def with_tracking(self, Cv) -> "LtiModel":
        return LtiModel(self.A, self.B, self.C, Cv, self.constraints, self.frame)


@dataclass(frozen=True)
class AugModel:
    """Augmented model ``z+ = A_m z + B_m u``.

    ``kind`` is ``"plain"`` (no augmentation), ``"PI"`` or ``"PID"``.
    ``coord_map`` holds ``(label, role)`` per coordinate with role in
    ``{"state", "integral", "difference"}``.  ``C_m`` is the measured output
    ``[C 0 ...]``.
    """

    kind: str
    A_m: np.ndarray
    B_m: np.ndarray
    C_m: np.ndarray
    base: LtiModel
    coord_map: tuple = field(default_factory=tuple)

    @property
    def dim(self) -> int:
        return self.A_m.shape[0]

    def indices(self, role: str) -> np.ndarray:
        return np.array([i for i, (_, r) in enumerate(self.coord_map) if r == role], dtype=int)


def _state_labels(n):
    return tuple((f"x{i + 1}", "state") for i in range(n))


def augment_plain(model: LtiModel) -> AugModel:
    return AugModel("plain", model.A.copy(), model.B.copy(), model.C.copy(), model,
                    _state_labels(model.n))


def _pi_pair(model: LtiModel) -> AugModel:
    n, m, q = model.n, model.m, model.q
    A_m = np.block([[model.A, np.zeros((n, q))], [model.Cv, np.eye(q)]])
    B_m = np.vstack([model.B, np.zeros((q, m))])
    C_m = np.hstack([model.C, np.zeros((model.p, q))])
    cmap = _state_labels(n) + tuple((f"sum_v{i + 1}", "integral") for i in range(q))
    return AugModel("PI", A_m, B_m, C_m, model, cmap)


def augment_pi(model: LtiModel) -> AugModel:
    if model.q > model.m:
        raise TooManyTrackedOutputs(
            f"PI augmentation needs q <= m (q={model.q}, m={model.m})")
    return _pi_pair(model)


def augment_pid(model: LtiModel) -> AugModel:
    n, m, q = model.n, model.m, model.q
    if 2 * q > m:
        raise TooManyTrackedOutputs(f"PID augmentation needs 2q <= m (q={q}, m={m})")
    A, Cv = model.A, model.Cv
    # middle diagonal block is I_q (the printed I_n only fits when q == n)
    A_m = np.block([
        [A, np.zeros((n, q)), np.zeros((n, q))],
        [Cv, np.eye(q), np.zeros((q, q))],
        [Cv @ (A - np.eye(n)), np.zeros((q, q)), np.zeros((q, q))],
    ])
    B_m = np.vstack([model.B, np.zeros((q, m)), Cv @ model.B])
    C_m = np.hstack([model.C, np.zeros((model.p, 2 * q))])
    cmap = (_state_labels(n) + tuple((f"sum_v{i + 1}", "integral") for i in range(q))
            + tuple((f"delta_v{i + 1}", "difference") for i in range(q)))
    return AugModel("PID", A_m, B_m, C_m, model, cmap)


def augment(model: LtiModel, kind: str) -> AugModel:
    kind = kind.upper() if kind.lower() in ("pi", "pid") else kind.lower()
    return {"plain": augment_plain, "PI": augment_pi, "PID": augment_pid}[kind](model)


def _rank_complex(M: np.ndarray, tol: float) -> int:
    if np.iscomplexobj(M) and np.abs(M.imag).max(initial=0.0) > 0:
        re, im = M.real, M.imag
        return numkit.rank_with_tol(np.block([[re, -im], [im, re]]), tol).rank // 2
    return numkit.rank_with_tol(np.real(M), tol).rank


def _candidates(A: np.ndarray) -> np.ndarray:
    lam = np.linalg.eigvals(A) if A.size else np.zeros(0)
    return np.concatenate([lam, [1.0]])


def hautus_ctrb_defect(A, B, lam, tol=TOL.rank) -> int:
    n = A.shape[0]
    return n - _rank_complex(np.hstack([A - lam * np.eye(n), B]).astype(complex), tol)


def hautus_obsv_defect(A, C, lam, tol=TOL.rank) -> int:
    n = A.shape[0]
    return n - _rank_complex(np.vstack([A - lam * np.eye(n), C]).astype(complex), tol)


def is_controllable(A, B, tol=TOL.rank) -> bool:
    return all(hautus_ctrb_defect(A, B, lam, tol) == 0 for lam in _candidates(A))


def is_observable(A, C, tol=TOL.rank) -> bool:
    return all(hautus_obsv_defect(A, C, lam, tol) == 0 for lam in _candidates(A))


def is_stabilizable(A, B, tol=TOL.rank) -> bool:
    return all(hautus_ctrb_defect(A, B, lam, tol) == 0
               for lam in _candidates(A) if abs(lam) >= 1 - 1e-9)


def check_pi_controllable(model: LtiModel, tol=TOL.rank) -> bool:
    """(A, B) controllable and ``rank [A - I, B; Cv, 0] = n + q``."""
    if not is_controllable(model.A, model.B, tol):
        return False
    n, q = model.n, model.q
    M = np.block([[model.A - np.eye(n), model.B], [model.Cv, np.zeros((q, model.m))]])
    return numkit.rank_with_tol(M, tol).rank == n + q


def unobservable_modes(aug: AugModel, tol=TOL.rank) -> list[tuple[complex, int]]:
    """Eigen-candidates of ``A_m`` with their Hautus rank defect w.r.t. ``C_m``."""
    out = []
    seen = []
    for lam in _candidates(aug.A_m):
        if any(abs(lam - s) < 1e-9 for s in seen):
            continue
        seen.append(lam)
        d = hautus_obsv_defect(aug.A_m, aug.C_m, lam, tol)
        if d:
            out.append((complex(lam), d))
    return out


def check_detectable(model: LtiModel, tol=TOL.rank) -> bool:
    """Detectability of the PI-augmented pair, allowing the q integrator modes at 1."""
    aug = _pi_pair(model)
    for lam, defect in unobservable_modes(aug, tol):
        if abs(lam) < 1 - 1e-9:
            continue
        if abs(lam - 1) < 1e-9 and defect <= model.q:
            continue
        return False
    return True


class Observer:
    """Predictor-form state observer with integral and difference channels.

    ``x_hat(k) = A x_hat(k-1) + B u(k-1) + L_x (C x_hat(k-1) - y(k-1))``; the
    integral channel accumulates ``Cv`` times the corrected estimate minus the
    reference, and the difference channel is ``Cv (x_hat(k) - x_hat(k-1))``.
    """

    def __init__(self, model: LtiModel, L_x, x0=None, integral0=None, v_ref=None):
        self.model = model
        self.L_x = numkit.as_matrix(L_x, "L_x")
        if self.L_x.shape != (model.n, model.p):
            raise DimensionMismatch("L_x must be n x p")
        if not numkit.is_schur(model.A + self.L_x @ model.C):
            raise PlacementFailed("A + L_x C is not Schur-stable")
        self.state = np.zeros(model.n) if x0 is None else np.asarray(x0, float).copy()
        self.integral = np.zeros(model.q) if integral0 is None else np.asarray(integral0, float).copy()
        self.difference = np.zeros(model.q)
        self.v_ref = np.zeros(model.q) if v_ref is None else np.asarray(v_ref, float)

    def update(self, u_prev, y_prev) -> None:
        mdl = self.model
        innov = mdl.C @ self.state - np.asarray(y_prev, float)
        corr = self.L_x @ innov
        x_new = mdl.A @ self.state + mdl.B @ np.asarray(u_prev, float) + corr
        self.integral = self.integral + mdl.Cv @ self.state - self.v_ref + mdl.Cv @ corr
        self.difference = mdl.Cv @ (x_new - self.state)
        self.state = x_new

    def z_hat(self, kind: str) -> np.ndarray:
        if kind == "plain":
            return self.state.copy()
        if kind == "PI":
            return np.concatenate([self.state, self.integral])
        return np.concatenate([self.state, self.integral, self.difference])


def design_observer(model: LtiModel, radius: float = 0.5, **kw) -> Observer:
    """Observer gain from the dual Riccati equation of the radius-scaled pair."""
    if not 0 < radius < 1:
        raise ValueError("radius must lie in (0, 1)")
    A, C = model.A, model.C
    if not is_observable(A, C):
        raise PlacementFailed("(A, C) is not observable")
    As = A / radius
    try:
        P = numkit.solve_dare(As.T, C.T, np.eye(model.n), np.eye(model.p))
    except NonConvergent as exc:
        raise PlacementFailed(str(exc)) from exc
    Lk = As @ P @ C.T @ np.linalg.inv(C @ P @ C.T + np.eye(model.p))
    L_x = -radius * Lk
    if not numkit.is_schur((A + L_x @ C) / radius):
        raise PlacementFailed("observer poles not certified inside the requested radius")
    return Observer(model, L_x, **kw)
