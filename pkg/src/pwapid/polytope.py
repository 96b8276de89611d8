"""H-representation polyhedra ``{z : H z <= k}`` and the set recursions
built on them: maximal positively invariant sets and N-step sets.

Linear programs go through HiGHS (``scipy.optimize.linprog``); every geometric
decision is phrased as an LP so the same tolerances govern all of them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from itertools import combinations
from math import comb

from scipy.optimize import linprog, nnls

from .config import TOL
from .errors import (DimensionMismatch, EmptyTarget, NotFinitelyDetermined,
                     NumericalFailure, ProjectionBlowup)

OPTIMAL, INFEASIBLE, UNBOUNDED = "Optimal", "Infeasible", "Unbounded"


@dataclass(frozen=True)
class LpResult:
    status: str
    objective: float
    point: np.ndarray | None


try:  # scipy ships the HiGHS pybind module; calling it directly skips linprog's overhead
    from scipy.optimize._highspy import _core as _hcore
except ImportError:  # pragma: no cover - depends on the scipy build
    _hcore = None

_LP_ATTEMPTS = (
    ("highs-ds", {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}),
    ("highs-ipm", {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}),
    ("highs", {}),
    # badly scaled rows (bounds near 1e10) can leave presolve undecided
    ("highs-ds", {"presolve": False}),
)


def _direct_highs(c, A_ub, b_ub, A_eq, b_eq):
    """Solve through the bundled HiGHS binding; ``None`` when it cannot classify."""
    h = _hcore._Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("primal_feasibility_tolerance", 1e-10)
    h.setOptionValue("dual_feasibility_tolerance", 1e-10)
    inf = _hcore.kHighsInf
    A = np.vstack([A_ub, A_eq]) if A_eq is not None else np.asarray(A_ub, float)
    lo = np.concatenate([np.full(len(b_ub), -inf), b_eq]) if A_eq is not None else np.full(len(b_ub), -inf)
    hi = np.concatenate([b_ub, b_eq]) if A_eq is not None else np.asarray(b_ub, float)
    m, n = A.shape
    lp = _hcore.HighsLp()
    lp.num_col_ = n
    lp.num_row_ = m
    lp.col_cost_ = np.asarray(c, float)
    lp.col_lower_ = np.full(n, -inf)
    lp.col_upper_ = np.full(n, inf)
    lp.row_lower_ = lo
    lp.row_upper_ = hi
    lp.a_matrix_.format_ = _hcore.MatrixFormat.kRowwise
    lp.a_matrix_.start_ = np.arange(0, m * n + 1, n)
    lp.a_matrix_.index_ = np.tile(np.arange(n), m)
    lp.a_matrix_.value_ = np.ascontiguousarray(A, float).ravel()
    h.passModel(lp)
    h.run()
    st = h.getModelStatus()
    S = _hcore.HighsModelStatus
    if st == S.kOptimal:
        return LpResult(OPTIMAL, float(h.getInfo().objective_function_value),
                        np.array(h.getSolution().col_value))
    if st == S.kInfeasible:
        return LpResult(INFEASIBLE, np.inf, None)
    if st in (S.kUnbounded, S.kUnboundedOrInfeasible):
        feas = _direct_highs(np.zeros(n), A_ub, b_ub, A_eq, b_eq)
        if feas is None:
            return None
        return LpResult(UNBOUNDED, -np.inf, None) if feas.status == OPTIMAL else feas
    return None


def _linprog(c, A_ub, b_ub, A_eq=None, b_eq=None):
    """Minimize ``c'x`` s.t. ``A_ub x <= b_ub``, ``A_eq x = b_eq`` with free variables.

    HiGHS runs with tight tolerances; when it cannot classify the problem the
    call is retried through ``scipy.optimize.linprog`` with other algorithms.
    """
    d = len(c)
    if d and len(b_ub) == 0 and A_eq is None:
        A_ub, b_ub = np.zeros((1, d)), np.ones(1)
    if _hcore is not None and d:
        res = _direct_highs(c, A_ub, b_ub, A_eq, b_eq)
        if res is not None:
            return res
    message = ""
    for method, options in _LP_ATTEMPTS:
        res = linprog(c, A_ub=A_ub if len(b_ub) else None, b_ub=b_ub if len(b_ub) else None,
                      A_eq=A_eq, b_eq=b_eq, bounds=[(None, None)] * d, method=method,
                      options=options)
        if res.status == 0:
            return LpResult(OPTIMAL, float(res.fun), np.asarray(res.x))
        if res.status == 2:
            return LpResult(INFEASIBLE, np.inf, None)
        if res.status == 3:
            return LpResult(UNBOUNDED, -np.inf, None)
        message = res.message
    raise NumericalFailure(f"LP solver failed: {message}")


def lp_solve(c, poly: "Polyhedron") -> LpResult:
    """Minimize ``c'z`` over ``poly``."""
    c = np.asarray(c, dtype=float).reshape(-1)
    if c.shape[0] != poly.dim:
        raise DimensionMismatch("cost and polyhedron dimensions differ")
    if poly.empty:
        return LpResult(INFEASIBLE, np.inf, None)
    return _linprog(c, poly.H, poly.k)


def _normalize(H, k, tol=1e-12):
    H = np.atleast_2d(np.asarray(H, dtype=float))
    k = np.asarray(k, dtype=float).reshape(-1)
    norms = np.linalg.norm(H, axis=1)
    zero = norms <= tol
    infeasible = bool(np.any(k[zero] < -tol))
    H, k, norms = H[~zero], k[~zero], norms[~zero]
    return H / norms[:, None], k / norms, infeasible


def _dedupe(H, k, decimals=12):
    if H.shape[0] == 0:
        return H, k
    key = np.round(H, decimals)
    _, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inv = inv.reshape(-1)
    kk = np.full(first.shape[0], np.inf)
    np.minimum.at(kk, inv, k)
    order = np.argsort(first)
    return H[first][order], kk[order]


def _ray_facets(H, k, center, n_random: int = 64, seed: int = 0) -> np.ndarray:
    """Rows first hit by rays from an interior point; each such row is a facet.

    A hit is only counted when the nearest row is separated from the runner-up,
    so near-ties never certify a duplicate.
    """
    d = H.shape[1]
    rng = np.random.default_rng(seed)
    dirs = np.vstack([H, np.eye(d), -np.eye(d), rng.standard_normal((n_random, d))])
    slack = k - H @ center
    rate = dirs @ H.T
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(rate > 1e-12, slack / rate, np.inf)
    found = np.zeros(H.shape[0], dtype=bool)
    if H.shape[0] < 2:
        found[np.argmin(t, axis=1)] = np.isfinite(t.min(axis=1)).any()
        return found
    two = np.partition(t, 1, axis=1)[:, :2]
    unique = np.isfinite(two[:, 0]) & (two[:, 1] > two[:, 0] * (1 + 1e-6) + 1e-12)
    found[np.argmin(t[unique], axis=1)] = True
    return found


def _vertices(Hs, ks, max_combos: int = 20000, tol: float = 1e-9):
    """Vertices of ``{Hs z <= ks}``; ``None`` unless the set is certified bounded
    and the enumeration is certified complete.

    Boundedness: for ``mu >= 1`` any recession direction ``y`` (unit norm,
    ``Hs y <= 0``) gives ``||Hs' mu|| >= |sum mu_i Hs_i y| >= ||Hs y|| >=
    sigma_min(Hs)``, so a residual below ``sigma_min`` rules such ``y`` out.
    Completeness: every facet of a bounded polytope carries at least ``d``
    vertices; an ill-conditioned vertex skipped below would break that count.
    """
    m, d = Hs.shape
    if m <= d or comb(m, d) > max_combos:
        return None
    smin = np.linalg.svd(Hs, compute_uv=False)[-1]
    if smin <= 1e-9:
        return None
    nu, resid = nnls(Hs.T, -Hs.T @ np.ones(m))
    if not resid < 0.5 * smin:
        return None
    idx = np.array(list(combinations(range(m), d)))
    A = Hs[idx]
    # rows have unit norm, so |det| <= sigma_min d^((d-1)/2) bounds the conditioning
    ok = np.abs(np.linalg.det(A)) > 1e-10
    if not ok.any():
        return None
    V = np.linalg.solve(A[ok], ks[idx[ok]][..., None])[..., 0]
    scale = tol * (1 + np.abs(ks))
    V = V[np.all(V @ Hs.T <= ks + scale, axis=1)]
    if V.shape[0] == 0:
        return None
    tight = np.abs(V @ Hs.T - ks) <= scale
    if np.any(tight.sum(axis=0) < d):
        return None
    return V


def _first_hits(H, k, center, targets) -> np.ndarray:
    """Indices of the rows first crossed on the segments from ``center`` towards ``targets``."""
    dirs = targets - center
    rate = dirs @ H.T
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(rate > 1e-12, (k - H @ center) / rate, np.inf)
    two = np.partition(t, 1, axis=1)[:, :2]
    unique = np.isfinite(two[:, 0]) & (two[:, 1] > two[:, 0] * (1 + 1e-6) + 1e-12)
    return np.unique(np.argmin(t[unique], axis=1))


class Polyhedron:
    """``{z : H z <= k}`` with unit-norm rows.

    ``empty`` marks a polyhedron known to contain no point; composition keeps
    working on it instead of raising.
    """

    __slots__ = ("H", "k", "minimal", "empty")

    def __init__(self, H, k, minimal: bool = False, empty: bool | None = None,
                 dim: int | None = None):
        H = np.asarray(H, dtype=float)
        if H.size == 0:
            H = np.zeros((0, dim if dim is not None else (H.shape[1] if H.ndim == 2 else 0)))
        Hn, kn, infeasible = _normalize(H, k)
        if Hn.shape[0] == 0:
            Hn = np.zeros((0, H.shape[1]))
        self.H, self.k = _dedupe(Hn, kn)
        self.minimal = minimal
        if empty is None:
            empty = infeasible or (self.H.shape[0] > 0 and self._phase1() is None)
        self.empty = bool(empty or infeasible)

    def _phase1(self):
        res = _linprog(np.zeros(self.dim), self.H, self.k)
        return res.point if res.status == OPTIMAL else None

    # construction helpers -------------------------------------------------
    @classmethod
    def from_box(cls, lo, hi) -> "Polyhedron":
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        d = lo.shape[0]
        H = np.vstack([np.eye(d), -np.eye(d)])
        k = np.concatenate([hi, -lo])
        keep = np.isfinite(k)
        return cls(H[keep], k[keep], dim=d)

    @classmethod
    def universe(cls, d: int) -> "Polyhedron":
        return cls(np.zeros((0, d)), np.zeros(0), minimal=True, empty=False, dim=d)

    @classmethod
    def empty_set(cls, d: int) -> "Polyhedron":
        return cls(np.zeros((0, d)), np.zeros(0), empty=True, dim=d)

    @property
    def dim(self) -> int:
        return self.H.shape[1]

    @property
    def rows(self) -> int:
        return self.H.shape[0]

    def __repr__(self):
        tag = "empty" if self.empty else f"{self.rows} rows"
        return f"Polyhedron(dim={self.dim}, {tag}, minimal={self.minimal})"

    def to_dict(self) -> dict:
        return {"H": self.H.tolist(), "k": self.k.tolist()}

    @classmethod
    def from_dict(cls, d: dict, dim: int | None = None) -> "Polyhedron":
        H = np.asarray(d["H"], dtype=float)
        if H.size == 0:
            H = np.zeros((0, dim or 0))
        return cls(H, d["k"], empty=d.get("empty"))

    # queries ----------------------------------------------------------------
    def contains(self, z, eps: float = TOL.mem) -> bool:
        if self.empty:
            return False
        z = np.asarray(z, float).reshape(-1)
        return bool(np.all(self.H @ z <= self.k + eps))

    def contains_many(self, Z, eps: float = TOL.mem) -> np.ndarray:
        Z = np.atleast_2d(Z)
        if self.empty:
            return np.zeros(Z.shape[0], dtype=bool)
        return np.all(Z @ self.H.T <= self.k + eps, axis=1)

    def support(self, c) -> float:
        """``max c'z`` over the set (``inf`` when unbounded, ``-inf`` when empty)."""
        res = lp_solve(-np.asarray(c, float), self)
        if res.status == OPTIMAL:
            return -res.objective
        return np.inf if res.status == UNBOUNDED else -np.inf

    def chebyshev(self, bound: float = 1e6) -> tuple[np.ndarray | None, float]:
        """Center and radius of the largest inscribed ball (radius capped at ``bound``)."""
        if self.empty:
            return None, -np.inf
        d = self.dim
        c = np.zeros(d + 1)
        c[-1] = -1.0
        A = np.hstack([self.H, np.ones((self.rows, 1))])
        A = np.vstack([A, np.eye(d + 1)[-1]])
        b = np.concatenate([self.k, [bound]])
        res = _linprog(c, A, b)
        if res.status != OPTIMAL:
            return None, -np.inf
        return res.point[:d], float(res.point[-1])

    def is_bounded(self) -> bool:
        return all(np.isfinite(self.support(s * e)) for e in np.eye(self.dim) for s in (1, -1))

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        hi = np.array([self.support(e) for e in np.eye(self.dim)])
        lo = np.array([-self.support(-e) for e in np.eye(self.dim)])
        return lo, hi

    # operations ----------------------------------------------------------------
    def intersect(self, other: "Polyhedron") -> "Polyhedron":
        if other.dim != self.dim:
            raise DimensionMismatch("intersecting polyhedra of different dimension")
        if self.empty or other.empty:
            return Polyhedron.empty_set(self.dim)
        return Polyhedron(np.vstack([self.H, other.H]), np.concatenate([self.k, other.k]),
                          dim=self.dim)

    def preimage(self, M, b=None) -> "Polyhedron":
        """``{w : M w + b in self}``."""
        M = np.atleast_2d(np.asarray(M, float))
        if M.shape[0] != self.dim:
            raise DimensionMismatch("preimage map has the wrong output dimension")
        b = np.zeros(self.dim) if b is None else np.asarray(b, float)
        if self.empty:
            return Polyhedron.empty_set(M.shape[1])
        return Polyhedron(self.H @ M, self.k - self.H @ b, dim=M.shape[1])

    def translate(self, t) -> "Polyhedron":
        """``{z + t : z in self}``."""
        t = np.asarray(t, float)
        return Polyhedron(self.H, self.k + self.H @ t, minimal=self.minimal,
                          empty=self.empty, dim=self.dim)

    def remove_redundant(self, eps: float = TOL.red) -> "Polyhedron":
        """Drop every row whose bound is implied by the remaining rows.

        Rays shot from the Chebyshev center certify facets without an LP.
        When those facets already bound a polytope, its vertices show most
        other rows to be redundant.  Every row left undecided gets one LP
        against the rows still kept.
        """
        if self.empty or self.minimal:
            return self
        H, k = self.H, self.k
        keep = np.ones(self.rows, dtype=bool)
        certain = np.zeros(self.rows, dtype=bool)
        if self.rows > self.dim + 1:
            center, radius = self.chebyshev()
            if center is None:
                return Polyhedron.empty_set(self.dim)
            if radius > 1e3 * eps:
                certain = _ray_facets(H, k, center)
                for _ in range(20):
                    V = _vertices(H[certain], k[certain])
                    if V is None:
                        break
                    viol = V @ H.T - k
                    keep = certain | (viol.max(axis=0) > eps)
                    pending = np.flatnonzero(keep & ~certain)
                    if pending.size == 0:
                        break
                    # a vertex cut off by a pending row lies outside the set, so
                    # the segment towards it crosses some facet first
                    hits = _first_hits(H, k, center, V[np.argmax(viol[:, pending], axis=0)])
                    if certain[hits].all():
                        break
                    certain[hits] = True
        for i in np.flatnonzero(keep & ~certain):
            keep[i] = False
            A = np.vstack([H[keep], H[i]])
            b = np.concatenate([k[keep], [k[i] + 1.0]])
            res = _linprog(-H[i], A, b)
            if res.status == INFEASIBLE:
                return Polyhedron.empty_set(self.dim)
            # optimum capped at k_i + 1 by the relaxed copy of row i
            keep[i] = -res.objective > k[i] + eps
        return Polyhedron(H[keep], k[keep], minimal=True, empty=False, dim=self.dim)

    def subset_of(self, other: "Polyhedron", eps: float = TOL.mem) -> bool:
        return subset(self, other, eps)

    def project(self, keep_dims, max_rows: int = TOL.fm_max_rows) -> "Polyhedron":
        """Fourier-Motzkin projection onto the coordinates ``keep_dims``."""
        keep_dims = list(keep_dims)
        drop = [j for j in range(self.dim) if j not in keep_dims]
        P = self
        for j in sorted(drop, reverse=True):
            P = _fm_eliminate(P, j, max_rows)
        # coordinates now ordered like sorted(keep_dims)
        order = np.argsort(np.argsort(keep_dims))
        return Polyhedron(P.H[:, order], P.k, minimal=P.minimal, empty=P.empty,
                          dim=len(keep_dims))


def _fm_eliminate(P: Polyhedron, j: int, max_rows: int) -> Polyhedron:
    d = P.dim
    if P.empty:
        return Polyhedron.empty_set(d - 1)
    H, k = P.H, P.k
    a = H[:, j]
    pos, neg, zer = a > 1e-12, a < -1e-12, np.abs(a) <= 1e-12
    rows_H = [H[zer]]
    rows_k = [k[zer]]
    Hp, kp, ap = H[pos], k[pos], a[pos]
    Hn, kn, an = H[neg], k[neg], a[neg]
    if len(ap) * len(an) + zer.sum() > max_rows:
        raise ProjectionBlowup(f"Fourier-Motzkin produced more than {max_rows} rows")
    if len(ap) and len(an):
        # (-a_n) * row_p + a_p * row_n cancels coordinate j
        comb_H = (-an)[None, :, None] * Hp[:, None, :] + ap[:, None, None] * Hn[None, :, :]
        comb_k = (-an)[None, :] * kp[:, None] + ap[:, None] * kn[None, :]
        rows_H.append(comb_H.reshape(-1, d))
        rows_k.append(comb_k.reshape(-1))
    Hnew = np.delete(np.vstack(rows_H), j, axis=1)
    knew = np.concatenate(rows_k)
    return Polyhedron(Hnew, knew, dim=d - 1).remove_redundant()


def subset(p: Polyhedron, q: Polyhedron, eps: float = TOL.mem) -> bool:
    """``p ⊆ q`` certified by maximizing every row of ``q`` over ``p``."""
    if p.empty:
        return True
    if q.empty:
        return False
    for h, kk in zip(q.H, q.k):
        if p.support(h) > kk + eps:
            return False
    return True


def contains(poly: Polyhedron, z, eps: float = TOL.mem) -> bool:
    return poly.contains(z, eps)


def set_equal(p: Polyhedron, q: Polyhedron, eps: float = TOL.mem) -> bool:
    return subset(p, q, eps) and subset(q, p, eps)


def admissible_set(Ez, Fu, G, F0=None) -> Polyhedron:
    """``{z : Ez z + Fu (F0 z) <= G}``; without ``F0`` only rows free of inputs."""
    Ez = np.atleast_2d(Ez)
    if F0 is None:
        rows = np.all(np.atleast_2d(Fu) == 0, axis=1)
        return Polyhedron(Ez[rows], np.asarray(G)[rows], dim=Ez.shape[1])
    return Polyhedron(Ez + np.atleast_2d(Fu) @ F0, G, dim=Ez.shape[1])


def mpi_set(A_K, constraints: Polyhedron, max_iter: int = TOL.mpi_max_iter) -> Polyhedron:
    """Maximal positively invariant subset of ``constraints`` under ``z+ = A_K z``.

    Iterates ``Omega <- Omega ∩ {z : A_K z in Omega}`` until the iterate is
    contained in its successor.  Input rows enter through ``constraints`` (see
    :func:`admissible_set`).
    """
    A_K = np.atleast_2d(np.asarray(A_K, float))
    omega = constraints.remove_redundant()
    for _ in range(max_iter):
        nxt = omega.intersect(omega.preimage(A_K)).remove_redundant()
        if nxt.empty:
            return nxt
        if subset(omega, nxt):
            return nxt
        omega = nxt
    raise NotFinitelyDetermined(f"no fixed point after {max_iter} iterations")


def one_step_set(A, B, target: Polyhedron, Ez, Fu, G) -> Polyhedron:
    """``{z : ∃u, Ez z + Fu u <= G, A z + B u in target}``."""
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    d, m = A.shape[0], B.shape[1]
    H = np.vstack([np.hstack([np.atleast_2d(Ez), np.atleast_2d(Fu)]),
                   np.hstack([target.H @ A, target.H @ B])])
    k = np.concatenate([np.asarray(G, float), target.k])
    lifted = Polyhedron(H, k, dim=d + m)
    return lifted.project(range(d))


def nstep_stabilizable(A, B, target: Polyhedron, N: int, Ez, Fu, G) -> Polyhedron:
    """States steered into ``target`` in ``N`` admissible steps.

    Built backwards one stage at a time, each stage projecting out that
    stage's input.  For a control-invariant ``target`` (such as the maximal
    positively invariant set) this equals the set reachable in at most N steps.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    if target.empty:
        raise EmptyTarget("target set is empty")
    S = target
    for _ in range(N):
        S = one_step_set(A, B, S, Ez, Fu, G)
        if S.empty:
            break
    return S
