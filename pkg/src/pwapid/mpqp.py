"""Finite-horizon MPC as a parametric quadratic program.

The horizon problem is condensed into

    min_U  1/2 U'HU + z'FU + z'Yz   s.t.  G U <= W + S z,

solved online by a primal active-set method, and solved explicitly over the
feasible parameter set by exploring critical regions: each optimal active
set gives an affine optimizer on a polyhedron, and neighbours are found by
stepping just across every facet.

Two parameterizations of the input sequence are supported.  ``"standard"``
optimizes the deviation inputs directly with stage cost ``z'Qz + u'Ru`` and
terminal cost ``z_N'P z_N``.  ``"prestabilized"`` writes ``u_k = -K z_k + c_k``
and penalizes only the perturbations ``c_k`` with ``R + B'PB``; when ``K`` is
the LQR gain of ``(Q, R)`` both give the same optimizer, and for any other
stabilizing ``K`` the prestabilized form still returns ``-K z`` whenever no
constraint is active.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import numkit
from .config import TOL
from .errors import CycleDetected, DimensionMismatch, Infeasible, NumericalFailure
from .polytope import OPTIMAL, Polyhedron, _linprog, _vertices
from .sysmodel import AugModel

FORMULATIONS = ("standard", "prestabilized")

log = logging.getLogger(__name__)


@dataclass
class MpcSpec:
    """Horizon problem on the deviation coordinates ``(z~, u~)``.

    ``Ez z + Fu u <= G`` holds at every stage ``k = 0..N-1`` and ``z_N`` must
    lie in ``X_f``.  ``K`` is the terminal gain (``u~ = -K z~``) and ``P`` the
    matching terminal weight.
    """

    aug: AugModel
    Q: np.ndarray
    R: np.ndarray
    P: np.ndarray
    K: np.ndarray
    N: int
    Ez: np.ndarray
    Fu: np.ndarray
    G: np.ndarray
    X_f: Polyhedron
    formulation: str = "standard"

    def __post_init__(self):
        d, m = self.aug.dim, self.aug.B_m.shape[1]
        self.Q, self.R, self.P = (np.atleast_2d(np.asarray(M, float)) for M in (self.Q, self.R, self.P))
        self.K = np.atleast_2d(np.asarray(self.K, float))
        self.Ez = np.atleast_2d(np.asarray(self.Ez, float))
        self.Fu = np.atleast_2d(np.asarray(self.Fu, float))
        self.G = np.asarray(self.G, float).reshape(-1)
        if self.Q.shape != (d, d) or self.P.shape != (d, d) or self.R.shape != (m, m):
            raise DimensionMismatch("weights do not match the augmented model")
        if self.K.shape != (m, d):
            raise DimensionMismatch(f"K must be {m}x{d}")
        if self.Ez.shape[1] != d or self.Fu.shape[1] != m or self.Ez.shape[0] != self.G.shape[0]:
            raise DimensionMismatch("constraint rows do not match the augmented model")
        if self.X_f.dim != d:
            raise DimensionMismatch("terminal set has the wrong dimension")
        if self.N < 1:
            raise ValueError("horizon must be at least 1")
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"formulation must be one of {FORMULATIONS}")
        if not numkit.is_pd(self.R):
            raise ValueError("R must be positive definite")

    @property
    def dim(self) -> int:
        return self.aug.dim

    @property
    def m(self) -> int:
        return self.aug.B_m.shape[1]


@dataclass
class QpCondensed:
    """Condensed QP plus the affine map from ``(U, z)`` to the first input.

    Rows of the stacked constraints that do not involve ``U`` are returned
    separately as the parameter domain ``Hd z <= kd``.
    """

    H: np.ndarray
    F: np.ndarray
    Y: np.ndarray
    G: np.ndarray
    W: np.ndarray
    S: np.ndarray
    Hd: np.ndarray
    kd: np.ndarray
    Tu: np.ndarray
    Tz: np.ndarray
    N: int
    m: int

    @property
    def nvar(self) -> int:
        return self.H.shape[0]

    @property
    def dim(self) -> int:
        return self.F.shape[0]

    def value(self, U, z) -> float:
        return float(0.5 * U @ self.H @ U + z @ self.F @ U + z @ self.Y @ z)

    def first_input(self, U, z) -> np.ndarray:
        return self.Tu @ U + self.Tz @ z


def _predictions(A, B, N):
    """``z_k = Phi[k] z + Gam[k] U`` for ``k = 0..N``."""
    d, m = B.shape
    Phi = [np.eye(d)]
    Gam = [np.zeros((d, N * m))]
    for k in range(N):
        Phi.append(A @ Phi[-1])
        g = A @ Gam[-1]
        g[:, k * m:(k + 1) * m] += B
        Gam.append(g)
    return Phi, Gam


def condense(spec: MpcSpec) -> QpCondensed:
    """Eliminate the predicted states and stack all stage constraints."""
    A, B = spec.aug.A_m, spec.aug.B_m
    d, m, N = spec.dim, spec.m, spec.N
    nU = N * m
    sel = [np.zeros((m, nU)) for _ in range(N)]
    for k in range(N):
        sel[k][:, k * m:(k + 1) * m] = np.eye(m)
    if spec.formulation == "standard":
        Phi, Gam = _predictions(A, B, N)
        Psi = [np.zeros((m, d)) for _ in range(N)]
        Lam = sel
        M = sum(Gam[k].T @ spec.Q @ Gam[k] + Lam[k].T @ spec.R @ Lam[k] for k in range(N))
        M = M + Gam[N].T @ spec.P @ Gam[N]
        L = sum(Phi[k].T @ spec.Q @ Gam[k] for k in range(N)) + Phi[N].T @ spec.P @ Gam[N]
        Y = sum(Phi[k].T @ spec.Q @ Phi[k] for k in range(N)) + Phi[N].T @ spec.P @ Phi[N]
    else:
        A_K = A - B @ spec.K
        Phi, Gam = _predictions(A_K, B, N)
        Psi = [-spec.K @ Phi[k] for k in range(N)]
        Lam = [-spec.K @ Gam[k] + sel[k] for k in range(N)]
        Wc = numkit.sym(spec.R + B.T @ spec.P @ B)
        M = np.kron(np.eye(N), Wc)
        L = np.zeros((d, nU))
        Y = spec.P.copy()
    rows_U, rows_z, rows_k = [], [], []
    for k in range(N):
        rows_U.append(spec.Ez @ Gam[k] + spec.Fu @ Lam[k])
        rows_z.append(spec.Ez @ Phi[k] + spec.Fu @ Psi[k])
        rows_k.append(spec.G)
    Hf, kf = spec.X_f.H, spec.X_f.k
    rows_U.append(Hf @ Gam[N])
    rows_z.append(Hf @ Phi[N])
    rows_k.append(kf)
    GU = np.vstack(rows_U)
    Gz = np.vstack(rows_z)
    Gk = np.concatenate(rows_k)
    # G U <= W + S z  with  S = -Gz
    scale = np.linalg.norm(np.hstack([GU, Gz]), axis=1)
    keep = scale > 1e-12
    GU, Gz, Gk, scale = GU[keep], Gz[keep], Gk[keep], scale[keep]
    GU, Gz, Gk = GU / scale[:, None], Gz / scale[:, None], Gk / scale
    param_only = np.linalg.norm(GU, axis=1) <= 1e-10
    dom = Polyhedron(Gz[param_only], Gk[param_only], dim=d, empty=False)
    Gd, Wd, Sd = _dedupe_rows(GU[~param_only], Gk[~param_only], -Gz[~param_only])
    return QpCondensed(H=numkit.sym(2.0 * M), F=2.0 * L, Y=numkit.sym(Y), G=Gd, W=Wd, S=Sd,
                       Hd=dom.H, kd=dom.k, Tu=Lam[0], Tz=Psi[0], N=N, m=m)


def _dedupe_rows(G, W, S):
    if G.shape[0] == 0:
        return G, W, S
    key = np.round(np.hstack([G, S, W[:, None]]), 11)
    _, first = np.unique(key, axis=0, return_index=True)
    first = np.sort(first)
    return G[first], W[first], S[first]


# ---------------------------------------------------------------------------
# online solution


@dataclass(frozen=True)
class QpSolution:
    U: np.ndarray
    active: tuple
    multipliers: np.ndarray
    value: float
    iterations: int


def _feasible_start(qp: QpCondensed, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    U0 = -np.linalg.solve(qp.H, c)
    if qp.G.shape[0] == 0 or np.all(qp.G @ U0 <= b + TOL.kkt):
        return U0
    res = _linprog(np.zeros(qp.nvar), qp.G, b)
    if res.status != OPTIMAL:
        raise Infeasible("QP constraints are infeasible at this parameter")
    return res.point


def _kkt_solve(H, g, GW):
    n, w = H.shape[0], GW.shape[0]
    KKT = np.block([[H, GW.T], [GW, np.zeros((w, w))]])
    rhs = np.concatenate([-g, np.zeros(w)])
    sol = np.linalg.solve(KKT, rhs)
    return sol[:n], sol[n:]


def solve_online(qp: QpCondensed, z, *, max_iter: int = TOL.qp_max_iter,
                 eps_act: float = TOL.act) -> QpSolution:
    """Primal active-set solution of the QP at parameter ``z``.

    The start point comes from an LP phase one.  The working set stays
    linearly independent because a blocking row always has ``G_i p > 0``
    while ``G_W p = 0``.  The reported active set lists the rows with
    multiplier above ``eps_act``.
    """
    z = np.asarray(z, float).reshape(-1)
    if z.shape[0] != qp.dim:
        raise DimensionMismatch(f"parameter must have length {qp.dim}")
    if qp.Hd.shape[0] and np.any(qp.Hd @ z > qp.kd + TOL.mem):
        raise Infeasible("parameter violates constraints that no input can influence")
    b = qp.W + qp.S @ z
    c = qp.F.T @ z
    U = _feasible_start(qp, b, c)
    work: list[int] = []
    seen: set = set()
    lam = np.zeros(0)
    bland = False
    for it in range(1, max_iter + 1):
        g = qp.H @ U + c
        GW = qp.G[work] if work else np.zeros((0, qp.nvar))
        p, lam = _kkt_solve(qp.H, g, GW)
        if len(work) == qp.nvar:
            p = np.zeros(qp.nvar)
        if np.linalg.norm(p) <= 1e-9 * (1.0 + np.linalg.norm(U)):
            if lam.size == 0 or lam.min() >= -eps_act:
                break
            key = tuple(sorted(work))
            if key in seen:
                bland = True
            seen.add(key)
            neg = np.flatnonzero(lam < -eps_act)
            j = int(neg[np.argmin([work[i] for i in neg])]) if bland else int(np.argmin(lam))
            work.pop(j)
            continue
        Gp = qp.G @ p
        slack = b - qp.G @ U
        alpha, block = 1.0, None
        for i in np.flatnonzero(Gp > 1e-14):
            if i in work:
                continue
            a = max(slack[i], 0.0) / Gp[i]
            if a < alpha or (bland and a == alpha and block is not None and i < block):
                alpha, block = a, int(i)
        U = U + alpha * p
        if block is not None:
            work.append(block)
    else:
        raise CycleDetected(f"active-set method did not finish in {max_iter} iterations")
    mult = np.zeros(qp.G.shape[0])
    if work:
        mult[work] = lam
    resid = qp.H @ U + c + qp.G.T @ mult
    if np.linalg.norm(resid) > 1e-6 * (1.0 + np.linalg.norm(c)) or \
            (qp.G.shape[0] and np.any(qp.G @ U > b + 1e-7)):
        raise NumericalFailure("active-set solution fails the KKT check")
    active = tuple(int(i) for i in sorted(work) if mult[i] > eps_act)
    return QpSolution(U, active, mult, qp.value(U, z), it)


# ---------------------------------------------------------------------------
# explicit solution


@dataclass
class CriticalRegion:
    """Polyhedron on which the first input is ``u~0 = F z~ + g``."""

    region: Polyhedron
    F: np.ndarray
    g: np.ndarray
    active: tuple
    degenerate: bool = False
    Uz: np.ndarray | None = field(default=None, repr=False)
    uc: np.ndarray | None = field(default=None, repr=False)

    def contains(self, z, eps: float = TOL.mem) -> bool:
        return self.region.contains(z, eps)


@dataclass
class PwaLaw:
    regions: list
    X0: Polyhedron
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.X0.dim

    def unconstrained_index(self) -> int | None:
        for i, r in enumerate(self.regions):
            if len(r.active) == 0:
                return i
        return None

    def evaluate(self, z, eps: float = TOL.mem):
        idx = locate(self, z, eps)
        if idx is None:
            return None, None
        r = self.regions[idx]
        return idx, r.F @ np.asarray(z, float) + r.g


def _independent_subset(GA: np.ndarray, rows: list) -> tuple[list, bool]:
    chosen: list = []
    for i, r in enumerate(rows):
        trial = chosen + [i]
        if numkit.rank_with_tol(GA[trial], 1e-9).rank == len(trial):
            chosen.append(i)
    return [rows[i] for i in chosen], len(chosen) < len(rows)


def _affine_optimizer(qp: QpCondensed, active: list):
    """Affine optimizer ``U(z)`` and multipliers ``lam(z)`` for a fixed active set."""
    Hinv = np.linalg.inv(qp.H)
    Uz = -Hinv @ qp.F.T
    uc = np.zeros(qp.nvar)
    if not active:
        return Uz, uc, np.zeros((0, qp.dim)), np.zeros(0)
    GA = qp.G[active]
    Mi = np.linalg.inv(GA @ Hinv @ GA.T)
    Lz = -Mi @ (qp.S[active] + GA @ Hinv @ qp.F.T)
    lc = -Mi @ qp.W[active]
    Uz = -Hinv @ (qp.F.T + GA.T @ Lz)
    uc = -Hinv @ (GA.T @ lc)
    return Uz, uc, Lz, lc


def critical_region(qp: QpCondensed, active, domain: Polyhedron) -> CriticalRegion | None:
    """Region of optimality of ``active`` intersected with ``domain``.

    Returns ``None`` when the region is not full-dimensional.
    """
    active, degenerate = _independent_subset(qp.G[list(active)], list(active)) if active else ([], False)
    Uz, uc, Lz, lc = _affine_optimizer(qp, active)
    inactive = [i for i in range(qp.G.shape[0]) if i not in active]
    Gi = qp.G[inactive]
    H = np.vstack([Gi @ Uz - qp.S[inactive], -Lz, domain.H])
    k = np.concatenate([qp.W[inactive] - Gi @ uc, lc, domain.k])
    poly = Polyhedron(H, k, dim=qp.dim)
    if poly.empty:
        return None
    _, radius = poly.chebyshev()
    if radius <= TOL.dim:
        return None
    poly = poly.remove_redundant()
    F = qp.Tu @ Uz + qp.Tz
    g = qp.Tu @ uc
    return CriticalRegion(poly, F, g, tuple(active), degenerate, Uz, uc)


def _facet_center(poly: Polyhedron, i: int):
    """Chebyshev center of facet ``i`` inside the facet's hyperplane."""
    d = poly.dim
    others = [j for j in range(poly.rows) if j != i]
    A = np.hstack([poly.H[others], np.ones((len(others), 1))])
    A = np.vstack([A, np.eye(d + 1)[-1]])
    b = np.concatenate([poly.k[others], [1e3]])
    Aeq = np.hstack([poly.H[i], [0.0]])[None, :]
    c = np.zeros(d + 1)
    c[-1] = -1.0
    res = _linprog(c, A, b, Aeq, np.array([poly.k[i]]))
    if res.status != OPTIMAL:
        return None, -np.inf
    return res.point[:d], float(res.point[-1])


def _facet_centers(poly: Polyhedron) -> list:
    """Center, radius and vertices (``None`` if unknown) of every facet.

    The centroid of the vertices on a facet lies in its relative interior; its
    distance to the other hyperplanes under-estimates the in-facet Chebyshev
    radius, so thin-looking facets fall back to the exact LP.
    """
    d, m = poly.dim, poly.rows
    V = _vertices(poly.H, poly.k) if m > d else None
    out = []
    for i in range(m):
        c, r, Vi = None, -np.inf, None
        if V is not None:
            on = np.abs(V @ poly.H[i] - poly.k[i]) <= 1e-9 * (1.0 + abs(poly.k[i]))
            Vi = V[on]
            if Vi.shape[0] >= d:
                c = Vi.mean(axis=0)
                slack = np.delete(poly.k - poly.H @ c, i)
                r = float(slack.min()) if slack.size else np.inf
        if c is None or r <= TOL.dim:
            c, r = _facet_center(poly, i)
        out.append((c, r, Vi))
    return out


def _safe_steps(P: Polyhedron, i: int, Z, step: float, cap: float = np.inf) -> np.ndarray:
    """Steps along the normal of facet ``i`` from each row of ``Z`` that stay
    short of every other row they approach, so each step crosses facet ``i`` only."""
    Z = np.atleast_2d(Z)
    rate = np.delete(P.H @ P.H[i], i)
    slack = np.delete(P.k[None, :] - Z @ P.H.T, i, axis=1)
    pos = rate > 1e-12
    room = (slack[:, pos] / rate[pos]).min(axis=1, initial=np.inf)
    return np.minimum(min(step, 0.5 * cap), 0.5 * room)


class _RegionIndex:
    """Stacked half-spaces of the regions found so far, for quick membership."""

    def __init__(self, dim: int):
        self.H = np.zeros((0, dim))
        self.k = np.zeros(0)
        self.offsets = np.zeros(1, dtype=np.int64)

    def add(self, poly: Polyhedron) -> None:
        self.H = np.ascontiguousarray(np.vstack([self.H, poly.H]))
        self.k = np.ascontiguousarray(np.concatenate([self.k, poly.k]))
        self.offsets = np.append(self.offsets, self.H.shape[0])

    def contains_many(self, Z, eps: float) -> np.ndarray:
        from ._kernels import _impl

        Z = np.ascontiguousarray(np.atleast_2d(Z), dtype=float)
        return _impl.locate_packed(self.H, self.k, self.offsets, Z, float(eps)) >= 0

    def contains(self, z, eps: float) -> bool:
        return bool(self.contains_many(z, eps)[0])


def _is_domain_row(h, kk, domain: Polyhedron) -> bool:
    if domain.rows == 0:
        return False
    close = np.all(np.abs(domain.H - h) <= 1e-8, axis=1) & (np.abs(domain.k - kk) <= 1e-8)
    return bool(np.any(close))


def qp_feasible(qp: QpCondensed, z) -> bool:
    """LP phase one: whether some input sequence is admissible at ``z``."""
    z = np.asarray(z, float).reshape(-1)
    if qp.Hd.shape[0] and np.any(qp.Hd @ z > qp.kd + TOL.mem):
        return False
    if qp.G.shape[0] == 0:
        return True
    res = _linprog(np.zeros(qp.nvar), qp.G, qp.W + qp.S @ z)
    return res.status == OPTIMAL


def solve_explicit(qp: QpCondensed, box: Polyhedron | None = None, *,
                   step: float = TOL.step, max_regions: int = 20000, seed: int = 0) -> PwaLaw:
    """Partition the feasible parameter set into critical regions.

    Exploration starts at the origin (or the Chebyshev center of ``domain``),
    then crosses every facet of each new region by a small step and solves
    the QP there.  Regions are keyed by their active set.  A facet whose
    crossing leaves the feasible set lies on the boundary of the feasible
    set; those facets, together with the parameter-only rows of the QP and
    the optional exploration ``box``, form the H-representation of ``X0``.
    The box matters for coordinates that no constraint limits, such as a
    difference channel whose effect any input sequence can cancel.
    """
    dom = Polyhedron(qp.Hd, qp.kd, dim=qp.dim)
    if box is not None:
        dom = dom.intersect(box)
    if dom.empty:
        raise Infeasible("parameter domain is empty")
    rng = np.random.default_rng(seed)
    regions: list[CriticalRegion] = []
    keys: set = set()
    boundary_H, boundary_k = [dom.H], [dom.k]
    origin = np.zeros(qp.dim)
    start = origin if (dom.contains(origin) and qp_feasible(qp, origin)) else dom.chebyshev()[0]
    # entries are (point, retries); probes get no random retries
    queue = [(start, 6)]
    index = _RegionIndex(qp.dim)
    seeds: list[np.ndarray] = []
    while queue:
        z, tries = queue.pop(0)
        if index.contains(z, -1e-12):
            continue
        reg = None
        for attempt in range(tries):
            zz = z if attempt == 0 else z + rng.normal(scale=step * 10 ** attempt, size=qp.dim)
            if not dom.contains(zz, 0.0):
                continue
            try:
                sol = solve_online(qp, zz)
            except Infeasible:
                continue
            if sol.active in keys:
                break
            reg = critical_region(qp, sol.active, dom)
            if reg is not None:
                break
        if reg is None or reg.active in keys:
            continue
        keys.add(reg.active)
        regions.append(reg)
        index.add(reg.region)
        log.debug("region %d: active set %s, %d facets", len(regions), reg.active, reg.region.rows)
        if len(regions) > max_regions:
            raise NumericalFailure(f"more than {max_regions} critical regions")
        seeds.append(zz)
        P = reg.region
        for i, (zc, r, Vi) in enumerate(_facet_centers(P)):
            if _is_domain_row(P.H[i], P.k[i], dom):
                continue
            if zc is None or r <= TOL.dim:
                continue
            s0 = float(_safe_steps(P, i, zc, step, r)[0])
            crossed = False
            for s in (s0, 10 * s0, 100 * s0, 1000 * s0):
                zn = zc + s * P.H[i]
                if index.contains(zn, -1e-12):
                    crossed = True  # interior facet shared with a known region
                    break
                if dom.contains(zn, 0.0) and qp_feasible(qp, zn):
                    queue.append((zn, 6))
                    crossed = True
                    break
            if not crossed:
                boundary_H.append(P.H[i:i + 1])
                boundary_k.append(P.k[i:i + 1])
                continue
            # a facet may border several neighbours; probe next to its vertices
            # so small neighbours away from the center are found as well
            if Vi is None:
                continue
            Zp = np.vstack([Vi + f * (zc - Vi) for f in (0.5, 0.02)])
            sp = _safe_steps(P, i, Zp, step)
            Zn = (Zp + sp[:, None] * P.H[i])[sp > 1e-12]
            Zn = Zn[~index.contains_many(Zn, -1e-12) & dom.contains_many(Zn, 0.0)]
            queue.extend((zn, 1) for zn in Zn)  # feasibility is settled when popped
    if not regions:
        raise Infeasible("no feasible parameter found")
    Hb, kb = np.vstack(boundary_H), np.concatenate(boundary_k)
    # every region lies in the feasible set, so a row cutting off one of the
    # points that spawned a region cannot support that set
    sound = np.all(np.array(seeds) @ Hb.T <= kb + TOL.mem, axis=0)
    if not sound.all():
        log.debug("dropping %d boundary rows violated by region points", int((~sound).sum()))
    X0 = Polyhedron(Hb[sound], kb[sound], dim=qp.dim).remove_redundant()
    law = PwaLaw(regions, X0)
    # put the unconstrained region first so locate() favours it on ties
    u = law.unconstrained_index()
    if u not in (None, 0):
        regions.insert(0, regions.pop(u))
    return law


def locate(law: PwaLaw, z, eps: float = TOL.mem) -> int | None:
    """Index of the first region containing ``z`` (``None`` when outside all)."""
    from ._kernels import locate_batch
    idx = locate_batch(law, np.atleast_2d(np.asarray(z, float)), eps)[0]
    return None if idx < 0 else int(idx)


# ---------------------------------------------------------------------------
# serialization

LAW_FORMAT = "pwapid-law"
LAW_VERSION = 1


def _arr(a):
    return np.asarray(a, float).tolist()


def law_to_dict(law: PwaLaw) -> dict:
    return {
        "format": LAW_FORMAT,
        "version": LAW_VERSION,
        "dim": law.dim,
        "X0": law.X0.to_dict(),
        "regions": [{"active": list(r.active), "degenerate": r.degenerate,
                     "H": _arr(r.region.H), "k": _arr(r.region.k),
                     "F": _arr(r.F), "g": _arr(r.g)} for r in law.regions],
        "meta": law.meta,
    }


def law_from_dict(d: dict) -> PwaLaw:
    if d.get("format") != LAW_FORMAT:
        raise ValueError("not a pwapid law file")
    dim = int(d["dim"])
    regions = []
    for r in d["regions"]:
        poly = Polyhedron(np.asarray(r["H"], float).reshape(-1, dim), r["k"],
                          minimal=True, empty=False, dim=dim)
        regions.append(CriticalRegion(poly, np.atleast_2d(np.asarray(r["F"], float)),
                                      np.asarray(r["g"], float), tuple(r["active"]),
                                      bool(r.get("degenerate", False))))
    X0 = Polyhedron(np.asarray(d["X0"]["H"], float).reshape(-1, dim), d["X0"]["k"],
                    minimal=True, empty=False, dim=dim)
    return PwaLaw(regions, X0, d.get("meta", {}))


def save_law(law: PwaLaw, path) -> None:
    # Python floats serialize with repr, the shortest string that round-trips
    # exactly, so a save/load cycle is bit-faithful.
    with open(path, "w") as fh:
        json.dump(law_to_dict(law), fh, indent=1)


def load_law(path) -> PwaLaw:
    with open(path) as fh:
        return law_from_dict(json.load(fh))
