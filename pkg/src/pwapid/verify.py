"""Randomized checks of a synthesized law against independent oracles.

Each suite returns a :class:`SuiteResult`; :func:`run_suites` runs them all
with one seeded generator so a run is reproducible.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import numkit
from ._kernels import BACKEND, locate_batch
from .config import TOL
from .errors import Infeasible, PwaPidError
from .gainsynth import closed_loop
from .mpqp import PwaLaw, QpCondensed, condense, qp_feasible, solve_online
from .pipeline import SCHEMES, is_lqr_consistent, spec_from_meta
from .polytope import Polyhedron, admissible_set, subset
from .sysmodel import is_stabilizable

SUITES = ("oracle", "partition", "continuity", "invariance", "decrease", "value", "properties")


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str
    stats: dict = field(default_factory=dict)
    seconds: float = 0.0


@dataclass
class Context:
    """Law plus everything rebuilt from its metadata."""

    law: PwaLaw
    spec: object
    qp: QpCondensed
    model: object
    target: object
    rng: np.random.Generator
    samples: int
    _feasible: np.ndarray | None = None
    _box: tuple | None = None


def make_context(law: PwaLaw, samples: int = 10000, seed: int = 0) -> Context:
    if not law.meta:
        raise PwaPidError("law file carries no synthesis metadata")
    model, spec, target = spec_from_meta(law.meta)
    return Context(law, spec, condense(spec), model, target, np.random.default_rng(seed), samples)


def _box(poly: Polyhedron):
    lo, hi = poly.bounding_box()
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise PwaPidError("set is unbounded; cannot sample it uniformly")
    return lo, hi


def sample_in(poly: Polyhedron, count: int, rng, box=None, max_draws: int = 200) -> np.ndarray:
    """Uniform points of ``poly`` by rejection from its bounding box."""
    lo, hi = box if box is not None else _box(poly)
    out, total = [], 0
    for _ in range(max_draws):
        Z = rng.uniform(lo, hi, size=(max(4 * count, 256), lo.size))
        Z = Z[poly.contains_many(Z, 0.0)]
        out.append(Z)
        total += len(Z)
        if total >= count:
            break
    return np.vstack(out)[:count]


def _law_input(law: PwaLaw, idx: np.ndarray, Z: np.ndarray) -> np.ndarray:
    U = np.full((len(Z), law.regions[0].F.shape[0]), np.nan)
    for r in np.unique(idx[idx >= 0]):
        sel = idx == r
        reg = law.regions[r]
        U[sel] = Z[sel] @ reg.F.T + reg.g
    return U


def _classify_draws(ctx: Context, count: int):
    """Uniform draws over the box of ``X0``, each classified by the LP oracle."""
    if ctx._box is None:
        ctx._box = _box(ctx.law.X0)
    lo, hi = ctx._box
    Z = ctx.rng.uniform(lo, hi, size=(count, lo.size))
    return Z, np.array([qp_feasible(ctx.qp, z) for z in Z])


def _feasible_samples(ctx: Context, count: int) -> np.ndarray:
    """Uniform points of ``X0``; the online solver later confirms each is feasible."""
    if ctx._box is None:
        ctx._box = _box(ctx.law.X0)
    return sample_in(ctx.law.X0, count, ctx.rng, ctx._box)


def suite_oracle(ctx: Context, tol: float = 1e-6, draws: int | None = None) -> SuiteResult:
    """Explicit input and feasibility agree with the online QP.

    Classification is compared on ``draws`` box points (default twice the
    sample count) labelled by the LP oracle.  The input comparison runs on
    uniform samples of ``X0``; a sample the online solver rejects as
    infeasible counts as a classification mismatch too.
    """
    B, oracle = _classify_draws(ctx, draws or 2 * ctx.samples)
    mismatch = int(np.sum((locate_batch(ctx.law, B, TOL.mem) >= 0) != oracle))
    Z = _feasible_samples(ctx, ctx.samples)
    ctx._feasible = Z
    idx = locate_batch(ctx.law, Z, TOL.mem)
    U_ex = _law_input(ctx.law, idx, Z)
    err, rejected = 0.0, 0
    for z, u in zip(Z, U_ex):
        try:
            sol = solve_online(ctx.qp, z)
        except Infeasible:
            rejected += 1
            continue
        err = max(err, float(np.max(np.abs(ctx.qp.first_input(sol.U, z) - u))))
    mismatch += rejected
    ok = mismatch == 0 and err <= tol and len(Z) > 0
    return SuiteResult("oracle", ok,
                       f"{len(B)} box draws ({int(oracle.sum())} feasible) and {len(Z)} points "
                       f"of X0: classification mismatches {mismatch}; "
                       f"max |u_explicit - u_online| = {err:.2e}",
                       {"feasible": len(Z), "draws": len(B), "mismatch": mismatch,
                        "rejected": rejected, "max_err": err})


def _feasible(ctx: Context) -> np.ndarray:
    if ctx._feasible is None:
        ctx._feasible = _feasible_samples(ctx, ctx.samples)
    return ctx._feasible


def suite_partition(ctx: Context, chunk: int = 256) -> SuiteResult:
    """Feasible points are covered; region interiors do not overlap."""
    Z = _feasible(ctx)
    from ._kernels import _packed

    H, k, offsets = _packed(ctx.law)
    uncovered = int(np.sum(locate_batch(ctx.law, Z, TOL.mem) < 0))
    overlap = 0
    starts = offsets[:-1]
    for a in range(0, len(Z), chunk):
        viol = Z[a:a + chunk] @ H.T - k
        worst = np.maximum.reduceat(viol, starts, axis=1)
        overlap += int(np.sum(np.sum(worst < -1e-7, axis=1) > 1))
    origin_ok = ctx.law.X0.contains(np.zeros(ctx.law.dim))
    ok = uncovered == 0 and overlap == 0 and origin_ok
    return SuiteResult("partition", ok,
                       f"{uncovered} uncovered and {overlap} doubly-covered of {len(Z)} points; "
                       f"origin in X0: {origin_ok}",
                       {"uncovered": uncovered, "overlap": overlap, "regions": len(ctx.law.regions)})


def _eval(law: PwaLaw, z) -> tuple[int, np.ndarray]:
    i = int(locate_batch(law, z[None, :], TOL.mem)[0])
    r = law.regions[i]
    return i, r.F @ z + r.g


def suite_continuity(ctx: Context, pairs: int = 200, tol: float = 1e-6) -> SuiteResult:
    """The law agrees across region boundaries crossed by random segments."""
    Z = _feasible(ctx)
    n = min(pairs, len(Z) // 2)
    idx = ctx.rng.permutation(len(Z))[:2 * n]
    worst, crossings, gaps = 0.0, 0, 0
    grid = np.linspace(0.0, 1.0, 33)
    for a, b in zip(Z[idx[:n]], Z[idx[n:]]):
        pts = a + grid[:, None] * (b - a)
        # exact membership: a tolerance could hand a point to a region it lies
        # just outside, where that region's law does not apply
        reg = locate_batch(ctx.law, pts, 0.0)
        for j in np.flatnonzero(reg[1:] != reg[:-1]):
            lo, hi = grid[j], grid[j + 1]
            ra, rb = reg[j], reg[j + 1]
            if ra < 0 or rb < 0:
                # the feasible set is convex, so every grid point must be covered
                loose = locate_batch(ctx.law, pts[j:j + 2], TOL.mem)
                gaps += int(np.any(loose < 0))
                continue
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                zm = (a + mid * (b - a))[None, :]
                rm = locate_batch(ctx.law, zm, 0.0)[0]
                if rm < 0:  # exactly on a shared boundary
                    rm = locate_batch(ctx.law, zm, TOL.mem)[0]
                if rm < 0:
                    break
                if rm == ra:
                    lo = mid
                else:
                    hi, rb = mid, rm
            else:
                zb = a + 0.5 * (lo + hi) * (b - a)
                fa, fb = ctx.law.regions[ra], ctx.law.regions[rb]
                jump = np.abs((fa.F @ zb + fa.g) - (fb.F @ zb + fb.g)).max()
                worst = max(worst, float(jump))
                crossings += 1
                continue
            gaps += 1  # a feasible segment passes through no region
    return SuiteResult("continuity", worst <= tol and gaps == 0,
                       f"{crossings} boundary crossings on {n} segments; max jump {worst:.2e}; "
                       f"{gaps} gaps",
                       {"crossings": crossings, "max_jump": worst, "gaps": gaps})


def suite_invariance(ctx: Context) -> SuiteResult:
    """``X_f`` is positively invariant and admissible under ``u~ = -K z~``."""
    spec = ctx.spec
    Xf = spec.X_f
    Z = sample_in(Xf, ctx.samples, ctx.rng)
    A_K = closed_loop(spec.aug, spec.K)
    escaped = int(np.sum(~Xf.contains_many(Z @ A_K.T, TOL.mem)))
    adm = admissible_set(spec.Ez, spec.Fu, spec.G, -spec.K)
    inadmissible = int(np.sum(~adm.contains_many(Z, TOL.mem)))
    ok = escaped == 0 and inadmissible == 0 and len(Z) > 0
    return SuiteResult("invariance", ok,
                       f"{len(Z)} points of X_f: {escaped} leave it, {inadmissible} inadmissible",
                       {"samples": len(Z), "escaped": escaped, "inadmissible": inadmissible})


def suite_decrease(ctx: Context, count: int = 1000, tol: float = 1e-8) -> SuiteResult:
    """``Vf(A_K z) - Vf(z) <= -l(z, -K z)``, relative to ``max(1, Vf(z))``."""
    spec = ctx.spec
    Z = sample_in(spec.X_f, count, ctx.rng)
    A_K = closed_loop(spec.aug, spec.K)
    Vf = lambda X: np.einsum("ij,jk,ik->i", X, spec.P, X)
    ell = np.einsum("ij,jk,ik->i", Z, spec.Q + spec.K.T @ spec.R @ spec.K, Z)
    lhs = Vf(Z @ A_K.T) - Vf(Z) + ell
    rel = lhs / np.maximum(1.0, Vf(Z))
    worst = float(rel.max()) if len(rel) else 0.0
    return SuiteResult("decrease", worst <= tol, f"{len(Z)} points; worst scaled excess {worst:.2e}",
                       {"samples": len(Z), "worst": worst})


def suite_value(ctx: Context, starts: int = 50, tol: float = 1e-8) -> SuiteResult:
    """Optimal cost never increases along nominal closed-loop trajectories,
    and every trajectory settles in the unconstrained region."""
    Z = _feasible(ctx)
    starts = min(starts, len(Z))
    A, B = ctx.spec.aug.A_m, ctx.spec.aug.B_m
    u0 = ctx.law.unconstrained_index()
    steps = ctx.spec.N + 50
    worst, unsettled = -np.inf, 0
    for z in Z[ctx.rng.choice(len(Z), starts, replace=False)]:
        V = ctx.qp.value(solve_online(ctx.qp, z).U, z)
        regs = []
        for _ in range(steps):
            i, u = _eval(ctx.law, z)
            regs.append(i)
            z = A @ z + B @ u
            Vn = ctx.qp.value(solve_online(ctx.qp, z).U, z)
            worst = max(worst, (Vn - V) / max(1.0, V))
            V = Vn
        tail = regs[-10:]
        unsettled += int(u0 is None or any(r != u0 for r in tail))
    ok = worst <= tol and unsettled == 0
    return SuiteResult("value", ok,
                       f"{starts} starts x {steps} steps; worst scaled increase {worst:.2e}; "
                       f"{unsettled} not settled in the unconstrained region",
                       {"starts": starts, "worst": worst, "unsettled": unsettled})


def suite_properties(ctx: Context) -> SuiteResult:
    """Rank tests, Lyapunov/Riccati residuals, set inclusions and determinism."""
    spec, law = ctx.spec, ctx.law
    checks = {}
    checks["stabilizable"] = is_stabilizable(spec.aug.A_m, spec.aug.B_m)
    A_K = closed_loop(spec.aug, spec.K)
    checks["schur"] = numkit.is_schur(A_K)
    W = spec.Q + spec.K.T @ spec.R @ spec.K
    res = np.abs(A_K.T @ spec.P @ A_K - spec.P + W).max()
    checks["dlyap_residual"] = bool(res <= 1e-8 * max(1.0, np.abs(spec.P).max()))
    if ctx.spec.formulation == "standard":
        checks["dare_consistent"] = is_lqr_consistent(spec)
    checks["origin_in_Xf"] = spec.X_f.contains(np.zeros(spec.dim))
    checks["Xf_in_X0"] = subset(spec.X_f, law.X0)
    u0 = law.unconstrained_index()
    checks["unconstrained_gain"] = bool(
        u0 is not None and np.abs(law.regions[u0].F + spec.K).max() <= 1e-8
        and np.abs(law.regions[u0].g).max() <= 1e-10)
    Z = _feasible(ctx)[:2000]
    a = locate_batch(law, Z, TOL.mem)
    checks["locate_repeatable"] = bool(np.array_equal(a, locate_batch(law, Z, TOL.mem)))
    checks["backends_agree"] = bool(np.array_equal(a, locate_batch(law, Z, TOL.mem, "python")))
    failed = [k for k, v in checks.items() if not v]
    return SuiteResult("properties", not failed,
                       "all checks passed" if not failed else f"failed: {', '.join(failed)}",
                       {"checks": {k: bool(v) for k, v in checks.items()}, "backend": BACKEND,
                        "dlyap_residual": float(res)})


_RUNNERS = {"oracle": suite_oracle, "partition": suite_partition, "continuity": suite_continuity,
            "invariance": suite_invariance, "decrease": suite_decrease, "value": suite_value,
            "properties": suite_properties}


def run_suites(law: PwaLaw, *, samples: int = 10000, seed: int = 0,
               suites=SUITES) -> list[SuiteResult]:
    """Run the named suites in order with one seeded generator."""
    ctx = make_context(law, samples, seed)
    out = []
    for name in suites:
        t = time.perf_counter()
        res = _RUNNERS[name](ctx)
        res.seconds = time.perf_counter() - t
        out.append(res)
    return out


def model_matches(law: PwaLaw, model) -> bool:
    """Whether ``model`` is the plant recorded in the law's metadata."""
    m = law.meta["model"]
    return (np.allclose(model.A, m["A"], atol=1e-12) and np.allclose(model.B, m["B"], atol=1e-12)
            and SCHEMES.get(law.meta["scheme"]) is not None)
