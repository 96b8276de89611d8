"""End-to-end controller synthesis: augmentation, gain, terminal ingredients,
feasible set and explicit law.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gainsynth, numkit
from .errors import SynthesisFailed
from .gainsynth import PidGains, SofCertificate, SteadyTarget
from .mpqp import MpcSpec, PwaLaw, QpCondensed, condense, solve_explicit
from .polytope import Polyhedron, admissible_set, mpi_set
from .sysmodel import AugModel, LtiModel, augment

SCHEMES = {"plain": "plain", "pi": "PI", "pid": "PID"}


@dataclass
class SchemeConfig:
    """Weights, horizon and reference for one controller scheme."""

    name: str
    kind: str
    N: int
    Q: np.ndarray
    R: np.ndarray
    Cv: np.ndarray
    v_ref: np.ndarray
    priority: str = "state"
    sof: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SCHEMES:
            raise ValueError(f"kind must be one of {sorted(SCHEMES)}")
        self.Q = np.atleast_2d(np.asarray(self.Q, float))
        self.R = np.atleast_2d(np.asarray(self.R, float))
        self.Cv = np.atleast_2d(np.asarray(self.Cv, float))
        self.v_ref = np.atleast_1d(np.asarray(self.v_ref, float))


@dataclass
class Controller:
    model: LtiModel
    config: SchemeConfig
    aug: AugModel
    gains: PidGains
    target: SteadyTarget
    spec: MpcSpec
    qp: QpCondensed
    law: PwaLaw
    certificate: SofCertificate | None = None


def deviation_rows(model: LtiModel, aug: AugModel, target: SteadyTarget):
    """Constraint rows ``Ez z~ + Fu u~ <= G`` in the augmented error coordinates.

    ``z~ = z_s - z`` and ``u~ = u_s - u``.  In the absolute frame the plant rows
    ``E x + F u <= G`` become ``-E x~ - F u~ <= G - E x_s - F u_s``; in the
    deviation frame they already constrain ``(x~, u~)``.
    """
    cons = model.constraints
    d = aug.dim
    E = np.zeros((cons.rows, d))
    if model.frame == "absolute":
        E[:, :model.n] = -cons.E
        Fu = -cons.F
        G = cons.G - cons.E @ target.x_s - cons.F @ target.u_s
    else:
        E[:, :model.n] = cons.E
        Fu = cons.F.copy()
        G = cons.G.copy()
    return E, Fu, G


def exploration_box(model: LtiModel, aug: AugModel, Ez, Fu, G) -> Polyhedron | None:
    """Bounds on difference coordinates implied by the state constraints.

    ``Delta v~ = Cv (x~_k - x~_{k-1})`` of two admissible states lies within
    plus or minus the spread of ``Cv x~`` over the state-only rows.  No
    constraint row involves these coordinates directly, so without this box
    the feasible set would be unbounded along them.
    """
    idx = aug.indices("difference")
    if idx.size == 0:
        return None
    X = admissible_set(Ez[:, :model.n], Fu, G)
    lo, hi = np.full(aug.dim, -np.inf), np.full(aug.dim, np.inf)
    for j, row in zip(idx, model.Cv):
        spread = X.support(row) + X.support(-row)
        if not np.isfinite(spread):
            raise SynthesisFailed("tracked output is unbounded over the state constraints")
        lo[j], hi[j] = -spread, spread
    return Polyhedron.from_box(lo, hi)


def design_gain(model: LtiModel, aug: AugModel, cfg: SchemeConfig):
    if aug.kind == "PID":
        return gainsynth.synth_pid_gain(model, **cfg.sof)
    if aug.kind == "PI":
        return gainsynth.synth_pi_gain(aug, cfg.Q, cfg.R), None
    return gainsynth.lqr(aug, cfg.Q, cfg.R), None


def synthesize(model: LtiModel, cfg: SchemeConfig, *, target: SteadyTarget | None = None,
               gains: PidGains | None = None) -> Controller:
    """Run the full pipeline for one scheme.

    LQR-based schemes use the standard horizon cost, whose unconstrained
    optimizer is the LQR gain itself.  The PID scheme takes its gain from the
    output-feedback LMIs and uses the prestabilized parameterization so the
    unconstrained region reproduces that gain exactly.
    """
    model = model.with_tracking(cfg.Cv)
    kind = SCHEMES[cfg.kind]
    aug = augment(model, kind)
    if cfg.Q.shape != (aug.dim, aug.dim):
        raise SynthesisFailed(f"Q must be {aug.dim}x{aug.dim} for the {kind} model")
    cert = None
    if gains is None:
        gains, cert = design_gain(model, aug, cfg)
    K = gains.K
    P = gainsynth.terminal_cost(aug.A_m, aug.B_m, K, cfg.Q, cfg.R)
    if target is None:
        target = gainsynth.steady_target(model, cfg.v_ref, kind, priority=cfg.priority)
    Ez, Fu, G = deviation_rows(model, aug, target)
    A_K = gainsynth.closed_loop(aug, K)
    X_f = mpi_set(A_K, admissible_set(Ez, Fu, G, -K))
    if X_f.empty or not X_f.contains(np.zeros(aug.dim)):
        raise SynthesisFailed("terminal set does not contain the origin")
    formulation = "prestabilized" if kind == "PID" else "standard"
    spec = MpcSpec(aug, cfg.Q, cfg.R, P, K, cfg.N, Ez, Fu, G, X_f, formulation)
    qp = condense(spec)
    # the union of the critical regions is the N-step set; the explorer
    # returns its facets, which avoids a Fourier-Motzkin projection here
    law = solve_explicit(qp, exploration_box(model, aug, Ez, Fu, G))
    law.meta = controller_meta(model, cfg, aug, gains, target, spec)
    return Controller(model, cfg, aug, gains, target, spec, qp, law, cert)


def _l(a):
    return np.asarray(a, float).tolist()


def controller_meta(model, cfg, aug, gains, target, spec) -> dict:
    """Provenance stored with a law; enough to rebuild the QP and the runtime."""
    cons = model.constraints
    return {
        "scheme": cfg.kind,
        "name": cfg.name,
        "formulation": spec.formulation,
        "N": spec.N,
        "priority": cfg.priority,
        "frame": model.frame,
        "model": {"A": _l(model.A), "B": _l(model.B), "C": _l(model.C), "Cv": _l(model.Cv),
                  "E": _l(cons.E), "F": _l(cons.F), "G": _l(cons.G)},
        "Q": _l(spec.Q), "R": _l(spec.R), "P": _l(spec.P), "K": _l(gains.K),
        "Ez": _l(spec.Ez), "Fu": _l(spec.Fu), "G": _l(spec.G),
        "X_f": spec.X_f.to_dict(),
        "target": {"z_s": _l(target.z_s), "u_s": _l(target.u_s),
                   "v_ref": _l(target.v_ref), "x_s": _l(target.x_s)},
        "coord_map": [list(c) for c in aug.coord_map],
    }


def spec_from_meta(meta: dict) -> tuple[LtiModel, MpcSpec, SteadyTarget]:
    """Inverse of :func:`controller_meta`."""
    from .sysmodel import ConstraintSet

    mm = meta["model"]
    cons = ConstraintSet(np.asarray(mm["E"], float), np.asarray(mm["F"], float),
                         np.asarray(mm["G"], float))
    model = LtiModel(mm["A"], mm["B"], mm["C"], mm["Cv"], cons, meta["frame"])
    aug = augment(model, SCHEMES[meta["scheme"]])
    Xf = Polyhedron(np.asarray(meta["X_f"]["H"], float).reshape(-1, aug.dim), meta["X_f"]["k"],
                    minimal=True, empty=False, dim=aug.dim)
    spec = MpcSpec(aug, meta["Q"], meta["R"], meta["P"], meta["K"], meta["N"],
                   meta["Ez"], meta["Fu"], meta["G"], Xf, meta["formulation"])
    t = meta["target"]
    target = SteadyTarget(np.asarray(t["z_s"], float), np.asarray(t["u_s"], float),
                          np.asarray(t["v_ref"], float), np.asarray(t["x_s"], float))
    return model, spec, target


def config_from_meta(meta: dict, v_ref=None) -> SchemeConfig:
    """Scheme configuration recorded in a law, optionally with a new reference."""
    t = meta["target"]["v_ref"] if v_ref is None else v_ref
    return SchemeConfig(meta.get("name", meta["scheme"]), meta["scheme"], meta["N"], meta["Q"],
                        meta["R"], meta["model"]["Cv"], t, meta.get("priority", "state"))


def target_for(meta: dict, v_ref) -> SteadyTarget:
    """Equilibrium of the law's plant for the tracked reference ``v_ref``."""
    model, spec, _ = spec_from_meta(meta)
    return gainsynth.steady_target(model, v_ref, spec.aug.kind,
                                   priority=meta.get("priority", "state"))


def spec_for_reference(meta: dict, v_ref) -> tuple[LtiModel, MpcSpec, SteadyTarget]:
    """The law's problem rebuilt around the equilibrium for ``v_ref``.

    Gain and weights are kept.  In the deviation frame the constraint rows
    do not move with the target, so only the target changes; in the absolute
    frame the rows and the terminal set are recomputed.
    """
    model, spec, _ = spec_from_meta(meta)
    target = target_for(meta, v_ref)
    if model.frame == "deviation":
        return model, spec, target
    Ez, Fu, G = deviation_rows(model, spec.aug, target)
    X_f = mpi_set(gainsynth.closed_loop(spec.aug, spec.K), admissible_set(Ez, Fu, G, -spec.K))
    if X_f.empty or not X_f.contains(np.zeros(spec.aug.dim)):
        raise SynthesisFailed("terminal set does not contain the origin")
    spec = MpcSpec(spec.aug, spec.Q, spec.R, spec.P, spec.K, spec.N, Ez, Fu, G, X_f,
                   spec.formulation)
    return model, spec, target


def retarget(ctrl: Controller, v_ref) -> Controller:
    """Rebuild constraints, terminal set, feasible set and law for a new reference."""
    cfg = SchemeConfig(ctrl.config.name, ctrl.config.kind, ctrl.config.N, ctrl.config.Q,
                       ctrl.config.R, ctrl.config.Cv, v_ref, ctrl.config.priority,
                       ctrl.config.sof)
    return synthesize(ctrl.model, cfg, gains=ctrl.gains)


def is_lqr_consistent(spec: MpcSpec, tol: float = 1e-8) -> bool:
    """Whether ``K`` is the LQR gain of ``(Q, R)`` on the augmented model."""
    try:
        K, _ = numkit.lqr_gain(spec.aug.A_m, spec.aug.B_m, spec.Q, spec.R)
    except Exception:
        return False
    return bool(np.max(np.abs(K - spec.K)) <= tol * (1.0 + np.abs(K).max()))
