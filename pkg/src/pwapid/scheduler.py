"""Runtime: region lookup, PID bank evaluation and plant-input recovery.

At each sample the controller forms the augmented error ``z~ = z_s - z``,
finds the critical region that holds it, evaluates ``u~0 = F^i z~ + g^i`` and
applies ``u = u_s - u~0``.  Inside the unconstrained region ``g = 0`` and the
law is the static PID gain; elsewhere ``g`` acts as a feedforward term.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OutOfFeasibleSet
from .gainsynth import SteadyTarget
from .mpqp import PwaLaw, locate
from .sysmodel import LtiModel, Observer


@dataclass
class Diagnostics:
    region: int | None
    z_err: np.ndarray
    slack: np.ndarray
    escalation: bool


@dataclass
class ScheduleState:
    """Single-owner controller state advanced by :func:`step`.

    Without an observer the measurement is inverted through ``C`` (full-state
    feedback) and the integral and difference channels are kept here.
    """

    law: PwaLaw
    target: SteadyTarget
    model: LtiModel
    kind: str
    Ez: np.ndarray
    Fu: np.ndarray
    G: np.ndarray
    observer: Observer | None = None
    integral: np.ndarray | None = None
    x_prev: np.ndarray | None = None
    y_prev: np.ndarray | None = None
    u_last: np.ndarray | None = None
    current_region: int | None = None
    history: list = field(default_factory=list)

    def __post_init__(self):
        q = self.model.q
        if self.integral is None:
            self.integral = np.zeros(q)
        if self.u_last is None:
            self.u_last = np.asarray(self.target.u_s, float).copy()


def make_state(law: PwaLaw, target: SteadyTarget, model: LtiModel, kind: str, Ez, Fu, G,
               observer: Observer | None = None) -> ScheduleState:
    return ScheduleState(law, target, model, kind, np.atleast_2d(Ez), np.atleast_2d(Fu),
                         np.asarray(G, float), observer)


def _measured_state(model: LtiModel, y) -> np.ndarray:
    y = np.asarray(y, float)
    if model.C.shape[0] == model.C.shape[1]:
        return np.linalg.solve(model.C, y)
    return np.linalg.lstsq(model.C, y, rcond=None)[0]


def _augmented(state: ScheduleState, x: np.ndarray) -> np.ndarray:
    if state.kind == "plain":
        return x
    parts = [x, state.integral]
    if state.kind == "PID":
        prev = x if state.x_prev is None else state.x_prev
        parts.append(state.model.Cv @ (x - prev))
    return np.concatenate(parts)


def step(state: ScheduleState, y, *, strict: bool = False) -> tuple[np.ndarray, Diagnostics]:
    """Advance the controller by one sample and return the plant input.

    When the error leaves the feasible set the last input is held and the
    escalation flag is raised (or :class:`OutOfFeasibleSet` with ``strict``).
    The integral channel is frozen while the input is held, so holding does
    not wind it up.
    """
    y = np.asarray(y, float)
    mdl = state.model
    if state.observer is not None:
        if state.y_prev is not None:
            state.observer.update(state.u_last, state.y_prev)
        z = state.observer.z_hat(state.kind)
        x = z[:mdl.n]
    else:
        x = _measured_state(mdl, y)
        z = _augmented(state, x)
    z_err = state.target.z_s - z
    idx = locate(state.law, z_err)
    if idx is None:
        if strict:
            raise OutOfFeasibleSet("augmented error is outside the feasible set")
        u = state.u_last.copy()
        u_dev = state.target.u_s - u
        esc = True
    else:
        r = state.law.regions[idx]
        u_dev = r.F @ z_err + r.g
        u = state.target.u_s - u_dev
        esc = False
    slack = state.G - state.Ez @ z_err - state.Fu @ u_dev
    if state.observer is None:
        if not esc:
            state.integral = state.integral + mdl.Cv @ x - state.target.v_ref
        state.x_prev = x
    state.y_prev = y
    state.u_last = u
    state.current_region = idx
    diag = Diagnostics(idx, z_err, slack, esc)
    state.history.append(diag)
    return u, diag


def check_setpoint_change(law_at_new: PwaLaw, z_s1, z_s2) -> bool:
    """Whether moving the target from ``z_s1`` to ``z_s2`` keeps the problem feasible."""
    d = np.asarray(z_s1, float) - np.asarray(z_s2, float)
    return law_at_new.X0.contains(d)


@dataclass
class PidBank:
    """Per-region split of ``F^i`` into proportional, integral and difference gains."""

    K1: list
    K2: list
    K3: list
    g: list
    columns: dict
    pid_channels: int
    p_channels: int

    def reassemble(self, i: int) -> np.ndarray:
        blocks = [self.K1[i]]
        if self.K2[i] is not None:
            blocks.append(self.K2[i])
        if self.K3[i] is not None:
            blocks.append(self.K3[i])
        return np.hstack(blocks)


def decompose_gains(law: PwaLaw, coord_map) -> PidBank:
    """Split every region gain by coordinate role.

    ``m * q`` channels carry PID (or PI) action on the tracked outputs; the
    remaining ``m * (n - q)`` state channels are purely proportional.
    """
    roles = [r for _, r in coord_map]
    cols = {role: [i for i, r in enumerate(roles) if r == role]
            for role in ("state", "integral", "difference")}
    if cols["state"] != list(range(len(cols["state"]))):
        raise ValueError("state coordinates must come first")
    K1, K2, K3, g = [], [], [], []
    for reg in law.regions:
        F = reg.F
        K1.append(F[:, cols["state"]].copy())
        K2.append(F[:, cols["integral"]].copy() if cols["integral"] else None)
        K3.append(F[:, cols["difference"]].copy() if cols["difference"] else None)
        g.append(reg.g.copy())
    m = law.regions[0].F.shape[0] if law.regions else 0
    n, q = len(cols["state"]), len(cols["integral"])
    return PidBank(K1, K2, K3, g, cols, m * q, m * (n - q))
