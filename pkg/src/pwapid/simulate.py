"""Closed-loop simulation of a plant under an explicit law with disturbances."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gainsynth import SteadyTarget
from .io import DisturbanceEvent
from .mpqp import PwaLaw
from .pipeline import SCHEMES
from .scheduler import make_state, step
from .sysmodel import LtiModel, Observer

DIVERGENCE_LIMIT = 1e6


@dataclass
class SimTrace:
    """Per-step record of a closed-loop run.

    Row ``i`` holds the state ``x(k)``, the input applied at ``k``, the
    controller's state estimate, the located region (``-1`` when the error left
    the feasible set), the reference, the escalation flag and the constraint
    slacks ``G - Ez z~ - Fu u~``.  ``status`` is ``"ok"`` or ``"diverged"``;
    a diverged run is truncated at the last finite state.
    """

    k: np.ndarray
    x: np.ndarray
    u: np.ndarray
    xhat: np.ndarray
    region: np.ndarray
    setpoint: np.ndarray
    flag: np.ndarray
    slack: np.ndarray
    status: str = "ok"

    def __len__(self) -> int:
        return len(self.k)

    def located(self) -> np.ndarray:
        return self.region >= 0


def disturbance_at(events, k: int, n: int) -> np.ndarray:
    """Sum of the disturbance vectors active at step ``k``."""
    d = np.zeros(n)
    for ev in events:
        if (ev.kind == "impulse" and ev.time == k) or (ev.kind == "additive" and k >= ev.time):
            d += ev.vector
    return d


def run_closed_loop(model: LtiModel, law: PwaLaw, target: SteadyTarget,
                    disturbances: list[DisturbanceEvent] = (), steps: int = 200, *,
                    x0=None, kind: str | None = None, rows=None,
                    observer: Observer | None = None) -> SimTrace:
    """Iterate the plant with the scheduled law for ``steps`` updates.

    Parameters
    ----------
    model : LtiModel
        Plant ``x(k+1) = A x(k) + B u(k) + d(k)``, ``y = C x``.  For a model
        in the deviation frame the disturbance vectors are given in error
        coordinates, ``x~(k+1) = A x~(k) + B u~(k) + d(k)``, so the plant
        state receives ``-d(k)``.
    law : PwaLaw
        Explicit law; its metadata supplies the augmentation kind and the
        constraint rows unless ``kind`` and ``rows = (Ez, Fu, G)`` are given.
    target : SteadyTarget
        Equilibrium the law regulates to.
    disturbances : list of DisturbanceEvent
    steps : int
        Number of plant updates; the trace holds ``steps + 1`` samples.
    x0 : array_like, optional
        Initial plant state, zero by default.

    Returns
    -------
    SimTrace
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    meta = law.meta or {}
    if kind is None:
        kind = SCHEMES[meta["scheme"]]
    if rows is None:
        rows = (meta["Ez"], meta["Fu"], meta["G"])
    Ez, Fu, G = (np.asarray(r, float) for r in rows)
    n = model.n
    for ev in disturbances:
        if ev.vector.shape != (n,):
            raise ValueError(f"disturbance vector must have {n} entries")
    sign = -1.0 if model.frame == "deviation" else 1.0
    state = make_state(law, target, model, kind, Ez, Fu, G, observer)
    x = np.zeros(n) if x0 is None else np.asarray(x0, float).copy()
    rec = {key: [] for key in ("k", "x", "u", "xhat", "region", "flag", "slack")}
    status = "ok"
    for k in range(steps + 1):
        u, diag = step(state, model.C @ x)
        rec["k"].append(k)
        rec["x"].append(x)
        rec["u"].append(u)
        rec["xhat"].append(target.z_s[:n] - diag.z_err[:n])
        rec["region"].append(-1 if diag.region is None else diag.region)
        rec["flag"].append(int(diag.escalation))
        rec["slack"].append(diag.slack)
        if k == steps:
            break
        x = model.A @ x + model.B @ u + sign * disturbance_at(disturbances, k, n)
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > DIVERGENCE_LIMIT:
            status = "diverged"
            break
    count = len(rec["k"])
    return SimTrace(np.array(rec["k"]), np.array(rec["x"]), np.array(rec["u"]),
                    np.array(rec["xhat"]), np.array(rec["region"]),
                    np.tile(target.v_ref, (count, 1)), np.array(rec["flag"]),
                    np.array(rec["slack"]), status)
