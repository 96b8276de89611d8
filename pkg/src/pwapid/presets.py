"""Continuous stirred-tank reactor example and its three controller schemes."""
from __future__ import annotations

import numpy as np

from .pipeline import SchemeConfig
from .sysmodel import ConstraintSet, LtiModel

CSTR_A = np.array([[0.7326, -0.0861], [0.1722, 0.9909]])
CSTR_B = np.array([[0.0609, 0.0], [0.0, 0.0064]])
X_LO, X_HI = np.array([-0.5, -0.5]), np.array([1.5, 2.5])
U_LO, U_HI = np.array([-2.0, -2.0]), np.array([2.0, 2.0])


def cstr_model(Cv=None) -> LtiModel:
    """Two-state reactor; box constraints bound the error variables ``(x~, u~)``."""
    cons = ConstraintSet.from_boxes(X_LO, X_HI, U_LO, U_HI, n=2, m=2)
    Cv = np.eye(2)[:1] if Cv is None else Cv
    return LtiModel(CSTR_A, CSTR_B, np.eye(2), Cv, cons, frame="deviation")


def cstr_example(N: int = 2, x1_ref: float = 1.0) -> tuple[LtiModel, dict]:
    """Reactor model plus scheme configurations keyed ``"I"``, ``"II"``, ``"III"``.

    Scheme I is the plain state-feedback LQR (no integral action).  Scheme II
    tracks both states with PI action; its second reference is the
    minimum-norm equilibrium value ``x2s = 0``.  Scheme III tracks ``x1``
    with PID action.
    """
    model = cstr_model()
    schemes = {
        "I": SchemeConfig("I", "plain", N, np.eye(2), 0.02 * np.eye(2),
                          np.eye(2)[:1], [x1_ref]),
        "II": SchemeConfig("II", "pi", N, np.diag([1.0, 1.0, 0.001, 0.001]), 0.01 * np.eye(2),
                           np.eye(2), [x1_ref, 0.0]),
        "III": SchemeConfig("III", "pid", N, np.diag([1.0, 1.0, 0.001, 0.1]), 0.01 * np.eye(2),
                            np.eye(2)[:1], [x1_ref]),
    }
    return model, schemes


def data_path(name: str) -> str:
    """Path of a bundled data file such as ``"cstr_pi.json"`` or ``"study_dist.json"``."""
    from importlib.resources import files

    return str(files("pwapid") / "data" / name)
