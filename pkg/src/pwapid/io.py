"""File formats: model JSON, disturbance JSON and trace CSV."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .sysmodel import ConstraintSet, LtiModel


class FormatError(ValueError):
    """Malformed input file; ``line`` and ``column`` locate JSON syntax errors."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.line = line
        self.column = column


def read_json(path):
    with open(path) as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc.msg}", exc.lineno, exc.colno) from exc


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise FormatError(f"{where}: missing key '{key}'")
    return d[key]


@dataclass
class ModelFile:
    """Parsed model JSON: the model plus optional reference and weights."""

    model: LtiModel
    v_ref: np.ndarray | None = None
    Q: np.ndarray | None = None
    R: np.ndarray | None = None


def model_from_dict(d: dict, where: str = "model") -> ModelFile:
    """Build a model from ``{"A", "B", "C", "Cv", "state_bounds", "input_bounds",
    "general_constraints", "frame"}``; only ``A`` and ``B`` are required."""
    if not isinstance(d, dict):
        raise FormatError(f"{where}: top level must be an object")
    A = np.atleast_2d(np.asarray(_require(d, "A", where), float))
    B = np.atleast_2d(np.asarray(_require(d, "B", where), float))
    n, m = A.shape[0], B.shape[1]
    C = np.asarray(d.get("C", np.eye(n)), float)
    Cv = np.atleast_2d(np.asarray(d.get("Cv", np.eye(n)[:1]), float))
    sb, ib = d.get("state_bounds", {}), d.get("input_bounds", {})
    cons = ConstraintSet.from_boxes(sb.get("lo"), sb.get("hi"), ib.get("lo"), ib.get("hi"),
                                    n=n, m=m)
    gen = d.get("general_constraints")
    if gen:
        cons = cons.stack(ConstraintSet(np.asarray(gen["E"], float).reshape(-1, n),
                                        np.asarray(gen["F"], float).reshape(-1, m),
                                        np.asarray(gen["G"], float).reshape(-1)))
    model = LtiModel(A, B, C, Cv, cons, d.get("frame", "absolute"))
    opt = {k: (None if d.get(k) is None else np.asarray(d[k], float)) for k in ("v_ref", "Q", "R")}
    return ModelFile(model, **opt)


def load_model(path) -> ModelFile:
    return model_from_dict(read_json(path), str(path))


def model_to_dict(model: LtiModel, v_ref=None) -> dict:
    out = {"A": model.A.tolist(), "B": model.B.tolist(), "C": model.C.tolist(),
           "Cv": model.Cv.tolist(), "frame": model.frame}
    c = model.constraints
    if c.rows:
        out["general_constraints"] = {"E": c.E.tolist(), "F": c.F.tolist(), "G": c.G.tolist()}
    if v_ref is not None:
        out["v_ref"] = np.asarray(v_ref, float).tolist()
    return out


@dataclass(frozen=True)
class DisturbanceEvent:
    """``impulse`` adds ``vector`` to the state once at ``time``; ``additive``
    adds it to every state update from ``time`` on."""

    time: int
    kind: str
    vector: np.ndarray

    def __post_init__(self):
        if self.time < 0:
            raise ValueError("disturbance time must be non-negative")
        if self.kind not in ("impulse", "additive"):
            raise ValueError("disturbance kind must be 'impulse' or 'additive'")


def disturbances_from_list(items) -> list[DisturbanceEvent]:
    if not isinstance(items, list):
        raise FormatError("disturbance file must hold a list")
    out = []
    for i, it in enumerate(items):
        where = f"disturbance {i}"
        out.append(DisturbanceEvent(int(_require(it, "time", where)),
                                    str(_require(it, "kind", where)).lower(),
                                    np.asarray(_require(it, "vector", where), float)))
    return out


def load_disturbances(path) -> list[DisturbanceEvent]:
    return disturbances_from_list(read_json(path))


def _fmt(v) -> str:
    return format(float(v), ".17g")


def trace_header(n: int, m: int, q: int) -> list[str]:
    return (["k"] + [f"x{i + 1}" for i in range(n)] + [f"u{i + 1}" for i in range(m)]
            + [f"xhat{i + 1}" for i in range(n)] + ["region"]
            + [f"setpoint{i + 1}" for i in range(q)] + ["flag"])


def write_trace_csv(trace, path) -> None:
    """Write a trace with fixed 17-significant-digit numbers."""
    n, m, q = trace.x.shape[1], trace.u.shape[1], trace.setpoint.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace_header(n, m, q))
        for i in range(len(trace.k)):
            w.writerow([str(int(trace.k[i]))] + [_fmt(v) for v in trace.x[i]]
                       + [_fmt(v) for v in trace.u[i]] + [_fmt(v) for v in trace.xhat[i]]
                       + [str(int(trace.region[i]))] + [_fmt(v) for v in trace.setpoint[i]]
                       + [str(int(trace.flag[i]))])


def read_trace_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    return {name: body[:, j] for j, name in enumerate(header)}
