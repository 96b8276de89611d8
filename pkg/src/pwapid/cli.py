"""Command-line interface.

Exit codes
----------
0   success (for ``check-setpoint``: the change is feasible; for ``verify``:
    every suite passed)
1   malformed input: unreadable or invalid JSON, bad vectors, wrong shapes
2   synthesis or numerical failure, reported as JSON on standard error
3   a negative answer: infeasible setpoint change or a failed verification
"""
from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .errors import DimensionMismatch, PwaPidError, TooManyTrackedOutputs
from .gainsynth import PidGains
from .io import FormatError, load_disturbances, load_model, read_json, write_trace_csv
from .mpqp import law_from_dict, qp_feasible, save_law, condense
from .pipeline import (SCHEMES, SchemeConfig, config_from_meta, spec_for_reference, synthesize,
                       target_for)
from .scheduler import check_setpoint_change

EXIT_OK, EXIT_INPUT, EXIT_SYNTH, EXIT_NEGATIVE = 0, 1, 2, 3

STATE_WEIGHT, INTEGRAL_WEIGHT, DIFFERENCE_WEIGHT = 1.0, 1e-3, 0.1
INPUT_WEIGHT = {"plain": 0.02, "pi": 0.01, "pid": 0.01}


class InputError(Exception):
    """Bad command-line value or file content; maps to exit code 1."""


def parse_vector(text: str) -> np.ndarray:
    """Read ``"1,0.5"``, ``"1 0.5"`` or ``"[1, 0.5]"`` as a float vector."""
    text = text.strip()
    try:
        if text.startswith("["):
            vals = json.loads(text)
        else:
            vals = [float(t) for t in text.replace(",", " ").split()]
        out = np.atleast_1d(np.asarray(vals, float))
    except (ValueError, TypeError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot parse vector {text!r}") from exc
    if out.ndim != 1 or out.size == 0 or not np.all(np.isfinite(out)):
        raise InputError(f"cannot parse vector {text!r}")
    return out


def default_weights(n: int, q: int, scheme: str) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal state weight per coordinate block and the input weight scale."""
    diag = [STATE_WEIGHT] * n
    if scheme in ("pi", "pid"):
        diag += [INTEGRAL_WEIGHT] * q
    if scheme == "pid":
        diag += [DIFFERENCE_WEIGHT] * q
    return np.diag(diag), np.array(INPUT_WEIGHT[scheme])


def load_law_file(path):
    try:
        return law_from_dict(read_json(path))
    except FormatError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"{path}: not a valid law file ({exc})") from exc


def _as_ref(vec, q: int) -> np.ndarray:
    if vec.shape != (q,):
        raise InputError(f"reference must have {q} entries, got {vec.size}")
    return vec


# --------------------------------------------------------------- subcommands

def cmd_synth(args) -> int:
    mf = load_model(args.model)
    model = mf.model
    q = model.q
    Q, R = default_weights(model.n, q, args.scheme)
    if mf.Q is not None:
        Q = mf.Q
    R = mf.R if mf.R is not None else R * np.eye(model.m)
    if args.ref is not None:
        v_ref = _as_ref(parse_vector(args.ref), q)
    elif mf.v_ref is not None:
        v_ref = _as_ref(np.atleast_1d(mf.v_ref), q)
    else:
        v_ref = np.zeros(q)
    cfg = SchemeConfig(args.name or args.scheme, args.scheme, args.horizon, Q, R, model.Cv,
                       v_ref, args.priority)
    t = time.perf_counter()
    ctrl = synthesize(model, cfg)
    save_law(ctrl.law, args.out)
    print(json.dumps({"out": str(args.out), "regions": len(ctrl.law.regions),
                      "K": ctrl.gains.K.tolist(), "seconds": round(time.perf_counter() - t, 3)}))
    return EXIT_OK


def cmd_regions(args) -> int:
    law = load_law_file(args.law)
    radii = np.array([r.region.chebyshev()[1] for r in law.regions])
    print(f"regions: {len(law.regions)}")
    print(f"dimension: {law.dim}")
    if args.summary:
        sizes = np.bincount([len(r.active) for r in law.regions])
        print("active-set sizes: " + ", ".join(f"{i}:{c}" for i, c in enumerate(sizes) if c))
        print(f"chebyshev radius: min {radii.min():.3e} median {np.median(radii):.3e} "
              f"max {radii.max():.3e}")
        return EXIT_OK
    print("index\tradius\tactive")
    for i, (r, rad) in enumerate(zip(law.regions, radii)):
        print(f"{i}\t{rad:.6e}\t{list(r.active)}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .simulate import run_closed_loop

    law = load_law_file(args.law)
    meta = law.meta
    plant = load_model(args.model).model
    v_law = np.asarray(meta["target"]["v_ref"], float)
    v_ref = v_law if args.ref is None else _as_ref(parse_vector(args.ref), v_law.size)
    rows = None
    if np.array_equal(v_ref, v_law):
        target = target_for(meta, v_ref)
    elif meta["frame"] == "deviation":
        # rows bound the error variables, so the law carries over unchanged
        target = target_for(meta, v_ref)
    else:
        model, spec, _ = spec_for_reference(meta, v_ref)
        gains = PidGains.from_full(spec.K, model.n, model.q, spec.aug.kind)
        ctrl = synthesize(model, config_from_meta(meta, v_ref), gains=gains)
        law, target = ctrl.law, ctrl.target
        rows = (ctrl.spec.Ez, ctrl.spec.Fu, ctrl.spec.G)
    Cv = np.asarray(meta["model"]["Cv"], float)
    if plant.n != Cv.shape[1] or plant.m != np.asarray(meta["model"]["B"]).shape[1]:
        raise InputError("plant model dimensions do not match the law")
    plant = plant.with_tracking(Cv)
    dist = load_disturbances(args.disturbances) if args.disturbances else []
    x0 = None if args.x0 is None else parse_vector(args.x0)
    if x0 is not None and x0.shape != (plant.n,):
        raise InputError(f"initial state must have {plant.n} entries")
    try:
        trace = run_closed_loop(plant, law, target, dist, args.steps, x0=x0, rows=rows)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    write_trace_csv(trace, args.out)
    print(json.dumps({"out": str(args.out), "steps": len(trace) - 1, "status": trace.status,
                      "unlocated": int(np.sum(~trace.located()))}))
    return EXIT_OK


def setpoint_feasible(law, v_from, v_to) -> bool:
    """Whether the problem built for ``v_to`` is feasible at ``z_s(v_from) - z_s(v_to)``.

    When the law was built for ``v_to`` (or its rows do not depend on the
    target) the stored feasible set answers directly; otherwise the QP at the
    new target is rebuilt and feasibility is settled by one LP.
    """
    meta = law.meta
    z1 = target_for(meta, v_from).z_s
    z2 = target_for(meta, v_to).z_s
    same = np.array_equal(np.asarray(meta["target"]["v_ref"], float), v_to)
    if same or meta["frame"] == "deviation":
        return check_setpoint_change(law, z1, z2)
    _, spec, _ = spec_for_reference(meta, v_to)
    return qp_feasible(condense(spec), z1 - z2)


def cmd_check_setpoint(args) -> int:
    law = load_law_file(args.law)
    q = len(law.meta["target"]["v_ref"])
    v1 = _as_ref(parse_vector(args.from_), q)
    v2 = _as_ref(parse_vector(args.to), q)
    ok = setpoint_feasible(law, v1, v2)
    print("feasible" if ok else "infeasible")
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_verify(args) -> int:
    from .verify import SUITES, model_matches, run_suites

    law = load_law_file(args.law)
    if args.model is not None and not model_matches(law, load_model(args.model).model):
        raise InputError("the model file does not match the plant stored in the law")
    suites = SUITES if args.suites is None else tuple(args.suites.split(","))
    unknown = set(suites) - set(SUITES)
    if unknown:
        raise InputError(f"unknown suites: {sorted(unknown)}")
    results = run_suites(law, samples=args.samples, seed=args.seed, suites=suites)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name:<11} {r.seconds:7.2f}s  {r.detail}")
    ok = all(r.passed for r in results)
    print("all suites passed" if ok else "verification failed")
    return EXIT_OK if ok else EXIT_NEGATIVE


# ------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pwapid", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="synthesize an explicit law from a model file")
    s.add_argument("--model", required=True)
    s.add_argument("--scheme", choices=sorted(SCHEMES), required=True)
    s.add_argument("--horizon", type=int, default=2)
    s.add_argument("--out", required=True)
    s.add_argument("--ref", help="tracked reference, e.g. '1' or '1,0'")
    s.add_argument("--priority", choices=("state", "joint"), default="state",
                   help="how a non-unique equilibrium is chosen")
    s.add_argument("--name")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("regions", help="list critical regions of a law")
    s.add_argument("--law", required=True)
    s.add_argument("--summary", action="store_true")
    s.set_defaults(func=cmd_regions)

    s = sub.add_parser("simulate", help="closed-loop simulation to a trace CSV")
    s.add_argument("--law", required=True)
    s.add_argument("--model", required=True, help="plant model file")
    s.add_argument("--ref")
    s.add_argument("--disturbances")
    s.add_argument("--steps", type=int, default=200)
    s.add_argument("--x0", help="initial plant state (default zero)")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("check-setpoint", help="feasibility of a reference change")
    s.add_argument("--law", required=True)
    s.add_argument("--from", dest="from_", required=True)
    s.add_argument("--to", required=True)
    s.set_defaults(func=cmd_check_setpoint)

    s = sub.add_parser("verify", help="run the verification suites on a law")
    s.add_argument("--law", required=True)
    s.add_argument("--model")
    s.add_argument("--samples", type=int, default=10000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--suites", help="comma-separated subset of the suites")
    s.set_defaults(func=cmd_verify)
    return p


def _error_json(kind: str, exc: BaseException, **extra) -> str:
    return json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc), **extra})


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "steps", 1) < 1 or getattr(args, "horizon", 1) < 1:
        print(_error_json("input", ValueError("steps and horizon must be at least 1")),
              file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except FormatError as exc:
        where = {} if exc.line is None else {"line": exc.line, "column": exc.column}
        print(_error_json("input", exc, **where), file=sys.stderr)
        return EXIT_INPUT
    except (InputError, OSError, DimensionMismatch, TooManyTrackedOutputs) as exc:
        print(_error_json("input", exc), file=sys.stderr)
        return EXIT_INPUT
    except PwaPidError as exc:
        print(_error_json("synthesis" if args.command == "synth" else "numerical", exc),
              file=sys.stderr)
        return EXIT_SYNTH
    except ValueError as exc:
        print(_error_json("input", exc), file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
