"""Compare the compiled and numpy point-location kernels.

Usage::

    python3 benchmarks/bench_locate.py [--scheme plain|pi|pid] [--points 20000]

A law is synthesized for the bundled reactor model, points are drawn
uniformly from the bounding box of its feasible set, and both kernels locate
them.  The script checks that the two agree and prints the timings.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from pwapid import _kernels
from pwapid.io import load_model
from pwapid.pipeline import SchemeConfig, synthesize
from pwapid.presets import cstr_example, data_path


def build_law(scheme: str):
    _, configs = cstr_example()
    key = {"plain": "I", "pi": "II", "pid": "III"}[scheme]
    model = load_model(data_path(f"cstr_{scheme}.json")).model
    cfg: SchemeConfig = configs[key]
    return synthesize(model, cfg).law


def best_of(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scheme", choices=("plain", "pi", "pid"), default="plain")
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    law = build_law(args.scheme)
    lo, hi = law.X0.bounding_box()
    Z = np.random.default_rng(args.seed).uniform(lo, hi, size=(args.points, lo.size))
    print(f"scheme {args.scheme}: {len(law.regions)} regions, {args.points} points")

    py = _kernels.locate_batch(law, Z, 1e-8, backend="python")
    t_py = best_of(lambda: _kernels.locate_batch(law, Z, 1e-8, backend="python"), args.repeats)
    print(f"python  {t_py * 1e3:9.2f} ms  {t_py / args.points * 1e6:8.3f} us/point")
    if _kernels.BACKEND != "cython":
        print("cython  unavailable (extension not built)")
        return
    cy = _kernels.locate_batch(law, Z, 1e-8, backend="cython")
    if not np.array_equal(py, cy):
        raise SystemExit(f"kernels disagree on {int(np.sum(py != cy))} points")
    t_cy = best_of(lambda: _kernels.locate_batch(law, Z, 1e-8, backend="cython"), args.repeats)
    print(f"cython  {t_cy * 1e3:9.2f} ms  {t_cy / args.points * 1e6:8.3f} us/point")
    print(f"speedup {t_py / t_cy:.1f}x, results identical")


if __name__ == "__main__":
    main()
