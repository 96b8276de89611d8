"""Numerical tolerances shared by every stage of the pipeline.

All region-boundary decisions (membership, redundancy, degeneracy) read from
one :class:`Tolerances` record so that the offline partition and the online
lookup agree on what "inside" means.  An alternative record can be loaded from
the JSON file named by the ``PWAPID_TOL_OVERRIDES`` environment variable.
"""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass

ENV_VAR = "PWAPID_TOL_OVERRIDES"


@dataclass(frozen=True)
class Tolerances:
    rank: float = 1e-9
    pd: float = 1e-10
    dare_residual: float = 1e-9
    dare_max_iter: int = 200
    riccati_max_iter: int = 100000
    stab: float = 1e-9
    lmi: float = 1e-7
    red: float = 1e-9
    mem: float = 1e-8
    lp_gap: float = 1e-8
    dim: float = 1e-7
    act: float = 1e-9
    kkt: float = 1e-9
    step: float = 1e-6
    mpi_max_iter: int = 200
    fm_max_rows: int = 20000
    qp_max_iter: int = 500

    def replace(self, **changes) -> "Tolerances":
        return dataclasses.replace(self, **changes)


def load_tolerances(path: str | None = None) -> Tolerances:
    """Return default tolerances, updated from ``path`` or ``$PWAPID_TOL_OVERRIDES``."""
    path = path or os.environ.get(ENV_VAR)
    if not path:
        return Tolerances()
    with open(path) as fh:
        overrides = json.load(fh)
    known = {f.name for f in dataclasses.fields(Tolerances)}
    unknown = set(overrides) - known
    if unknown:
        raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
    return Tolerances(**overrides)


TOL = load_tolerances()
