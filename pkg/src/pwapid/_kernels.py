"""Select the compiled point-location kernel, falling back to numpy.

Set ``PWAPID_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

try:
    if os.environ.get("PWAPID_PURE_PYTHON"):
        raise ImportError("pure-Python kernel requested")
    from . import _ckernel as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _kernels_py
    BACKEND = "python"


def pack(regions):
    """Stack region H-representations into contiguous arrays."""
    Hs = [r.region.H for r in regions]
    ks = [r.region.k for r in regions]
    d = Hs[0].shape[1] if Hs else 0
    H = np.ascontiguousarray(np.vstack(Hs) if Hs else np.zeros((0, d)))
    k = np.ascontiguousarray(np.concatenate(ks) if ks else np.zeros(0))
    offsets = np.zeros(len(regions) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([h.shape[0] for h in Hs])
    return H, k, offsets


def _packed(law):
    cache = getattr(law, "_packed_cache", None)
    if cache is None or cache[0] != len(law.regions):
        cache = (len(law.regions), pack(law.regions))
        law._packed_cache = cache
    return cache[1]


def locate_batch(law, Z, eps, backend=None):
    impl = {"python": _kernels_py, None: _impl}.get(backend, _impl)
    if backend == "cython" and BACKEND != "cython":
        raise ImportError("compiled kernel is not available")
    H, k, offsets = _packed(law)
    Z = np.ascontiguousarray(np.atleast_2d(Z), dtype=float)
    return impl.locate_packed(H, k, offsets, Z, float(eps))
