import os
import subprocess
import sys

import numpy as np
import pytest

from pwapid import _kernels
from pwapid.mpqp import locate


def test_backends_agree(controllers, rng):
    if _kernels.BACKEND != "cython":
        pytest.skip("compiled kernel not built")
    law = controllers("III").law
    lo, hi = law.X0.bounding_box()
    Z = rng.uniform(lo, hi, size=(5000, law.dim))
    for eps in (0.0, 1e-8):
        a = _kernels.locate_batch(law, Z, eps, backend="python")
        b = _kernels.locate_batch(law, Z, eps, backend="cython")
        np.testing.assert_array_equal(a, b)


def test_batch_matches_scalar_locate(controllers, rng):
    law = controllers("I").law
    Z = rng.uniform(*law.X0.bounding_box(), size=(500, 2))
    idx = _kernels.locate_batch(law, Z, 1e-8, backend="python")
    for z, i in zip(Z, idx):
        j = locate(law, z, 1e-8)
        assert (i < 0) == (j is None)
        if j is not None:
            assert law.regions[i].region.contains(z, 1e-8)


def test_pack_offsets(controllers):
    law = controllers("I").law
    H, k, off = _kernels.pack(law.regions)
    assert off[-1] == H.shape[0] == k.size
    np.testing.assert_array_equal(H[off[1]:off[2]], law.regions[1].region.H)


def test_pure_python_switch():
    env = dict(os.environ, PWAPID_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from pwapid import _kernels; print(_kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
