"""Pure-Python/numpy point-location kernel (fallback for the compiled one)."""
from __future__ import annotations

import numpy as np


def locate_packed(H, k, offsets, Z, eps):
    """First region index containing each row of ``Z``; ``-1`` when none.

    Region ``r`` owns rows ``offsets[r]:offsets[r+1]`` of ``H`` and ``k``.
    """
    Z = np.ascontiguousarray(Z, dtype=float)
    out = np.full(Z.shape[0], -1, dtype=np.int64)
    todo = np.arange(Z.shape[0])
    for r in range(len(offsets) - 1):
        if todo.size == 0:
            break
        a, b = offsets[r], offsets[r + 1]
        inside = np.all(Z[todo] @ H[a:b].T <= k[a:b] + eps, axis=1)
        out[todo[inside]] = r
        todo = todo[~inside]
    return out
