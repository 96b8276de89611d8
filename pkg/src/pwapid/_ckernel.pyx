# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled point-location kernel: first region containing each point."""
import numpy as np
cimport numpy as cnp


def locate_packed(const double[:, ::1] H, const double[::1] k, const long long[::1] offsets,
                  const double[:, ::1] Z, double eps):
    cdef Py_ssize_t npts = Z.shape[0], d = Z.shape[1], nreg = offsets.shape[0] - 1
    cdef Py_ssize_t p, r, i, j
    cdef double acc
    cdef bint ok
    out = np.full(npts, -1, dtype=np.int64)
    cdef long long[::1] res = out
    for p in range(npts):
        for r in range(nreg):
            ok = True
            for i in range(offsets[r], offsets[r + 1]):
                acc = 0.0
                for j in range(d):
                    acc += H[i, j] * Z[p, j]
                if acc > k[i] + eps:
                    ok = False
                    break
            if ok:
                res[p] = r
                break
    return out
