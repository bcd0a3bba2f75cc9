"""NumPy reference versions of the compiled kernels in ``_ckernels.pyx``."""

import numpy as np


def _norms(diff, code):
    if code == 0:
        return np.abs(diff).max(axis=-1) if diff.shape[-1] else np.zeros(diff.shape[:-1])
    if code == 1:
        return np.sqrt(np.einsum("...i,...i->...", diff, diff))
    return np.abs(diff).sum(axis=-1)


def fps(points, code, stop_radius, start=0):
    p = np.ascontiguousarray(points, dtype=np.float64)
    n = p.shape[0]
    order = np.empty(n, dtype=np.int64)
    radii = np.empty(n, dtype=np.float64)
    mind = _norms(p - p[start], code)
    c, k = start, 0
    while True:
        if k:
            np.minimum(mind, _norms(p - p[c], code), out=mind)
        order[k] = c
        best = int(np.argmax(mind))
        radii[k] = mind[best]
        k += 1
        if radii[k - 1] <= stop_radius or k >= n:
            break
        c = best
    return order[:k].copy(), radii[:k].copy(), mind


def row_norms(points, code):
    return _norms(np.ascontiguousarray(points, dtype=np.float64), code)
