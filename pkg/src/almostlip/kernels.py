"""Backend selection for the hot loops.

The compiled ``_ckernels`` extension is used when it was built; otherwise the
NumPy versions in ``_pykernels`` are used. Setting ``ALMOSTLIP_PURE_PYTHON=1``
forces the fallback.
"""

import os

from . import _pykernels

NORM_CODES = {"sup": 0, "euclidean": 1, "l1": 2}

_compiled = None
if os.environ.get("ALMOSTLIP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _pykernels


def get_backend(name=None):
    """Return the kernel module for ``name`` ('compiled', 'python' or None for the active one)."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def fps(points, norm_kind, stop_radius, start=0):
    """Farthest-point traversal.

    Returns ``(order, radii, mind)``: visited indices, the covering radius of
    each prefix of ``order`` and the final distance of every point to its
    nearest selected center. Stops once the covering radius is ``<= stop_radius``.
    """
    return _impl.fps(points, NORM_CODES[norm_kind], float(stop_radius), int(start))


def row_norms(points, norm_kind):
    return _impl.row_norms(points, NORM_CODES[norm_kind])
