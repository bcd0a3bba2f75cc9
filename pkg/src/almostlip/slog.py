"""Symmetric logarithm, grid-certified slog constants and log-log regression."""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InsufficientDataError

LOG2 = float(np.log(2.0))


def slog(x):
    """Symmetric logarithm ``log(x + 1/x)`` for ``x > 0``.

    Evaluated as ``|log x| + log1p(t**2)`` with ``t = min(x, 1/x)``, which is
    algebraically identical and keeps full precision at both ends of the range.
    Accepts scalars or arrays; scalars come back as ``float``.
    """
    arr = np.asarray(x, dtype=np.float64)
    if np.any(~(arr > 0)):
        raise DomainError("slog is defined only for x > 0")
    la = np.abs(np.log(arr))
    out = la + np.log1p(np.exp(-2.0 * la))
    if out.ndim == 0:
        return float(out)
    return out


def dyadic_index(x):
    """Index ``k`` with ``2**-(k+1) <= x <= 2**-k``; the smaller ``k`` wins at exact powers of two."""
    arr = np.asarray(x, dtype=np.float64)
    k = np.ceil(-np.log2(arr)).astype(np.int64) - 1
    # repair log2 rounding using exact power-of-two scaling
    k = np.where(np.ldexp(1.0, -k) < arr, k - 1, k)
    k = np.where(np.ldexp(1.0, -(k + 1)) > arr, k + 1, k)
    return k


@dataclass(frozen=True)
class SLogBounds:
    """Constants of the four slog inequalities, certified on ``[grid_lo, grid_hi]``.

    Item 2 reads ``A_C slog(x) <= slog(C x) <= B_C slog(x)``, item 3
    ``a_gamma slog(x) <= slog(x slog(x)**gamma) <= b_gamma slog(x)`` and item 4
    ``slog(x) >= c slog(2**-k)`` for ``x`` in ``[2**-(k+1), 2**-k]``.
    """

    C: float
    gamma: float
    A_C: float
    B_C: float
    a_gamma: float
    b_gamma: float
    c: float
    grid_lo: float
    grid_hi: float

    def check(self, x, rtol=1e-12):
        """Return a dict of per-item booleans for the points ``x`` (must lie in the certified range)."""
        x = np.asarray(x, dtype=np.float64)
        if x.size == 0:
            raise InsufficientDataError("no points to check")
        lo, hi = x.min(), x.max()
        if lo < self.grid_lo * (1 - 1e-15) or hi > self.grid_hi * (1 + 1e-15):
            raise DomainError("points outside the certified range")
        return _items_hold(x, self, rtol)


def _ratios(x, C, gamma):
    sx = slog(x)
    r2 = slog(C * x) / sx
    r3 = slog(x * sx**gamma) / sx
    k = dyadic_index(x)
    # at exact powers of two x also sits at the bottom of interval k-1
    k_alt = np.where(np.ldexp(1.0, -k) == x, k - 1, k)
    r4 = np.minimum(sx / slog(np.ldexp(1.0, -k)), sx / slog(np.ldexp(1.0, -k_alt)))
    return sx, r2, r3, r4


def _items_hold(x, b, rtol):
    sx, r2, r3, r4 = _ratios(x, b.C, b.gamma)
    la = np.abs(np.log(x))
    tol = rtol * np.maximum(1.0, sx)
    return {
        "item1": bool(np.all(la <= sx + tol) and np.all(sx <= LOG2 + la + tol)),
        "item2": bool(np.all(r2 >= b.A_C * (1 - rtol)) and np.all(r2 <= b.B_C * (1 + rtol))),
        "item3": bool(np.all(r3 >= b.a_gamma * (1 - rtol)) and np.all(r3 <= b.b_gamma * (1 + rtol))),
        "item4": bool(np.all(r4 >= b.c * (1 - rtol))),
    }


def certify_slog_bounds(C, gamma, grid):
    """Tightest constants for which the slog inequalities hold at every grid point."""
    if not C > 0:
        raise DomainError("C must be positive")
    if not gamma >= 0:
        raise DomainError("gamma must be nonnegative")
    x = np.atleast_1d(np.asarray(grid, dtype=np.float64))
    if x.size == 0:
        raise InsufficientDataError("grid is empty")
    sx, r2, r3, r4 = _ratios(x, float(C), float(gamma))
    la = np.abs(np.log(x))
    if not (np.all(la <= sx * (1 + 1e-14)) and np.all(sx <= (LOG2 + la) * (1 + 1e-14))):
        raise AssertionError("slog item 1 failed; numerical breakdown")
    return SLogBounds(
        C=float(C),
        gamma=float(gamma),
        A_C=float(r2.min()),
        B_C=float(r2.max()),
        a_gamma=float(r3.min()),
        b_gamma=float(r3.max()),
        c=float(r4.min()),
        grid_lo=float(x.min()),
        grid_hi=float(x.max()),
    )


def loglog_fit(pairs):
    """Least-squares slope of ``log(count)`` against ``-log(scale)``.

    Parameters
    ----------
    pairs : iterable of (scale, count)
        At least three pairs with distinct positive scales.

    Returns
    -------
    slope, intercept, residual
        ``residual`` is the RMS of the fit in log units.
    """
    arr = np.asarray(list(pairs), dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 3:
        raise InsufficientDataError("loglog_fit needs at least 3 (scale, count) pairs")
    scales, counts = arr[:, 0], arr[:, 1]
    if np.unique(scales).size != scales.size:
        raise InsufficientDataError("scales must be distinct")
    if np.any(scales <= 0) or np.any(counts <= 0):
        raise DomainError("scales and counts must be positive")
    xs = -np.log(scales)
    ys = np.log(counts)
    A = np.column_stack([xs, np.ones_like(xs)])
    (slope, intercept), *_ = np.linalg.lstsq(A, ys, rcond=None)
    resid = ys - (slope * xs + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))
