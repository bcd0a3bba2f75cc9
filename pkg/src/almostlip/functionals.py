"""Single-scale norming functionals on dyadic slices of a difference set.

For scale ``n`` the slice ``{z : ||z|| <= R 2^-n}`` is covered by balls of
radius ``R 2^-(n+3)`` and every nonzero center gets a unit functional that
norms it. Stacking the functionals gives a linear map ``phi_n`` with
``max_j |f_j(z)| >= ||z|| / 4`` on the annulus ``R 2^-(n+1) <= ||z|| <= R 2^-n``.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .covering import COVER_RTOL
from .errors import DegenerateInputError, InvariantViolation
from .metric import DifferenceSet, dual_norm, norm
from .slog import dyadic_index

NORMING_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class NormingFunctional:
    weights: np.ndarray
    dual_norm: float
    normed_center_index: int = -1


def norming_functional(z, norm_kind, center_index=-1):
    """Unit dual-norm functional ``f`` with ``f(z) = ||z||``.

    sup ambient: signed coordinate functional at the first largest ``|z_j|``;
    euclidean: ``z / ||z||``; l1: ``sign(z)``.
    """
    z = np.asarray(z, dtype=np.float64)
    if not np.any(z != 0):
        raise DegenerateInputError("the zero vector has no norming functional")
    if norm_kind == "sup":
        j = int(np.argmax(np.abs(z)))
        w = np.zeros_like(z)
        w[j] = np.sign(z[j])
    elif norm_kind == "euclidean":
        u = z / np.max(np.abs(z))  # rescale first so tiny vectors do not underflow
        w = u / np.linalg.norm(u)
    elif norm_kind == "l1":
        w = np.sign(z)
    else:
        raise ValueError(f"unknown norm {norm_kind!r}")
    return NormingFunctional(w, float(dual_norm(w, norm_kind)), int(center_index))


def annulus_bounds(R, n):
    return float(np.ldexp(R, -(n + 1))), float(np.ldexp(R, -n))


def scale_index(dist, R):
    """Dyadic scale ``k >= 1`` with ``R 2^-(k+1) <= dist <= R 2^-k`` (smaller ``k`` at boundaries)."""
    d = np.asarray(dist, dtype=np.float64)
    k = np.maximum(dyadic_index(d / R), 1)
    return k


@dataclass(frozen=True, eq=False)
class ScaleFrame:
    n: int
    R: float
    radius: float
    center_indices: np.ndarray
    centers: np.ndarray
    functionals: list
    norm_kind: str

    @property
    def m_n(self):
        return len(self.functionals)

    @cached_property
    def weights(self):
        """``(m_n, dim)`` matrix whose rows are the functionals."""
        if not self.functionals:
            return np.zeros((0, self.centers.shape[1] if self.centers.ndim == 2 else 0))
        return np.vstack([f.weights for f in self.functionals])

    @property
    def op_norm_bound(self):
        """Bound ``sqrt(m_n)`` on ``||phi_n||`` from the ambient norm into l2."""
        return float(np.sqrt(self.m_n))

    def apply(self, v):
        return np.asarray(v, dtype=np.float64) @ self.weights.T

    def to_dict(self):
        return {
            "n": self.n,
            "R": self.R,
            "radius": self.radius,
            "norm": self.norm_kind,
            "center_indices": self.center_indices.tolist(),
            "centers": self.centers.tolist(),
            "weights": self.weights.tolist(),
            "normed_center_index": [f.normed_center_index for f in self.functionals],
        }

    @classmethod
    def from_dict(cls, d):
        kind = d["norm"]
        w = np.asarray(d["weights"], dtype=np.float64)
        fs = [NormingFunctional(row, float(dual_norm(row, kind)), int(i))
              for row, i in zip(w, d["normed_center_index"])]
        centers = np.asarray(d["centers"], dtype=np.float64)
        return cls(int(d["n"]), float(d["R"]), float(d["radius"]),
                   np.asarray(d["center_indices"], dtype=np.int64), centers, fs, kind)


def _verify_frame(z, frame):
    """Raise if any frame invariant fails; returns the annulus margin ``min(max_j|f_j(z)| - ||z||/4)``."""
    kind = z.norm_kind
    lo, hi = annulus_bounds(frame.R, frame.n)
    in_ball = z.norms <= hi
    if frame.m_n != len(frame.functionals):
        raise InvariantViolation("m_n mismatch")
    for f in frame.functionals:
        c = z.elements[f.normed_center_index]
        if abs(f.dual_norm - 1.0) > NORMING_TOL or abs(f.weights @ c - norm(c, kind)) > NORMING_TOL * max(1.0, norm(c, kind)):
            raise InvariantViolation(f"norming identity fails at scale {frame.n}")
    pts = z.elements[in_ball]
    if pts.shape[0] and frame.centers.shape[0]:
        gaps = np.full(pts.shape[0], np.inf)
        for c in frame.centers:
            np.minimum(gaps, kernels.row_norms(pts - c, kind), out=gaps)
        if np.any(gaps > frame.radius * (1 + COVER_RTOL)):
            raise InvariantViolation(f"cover invalid at scale {frame.n}")
    ann = (z.norms >= lo) & in_ball
    if not ann.any():
        return float("inf")
    if frame.m_n == 0:
        raise InvariantViolation(f"annulus nonempty but no functionals at scale {frame.n}")
    vals = np.abs(z.elements[ann] @ frame.weights.T).max(axis=1)
    margin = vals - z.norms[ann] / 4.0
    if np.any(margin < 0):
        raise InvariantViolation(f"annulus lower bound fails at scale {frame.n}")
    return float(margin.min())


def build_scale_frame(z: DifferenceSet, R, n, verify=True):
    if n < 1:
        raise ValueError("scale index must be >= 1")
    _, hi = annulus_bounds(R, n)
    radius = float(np.ldexp(R, -(n + 3)))
    idx = np.flatnonzero(z.norms <= hi)
    if idx.size == 0:
        return ScaleFrame(n, float(R), radius, np.zeros(0, np.int64), np.zeros((0, z.dim)), [], z.norm_kind)
    sub = z.elements[idx]
    start = int(np.flatnonzero(idx == z.zero_index)[0]) if z.zero_index in idx else 0
    order, _, _ = kernels.fps(sub, z.norm_kind, radius * (1 + COVER_RTOL), start)
    cidx = idx[order]
    functionals = [norming_functional(z.elements[i], z.norm_kind, int(i)) for i in cidx if z.norms[i] > 0]
    frame = ScaleFrame(n, float(R), radius, cidx, z.elements[cidx], functionals, z.norm_kind)
    if verify:
        _verify_frame(z, frame)
    return frame


def default_n_max(z, R):
    res = z.resolution
    if not np.isfinite(res):
        return 1
    return int(np.ceil(np.log2(R / res))) + 1


def stack_frames(z: DifferenceSet, R, n_max=None, verify=True):
    """Frames for scales ``1..n_max``; the default depth reaches the smallest nonzero difference."""
    if n_max is None:
        n_max = default_n_max(z, R)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    return [build_scale_frame(z, R, n, verify) for n in range(1, n_max + 1)]


def annulus_margin(z, frame):
    """Smallest ``max_j |f_j(z)| - ||z||/4`` over the frame's annulus (``inf`` if empty)."""
    return _verify_frame(z, frame)
