"""Point clouds, finite metric spaces, difference sets and the Kuratowski map."""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateInputError, InvalidMetricError

NORM_KINDS = ("sup", "euclidean", "l1")
DUAL_NORM = {"sup": "l1", "euclidean": "euclidean", "l1": "sup"}
RADIUS_FLOOR = 6.0
RADIUS_PAD = 1e-6


def _check_kind(kind):
    if kind not in NORM_KINDS:
        raise ValueError(f"norm_kind must be one of {NORM_KINDS}, got {kind!r}")


def norm(v, kind):
    """Norm of ``v`` along its last axis."""
    _check_kind(kind)
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 1:
        return float(kernels.row_norms(v[None, :], kind)[0])
    shape = v.shape[:-1]
    return kernels.row_norms(v.reshape(-1, v.shape[-1]), kind).reshape(shape)


def dual_norm(w, kind):
    """Dual norm of functionals ``w`` relative to the ambient ``kind``."""
    return norm(w, DUAL_NORM[kind])


def pairwise_distances(points, kind):
    p = np.asarray(points, dtype=np.float64)
    return norm(p[:, None, :] - p[None, :, :], kind)


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Finite set of vectors in ``R^m`` with a sup, euclidean or l1 norm."""

    points: np.ndarray
    norm_kind: str = "euclidean"
    label: str = ""

    def __post_init__(self):
        _check_kind(self.norm_kind)
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise DegenerateInputError("a point cloud needs at least one point of dimension >= 1")
        if not np.all(np.isfinite(pts)):
            raise DegenerateInputError("point coordinates must be finite")
        object.__setattr__(self, "points", _frozen(pts))

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def has_duplicates(self):
        return np.unique(self.points, axis=0).shape[0] < self.n

    def distances(self):
        return pairwise_distances(self.points, self.norm_kind)

    def to_dict(self):
        return {"norm": self.norm_kind, "points": self.points.tolist(), "label": self.label}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["points"], dtype=np.float64), d.get("norm", "euclidean"), d.get("label", ""))


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """``n`` points given by a symmetric distance matrix; validated on construction."""

    dist: np.ndarray
    tol: float = 1e-12

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] < 1:
            raise InvalidMetricError("distance matrix must be square and nonempty")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise InvalidMetricError("distances must be finite and nonnegative")
        if np.any(np.diag(d) != 0):
            raise InvalidMetricError("distance matrix must have a zero diagonal")
        if not np.array_equal(d, d.T):
            raise InvalidMetricError("distance matrix must be symmetric")
        scale = max(1.0, float(d.max()))
        # d[i,j] <= d[i,k] + d[k,j] for all k
        for k in range(d.shape[0]):
            bad = d > d[:, k : k + 1] + d[k : k + 1, :] + self.tol * scale
            if bad.any():
                i, j = map(int, np.argwhere(bad)[0])
                raise InvalidMetricError(f"triangle inequality fails for ({i}, {j}) via {k}")
        object.__setattr__(self, "dist", _frozen(d))

    @property
    def n(self):
        return self.dist.shape[0]


def kuratowski_embed(space):
    """Kuratowski map ``i -> d(i, .)`` into ``(R^n, sup)``; an exact isometry."""
    if not isinstance(space, FiniteMetricSpace):
        space = FiniteMetricSpace(np.asarray(space))
    return PointCloud(space.dist.copy(), "sup", "kuratowski")


@dataclass(frozen=True, eq=False)
class DifferenceSet:
    """Deduplicated differences ``x_i - x_j`` of a cloud.

    ``pair_index[e]`` is one ordered pair ``(i, j)`` producing element ``e``;
    ``(-1, -1)`` marks elements supplied directly via :meth:`from_elements`.
    """

    elements: np.ndarray
    pair_index: np.ndarray
    norm_kind: str
    norms: np.ndarray = field(init=False)
    zero_index: int = field(init=False)

    def __post_init__(self):
        _check_kind(self.norm_kind)
        el = _frozen(self.elements)
        object.__setattr__(self, "elements", el)
        pi = np.asarray(self.pair_index, dtype=np.int64)
        pi.setflags(write=False)
        object.__setattr__(self, "pair_index", pi)
        nrm = _frozen(norm(el, self.norm_kind))
        object.__setattr__(self, "norms", nrm)
        zeros = np.flatnonzero(nrm == 0)
        if zeros.size != 1:
            raise DegenerateInputError("difference set must contain exactly one zero vector")
        object.__setattr__(self, "zero_index", int(zeros[0]))

    def __len__(self):
        return self.elements.shape[0]

    @property
    def dim(self):
        return self.elements.shape[1]

    @property
    def max_norm(self):
        return float(self.norms.max())

    @property
    def resolution(self):
        """Smallest nonzero norm, or ``inf`` for ``{0}``."""
        nz = self.norms[self.norms > 0]
        return float(nz.min()) if nz.size else float("inf")

    def is_negation_closed(self):
        keys = {tuple(r) for r in self.elements}
        return all(tuple(-r + 0.0) in keys for r in self.elements)

    @classmethod
    def from_elements(cls, elements, norm_kind):
        """Wrap an explicit negation-closed set containing 0."""
        el = np.unique(np.asarray(elements, dtype=np.float64) + 0.0, axis=0)
        z = cls(el, np.full((el.shape[0], 2), -1), norm_kind)
        if not z.is_negation_closed():
            raise DegenerateInputError("elements are not closed under negation")
        return z


def difference_set(cloud):
    """All ordered differences of ``cloud``, deduplicated (exact float equality)."""
    p = cloud.points
    n, m = p.shape
    diffs = (p[:, None, :] - p[None, :, :]).reshape(n * n, m) + 0.0  # folds -0.0 into 0.0
    ii, jj = np.divmod(np.arange(n * n), n)
    el, first = np.unique(diffs, axis=0, return_index=True)
    pairs = np.column_stack([ii[first], jj[first]])
    return DifferenceSet(el, pairs, cloud.norm_kind)


def enclosing_radius(z, pad=RADIUS_PAD):
    """``R = max(6 + pad, 2 max ||z||)`` so that every element lies in ``B_{R/2}(0)``."""
    return max(RADIUS_FLOOR + pad, 2.0 * z.max_norm)
