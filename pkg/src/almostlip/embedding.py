"""Multi-scale linear embedding into l2 and its distortion checks.

The map stacks the scale maps ``phi_k`` into disjoint coordinate blocks,
block ``k`` scaled by ``k^-delta``::

    Phi(x) = (1^-d phi_1(x), 2^-d phi_2(x), ..., K^-d phi_K(x))
"""

from dataclasses import dataclass, field

import numpy as np

from .covering import fit_homogeneity
from .errors import InsufficientDataError
from .functionals import scale_index
from .metric import PointCloud, difference_set, norm
from .slog import slog


@dataclass(frozen=True, eq=False)
class EmbeddingMap:
    delta: float
    frames: list
    matrix: np.ndarray
    blocks: list  # (scale k, first row, stop row)
    op_norm_bound: float
    R: float

    @property
    def target_dim(self):
        return self.matrix.shape[0]

    def apply(self, v):
        return np.asarray(v, dtype=np.float64) @ self.matrix.T

    def to_dict(self):
        return {
            "delta": self.delta,
            "R": self.R,
            "op_norm_bound": self.op_norm_bound,
            "blocks": [{"k": k, "start": a, "stop": b} for k, a, b in self.blocks],
            "matrix": self.matrix.tolist(),
        }


@dataclass
class DistortionReport:
    delta: float
    lower_constant: float
    upper_constant: float
    worst_pair: tuple
    passed: bool
    n_pairs: int = 0
    n_skipped: int = 0
    violations: int = 0
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "delta": self.delta,
            "lower_constant": self.lower_constant,
            "upper_constant": self.upper_constant,
            "worst_pair": list(self.worst_pair),
            "pass": self.passed,
            "n_pairs": self.n_pairs,
            "n_skipped": self.n_skipped,
            "violations": self.violations,
            **self.details,
        }


def build_embedding(x: PointCloud, delta, frames):
    if not frames:
        raise InsufficientDataError("no scale frames supplied")
    if not delta > 0:
        raise ValueError("delta must be positive")
    dim = x.dim
    rows, blocks, start = [], [], 0
    for fr in frames:
        if fr.m_n == 0:
            continue
        rows.append(fr.n ** (-delta) * fr.weights)
        blocks.append((fr.n, start, start + fr.m_n))
        start += fr.m_n
    matrix = np.vstack(rows) if rows else np.zeros((0, dim))
    matrix.setflags(write=False)
    bound = float(np.sqrt(sum(fr.n ** (-2 * delta) * fr.m_n for fr in frames)))
    return EmbeddingMap(float(delta), list(frames), matrix, blocks, bound, float(frames[0].R))


def iter_pairs(points):
    """Yield ``(i, js, diffs)`` with ``diffs = points[js] - points[i]`` for ``js > i``."""
    p = np.asarray(points, dtype=np.float64)
    for i in range(p.shape[0] - 1):
        js = np.arange(i + 1, p.shape[0])
        yield i, js, p[js] - p[i]


def pair_table(x: PointCloud, matrix):
    """Ambient distances and image l2 distances for all pairs ``i < j``."""
    I, J, D, IMG = [], [], [], []
    for i, js, diffs in iter_pairs(x.points):
        I.append(np.full(js.size, i))
        J.append(js)
        D.append(norm(diffs, x.norm_kind))
        IMG.append(np.linalg.norm(diffs @ matrix.T, axis=1) if matrix.shape[0] else np.zeros(js.size))
    if not I:
        e = np.zeros(0)
        return e.astype(int), e.astype(int), e, e
    return np.concatenate(I), np.concatenate(J), np.concatenate(D), np.concatenate(IMG)


def verify_lower_bound(emap: EmbeddingMap, x: PointCloud, budget=None, homogeneity=None):
    """Check ``||Phi(x - y)|| >= k^-delta ||x - y|| / 4`` for every pair and report realised constants.

    ``lower_constant`` is the smallest ``C`` with
    ``||Phi(x-y)|| >= ||x-y|| / (C slog(||x-y||)^delta)``; ``proof_constant``
    is the constant obtained from the per-scale bound and
    ``slog(d)^delta >= c k^delta`` with ``c`` taken over the data.
    """
    I, J, d, img = pair_table(x, emap.matrix)
    keep = d > 0
    skipped = int((~keep).sum())
    I, J, d, img = I[keep], J[keep], d[keep], img[keep]
    details = {}
    if homogeneity is not None:
        thr = (1 + homogeneity.alpha + homogeneity.beta) / 2
        details["delta_threshold"] = thr
        details["hypothesis_ok"] = bool(emap.delta > thr)
    if d.size == 0:
        details["informative_pairs"] = 0
        return DistortionReport(emap.delta, 1.0, 1.0, (-1, -1), True, 0, skipped, 0, details)
    k = scale_index(d, emap.R)
    required = k.astype(float) ** (-emap.delta) * d / 4.0
    violations = int(np.sum(img < required))
    with np.errstate(divide="ignore"):
        ratio = np.where(img > 0, d / (img * slog(d) ** emap.delta), np.inf)
    w = int(np.argmax(ratio))
    lower = float(ratio[w])
    upper = float(np.max(img / d))
    c_R = float(np.min(slog(d) ** emap.delta / k.astype(float) ** emap.delta))
    details.update(
        informative_pairs=int(d.size),
        proof_constant=4.0 / c_R,
        min_margin=float(np.min(img - required)),
    )
    ok = violations == 0 and np.isfinite(lower)
    if budget is not None:
        ok = ok and lower <= budget and upper <= budget
    return DistortionReport(emap.delta, lower, upper, (int(I[w]), int(J[w])), bool(ok), int(d.size),
                            skipped, violations, details)


def verify_image_invariance(emap: EmbeddingMap, x: PointCloud, source_params, delta=None, tolerance=0.5):
    """Refit origin homogeneity on ``Phi(X) - Phi(X)`` and compare exponents.

    The image is fitted on the source scale grid with ``s`` pinned to the
    source value; passes iff ``alpha' <= alpha + delta s + tol`` and
    ``beta' <= beta + tol``.
    """
    if delta is None:
        delta = emap.delta
    image = PointCloud(emap.apply(x.points) if emap.target_dim else np.zeros((x.n, 1)), "euclidean", "image")
    zi = difference_set(image)
    params = fit_homogeneity(zi, True, list(source_params.scale_grid), fixed_s=source_params.s)
    ok = (params.alpha <= source_params.alpha + delta * source_params.s + tolerance
          and params.beta <= source_params.beta + tolerance)
    return params, bool(ok)
