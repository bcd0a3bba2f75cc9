"""Covering numbers, dimension estimates and almost-homogeneity fits."""

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from . import kernels
from .errors import InsufficientDataError, OracleTooLargeError, UsageError
from .metric import DifferenceSet, FiniteMetricSpace, norm, pairwise_distances
from .slog import loglog_fit, slog

# closed balls, with room for last-bit rounding in differences such as 0.3 - 0.2
COVER_RTOL = 1e-12
EXACT_ORACLE_MAX = 16
NOISE_RTOL = 1e-9
SETCOVER_MAX = 2500  # dense adjacency above this is too costly; counts fall back to FPS alone
DEFAULT_RATIOS = (1 / 4, 1 / 8, 1 / 16)


def _slack(radius):
    return radius * (1.0 + COVER_RTOL)


def _as_points(target):
    p = np.asarray(target, dtype=np.float64)
    if p.ndim == 1:
        p = p[:, None]
    return p


@dataclass(frozen=True, eq=False)
class Cover:
    center_indices: np.ndarray
    radius: float
    covered_set_size: int
    max_gap: float = 0.0  # largest point-to-nearest-center distance

    def __len__(self):
        return int(self.center_indices.size)


@dataclass(frozen=True, eq=False)
class HomogeneityParams:
    M: float
    s: float
    alpha: float
    beta: float
    residual: float
    at_origin: bool
    scale_grid: list
    counts: list = field(default_factory=list)
    objective: float = 0.0  # log M + penalty (s + alpha + beta) at the optimum

    def envelope(self, r, rho):
        return self.M * (r / rho) ** self.s * slog(r) ** self.alpha * slog(rho) ** self.beta

    def envelope_holds(self, rtol=1e-9):
        return all(c <= self.envelope(r, rho) * (1 + rtol) for (r, rho), c in zip(self.scale_grid, self.counts))

    def to_dict(self):
        return {
            "M": self.M,
            "s": self.s,
            "alpha": self.alpha,
            "beta": self.beta,
            "residual": self.residual,
            "at_origin": self.at_origin,
            "scale_grid": [[float(r), float(p)] for r, p in self.scale_grid],
            "counts": [int(c) for c in self.counts],
            "objective": self.objective,
        }


@dataclass(frozen=True, eq=False)
class DimensionEstimate:
    kind: str
    value: float
    residual: float
    scales_used: list
    counts: list = field(default_factory=list)

    def to_dict(self):
        return {
            "kind": self.kind,
            "value": self.value,
            "residual": self.residual,
            "scales_used": [float(e) for e in self.scales_used],
            "counts": [int(c) for c in self.counts],
        }


def greedy_cover(target, radius, norm_kind="euclidean", start=None, method="fps"):
    """Greedy cover of a point set by closed ``radius``-balls centred in the set.

    ``method="fps"`` builds a farthest-point net: add the point farthest from
    the current centers until all are within ``radius``. Those centers are
    pairwise more than ``radius`` apart, so their number also lower-bounds the
    ``radius``-packing number. ``method="setcover"`` is the max-coverage
    greedy, usually smaller, with quadratic memory. The traversal starts at
    ``start`` or, by default, at the point nearest the mean.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    p = _as_points(target)
    if p.shape[0] == 0:
        raise InsufficientDataError("cannot cover an empty set")
    if method == "setcover":
        dist = pairwise_distances(p, norm_kind)
        order = _setcover_order(dist, radius)
        gap = float(dist[:, order].min(axis=1).max())
        return Cover(order, float(radius), p.shape[0], gap)
    if method != "fps":
        raise ValueError(f"unknown cover method {method!r}")
    if start is None:
        start = central_index(p, norm_kind)
    order, _, mind = kernels.fps(p, norm_kind, _slack(radius), start)
    return Cover(order, float(radius), p.shape[0], float(mind.max()))


def cover_counts(target, radii, norm_kind="euclidean", start=None, method="fps"):
    """Greedy cover sizes for several radii.

    ``method="fps"`` reads every count off a single farthest-point traversal:
    the order does not depend on the radius, so the count at radius ``e`` is
    the length of the shortest prefix whose covering radius is ``<= e``.
    ``method="setcover"`` runs the max-coverage greedy per radius.
    ``method="best"`` takes the smaller valid cover of the two (set cover only
    up to ``SETCOVER_MAX`` points). ``start`` is as in :func:`greedy_cover`.
    """
    radii = np.atleast_1d(np.asarray(radii, dtype=np.float64))
    p = _as_points(target)
    if p.shape[0] == 0:
        return np.zeros(radii.shape, dtype=np.int64)
    if method not in ("fps", "setcover", "best"):
        raise ValueError(f"unknown cover method {method!r}")
    if method == "setcover":
        return _setcover_counts(pairwise_distances(p, norm_kind), radii)
    if start is None:
        start = central_index(p, norm_kind)
    _, prefix_radius, _ = kernels.fps(p, norm_kind, _slack(radii.min()), start)
    # prefix_radius is nonincreasing; count = 1 + #{prefixes still too coarse}
    counts = np.array([1 + int(np.sum(prefix_radius > _slack(e))) for e in radii], dtype=np.int64)
    if method == "best" and p.shape[0] <= SETCOVER_MAX:
        counts = np.minimum(counts, _setcover_counts(pairwise_distances(p, norm_kind), radii))
    return counts


def _setcover_order(dist, radius):
    """Max-coverage greedy: repeatedly take the ball covering most uncovered points (lowest index on ties)."""
    adj = dist <= _slack(radius)
    uncovered = np.ones(adj.shape[0], dtype=bool)
    gain = adj.sum(axis=1).astype(np.int64)
    chosen = []
    while uncovered.any():
        i = int(np.argmax(gain))
        chosen.append(i)
        newly = adj[i] & uncovered
        uncovered &= ~newly
        gain -= adj[:, newly].sum(axis=1)
    return np.array(chosen, dtype=np.int64)


def _setcover_counts(dist, radii):
    return np.array([_setcover_order(dist, e).size for e in radii], dtype=np.int64)


def central_index(target, norm_kind="euclidean"):
    """Index of the point nearest the coordinate mean; a cheap start that avoids corner-first traversals."""
    p = _as_points(target)
    return int(np.argmin(kernels.row_norms(p - p.mean(axis=0), norm_kind)))


def cover_is_valid(target, cover, norm_kind="euclidean"):
    p = _as_points(target)
    centers = p[cover.center_indices]
    d = norm(p[:, None, :] - centers[None, :, :], norm_kind).min(axis=1)
    return bool(np.all(d <= _slack(cover.radius)))


def exact_cover_number(target, radius, norm_kind="euclidean"):
    """Minimum number of closed ``radius``-balls centred in the set that cover it.

    Exhaustive search over center subsets; ``target`` is a point array or a
    :class:`FiniteMetricSpace` with at most 16 points.
    """
    if isinstance(target, FiniteMetricSpace):
        dist = target.dist
    else:
        p = _as_points(target)
        dist = pairwise_distances(p, norm_kind)
    n = dist.shape[0]
    if n > EXACT_ORACLE_MAX:
        raise OracleTooLargeError(f"exact oracle limited to {EXACT_ORACLE_MAX} points, got {n}")
    if n == 0:
        return 0
    full = (1 << n) - 1
    masks = [sum(1 << j for j in range(n) if dist[i, j] <= _slack(radius)) for i in range(n)]
    for k in range(1, n + 1):
        for combo in itertools.combinations(masks, k):
            acc = 0
            for m in combo:
                acc |= m
            if acc == full:
                return k
    return n  # unreachable: singletons always cover


def covering_number_at_origin(z: DifferenceSet, r, rho):
    """Greedy count of ``rho``-balls covering ``{z : ||z|| <= r}``; the traversal starts at 0."""
    if not 0 < rho < r:
        raise ValueError("need 0 < rho < r")
    return int(_origin_counts(z, r, [rho])[0])


def _origin_counts(z, r, rhos):
    mask = z.norms <= _slack(r)
    if not mask.any():
        return np.zeros(len(rhos), dtype=np.int64)
    sub = z.elements[mask]
    start = int(np.flatnonzero(np.flatnonzero(mask) == z.zero_index)[0]) if mask[z.zero_index] else 0
    return cover_counts(sub, rhos, z.norm_kind, start)


def _local_counts(z, center, r, rhos):
    d = norm(z.elements - z.elements[center], z.norm_kind)
    mask = d <= _slack(r)
    sub = z.elements[mask]
    start = int(np.flatnonzero(np.flatnonzero(mask) == center)[0])
    return cover_counts(sub, rhos, z.norm_kind, start)


def _points_and_kind(cloud, norm_kind=None):
    if hasattr(cloud, "points"):
        pts, kind = cloud.points, cloud.norm_kind
    elif isinstance(cloud, DifferenceSet):
        pts, kind = cloud.elements, cloud.norm_kind
    else:
        pts, kind = _as_points(cloud), "euclidean"
    return pts, (norm_kind or kind)


def extent(cloud, norm_kind=None, chunk=512):
    """``(diameter, resolution)``: largest pairwise distance and smallest one above rounding noise.

    Distances below ``NOISE_RTOL`` times the set's scale are last-bit
    artefacts (``0.3 - 0.2`` against ``0.1``) and do not count as resolution.
    """
    pts, kind = _points_and_kind(cloud, norm_kind)
    pts = np.unique(pts, axis=0)
    if pts.shape[0] < 2:
        return 0.0, float("inf")
    floor = NOISE_RTOL * 2 * float(kernels.row_norms(pts - pts[0], kind).max())
    diam, res = 0.0, float("inf")
    for i in range(0, pts.shape[0], chunk):
        d = norm(pts[i:i + chunk, None, :] - pts[None, :, :], kind)
        diam = max(diam, float(d.max()))
        nz = d[d > floor]
        if nz.size:
            res = min(res, float(nz.min()))
    return diam, res


def default_eps_range(cloud, norm_kind=None):
    """Box-counting range from half the diameter down to twice the resolution.

    Above half the diameter a single ball covers; below the resolution every
    point needs its own. Returns ``None`` when the range is empty.
    """
    diam, res = extent(cloud, norm_kind)
    hi, lo = diam / 2, 2 * res
    return (hi, lo) if np.isfinite(lo) and lo < hi else None


def box_counting_estimate(cloud, eps_hi, eps_lo, steps, norm_kind=None):
    """Slope of ``log N(eps)`` against ``-log eps`` on a log-spaced grid, ``N`` from greedy covers.

    Each count is the smaller of a farthest-point cover started at the most
    central point and a max-coverage cover. Farthest-point counts alone move in
    dyadic jumps on regular grids, which biases the slope by up to 0.3.
    """
    pts, kind = _points_and_kind(cloud, norm_kind)
    if not 0 < eps_lo < eps_hi:
        raise ValueError("need 0 < eps_lo < eps_hi")
    if steps < 3:
        raise InsufficientDataError("need at least 3 scales")
    eps = np.geomspace(eps_hi, eps_lo, int(steps))
    if np.unique(pts, axis=0).shape[0] <= 1:
        return DimensionEstimate("box_counting", 0.0, 0.0, eps.tolist(), [1] * len(eps))
    counts = cover_counts(pts, eps, kind, method="best")
    slope, _, resid = loglog_fit(zip(eps, counts))
    return DimensionEstimate("box_counting", max(0.0, slope), resid, eps.tolist(), counts.tolist())


def dyadic_grid(z, R, ratios=DEFAULT_RATIOS, n_max=None):
    """Scale pairs ``(R 2^-n, q R 2^-n)`` with ``rho`` kept at or above the data resolution."""
    res = z.resolution
    if not np.isfinite(res):
        return []
    if n_max is None:
        n_max = int(np.ceil(np.log2(R / res))) + 1
    grid = []
    for n in range(1, n_max + 1):
        r = float(np.ldexp(R, -n))
        for q in sorted(ratios, reverse=True):
            rho = r * q
            if rho >= res * (1 - 1e-12):
                grid.append((r, rho))
    return grid


def _count_grid(z, grid, at_origin, max_centers, seed):
    by_r = {}
    for r, rho in grid:
        by_r.setdefault(r, []).append(rho)
    if at_origin:
        centers = [z.zero_index]
    else:
        n = len(z)
        if n <= max_centers:
            centers = list(range(n))
        else:
            rng = np.random.default_rng(seed)
            others = np.setdiff1d(np.arange(n), [z.zero_index])
            centers = [z.zero_index] + sorted(rng.choice(others, max_centers - 1, replace=False).tolist())
    counts = {}
    for r, rhos in by_r.items():
        best = np.zeros(len(rhos), dtype=np.int64)
        for c in centers:
            cc = _origin_counts(z, r, rhos) if at_origin else _local_counts(z, c, r, rhos)
            best = np.maximum(best, cc)
        for rho, c in zip(rhos, best):
            counts[(r, rho)] = int(c)
    return [counts[g] for g in grid]


def envelope_features(grid):
    """Rows ``(1, log(r/rho), log slog(r), log slog(rho))``; the log-envelope is linear in them."""
    r = np.array([g[0] for g in grid], dtype=np.float64)
    rho = np.array([g[1] for g in grid], dtype=np.float64)
    return np.column_stack([np.ones_like(r), np.log(r / rho), np.log(slog(r)), np.log(slog(rho))])


def fit_envelope(grid, counts, *, fixed_s=None, penalty=1e-3, at_origin=True):
    """Smallest envelope ``M (r/rho)^s slog(r)^alpha slog(rho)^beta`` above the given counts.

    Linear program in ``(log M, s, alpha, beta) >= 0`` minimising
    ``log M + penalty (s + alpha + beta)`` subject to the envelope lying on or
    above every count. ``residual`` is the mean log-slack.
    """
    grid = [(float(r), float(rho)) for r, rho in grid]
    counts = [int(c) for c in counts]
    if len(grid) != len(counts):
        raise ValueError("grid and counts differ in length")
    if not grid:
        return HomogeneityParams(1.0, 0.0 if fixed_s is None else float(fixed_s), 0.0, 0.0, 0.0,
                                 at_origin, [], [], 0.0)
    feats = envelope_features(grid)
    y = np.log(np.maximum(counts, 1))
    cost = np.array([1.0, penalty, penalty, penalty])
    bounds = [(0, None)] * 4
    if fixed_s is not None:
        bounds[1] = (float(fixed_s), float(fixed_s))
    sol = linprog(cost, A_ub=-feats, b_ub=-y, bounds=bounds, method="highs")
    if sol.status != 0:
        raise RuntimeError(f"homogeneity LP failed: {sol.message}")
    u, s, a, b = (max(0.0, float(v)) for v in sol.x)
    if fixed_s is not None:
        s = float(fixed_s)
    fitted = feats @ np.array([u, s, a, b])
    u += max(0.0, float(np.max(y - fitted)))  # absorb solver tolerance so the envelope is exact
    slack = feats @ np.array([u, s, a, b]) - y
    objective = u + penalty * (s + a + b)
    return HomogeneityParams(float(np.exp(u)), s, a, b, float(slack.mean()), at_origin, grid, counts,
                             float(objective))


def fit_homogeneity(z: DifferenceSet, at_origin=True, grid=None, *, R=None, fixed_s=None,
                    penalty=1e-3, max_centers=64, seed=0):
    """Fit ``N(r, rho) <= M (r/rho)^s slog(r)^alpha slog(rho)^beta`` on measured covering numbers.

    Counts come from greedy covers of ``B_r(c) ∩ Z`` at radius ``rho``,
    with ``c = 0`` when ``at_origin`` and otherwise the maximum over up to
    ``max_centers`` centres (the origin plus a seeded subsample). Pairs with
    ``rho`` below the data resolution are dropped, since there every
    element needs its own ball. See :func:`fit_envelope` for the program.
    """
    from .metric import enclosing_radius

    if R is None:
        R = enclosing_radius(z)
    if grid is None:
        grid = dyadic_grid(z, R)
    grid = [(float(r), float(rho)) for r, rho in grid]
    for r, rho in grid:
        if not 0 < rho < r:
            raise ValueError(f"grid pair ({r}, {rho}) violates 0 < rho < r")
    res = z.resolution
    grid = [(r, rho) for r, rho in grid if rho >= res * (1 - 1e-12)]
    counts = _count_grid(z, grid, at_origin, max_centers, seed) if grid else []
    return fit_envelope(grid, counts, fixed_s=fixed_s, penalty=penalty, at_origin=at_origin)


def check_dbaa(params: HomogeneityParams, dim: DimensionEstimate, tolerance=0.3):
    """Finite-scale check that the box-counting slope of ``X - X`` is at most ``s + beta``."""
    if not params.at_origin:
        raise UsageError("check_dbaa needs parameters fitted at the origin")
    if dim.kind != "box_counting":
        raise UsageError("check_dbaa needs a box-counting estimate")
    return bool(dim.value <= params.beta + params.s + tolerance)
