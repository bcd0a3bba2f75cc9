"""Finite-scale checks of the prevalence argument for probe maps into R^N.

For a probe map ``L`` and offset ``f`` the bad event at scale ``n`` is

    Q_n = {L : |(f + L)(z)| <= n^-delta 2^-n for some z in Z_n},

with ``Z_n`` the closed annulus ``R 2^-(n+1) <= ||z|| <= R 2^-n`` of the
difference set. If the ``mu(Q_n)`` are summable, almost every ``L`` avoids
``Q_n`` beyond some ``n_L``, which gives the slog-corrected lower bound on
small distances. A Hoelder lower bound covers the remaining large distances.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import floor, inf, isfinite

import numpy as np

from .covering import greedy_cover
from .embedding import DistortionReport, iter_pairs
from .errors import InsufficientDataError
from .functionals import annulus_bounds, stack_frames
from .metric import DUAL_NORM, PointCloud, difference_set, enclosing_radius, norm
from .probe import SubspaceSequence, lipschitz_bound, sample_matrices
from .slog import slog

DEFAULT_QUANTILE = 0.99


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    delta: float
    gamma: float
    N: int
    theta: float = 0.5
    trials: int = 200
    seed: int = 0
    f_offset: np.ndarray = None  # (N, dim) fixed map added to every probe

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.gamma > 1:
            raise ValueError("gamma must exceed 1")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError("trials must be a positive integer")

    def with_N(self, N):
        f = None if self.f_offset is None else _pad_offset(self.f_offset, N)
        return ExperimentConfig(self.delta, self.gamma, int(N), self.theta, self.trials, self.seed, f)

    def to_dict(self):
        return {
            "delta": self.delta,
            "gamma": self.gamma,
            "N": int(self.N),
            "theta": self.theta,
            "trials": int(self.trials),
            "seed": int(self.seed),
            "f_offset": None if self.f_offset is None else np.asarray(self.f_offset).tolist(),
        }


def _pad_offset(f, N):
    f = np.asarray(f, dtype=np.float64)
    out = np.zeros((N, f.shape[1]))
    out[: min(N, f.shape[0])] = f[:N]
    return out


@dataclass(frozen=True, eq=False)
class ProbeContext:
    """Difference set, enclosing radius, frames and subspaces of one cloud."""

    cloud: PointCloud
    z: object
    R: float
    frames: list
    seq: SubspaceSequence

    @classmethod
    def build(cls, cloud, n_max=None):
        z = difference_set(cloud)
        if not np.isfinite(z.resolution):
            raise InsufficientDataError("need at least two distinct points")
        R = enclosing_radius(z)
        frames = stack_frames(z, R, n_max)
        return cls(cloud, z, R, frames, SubspaceSequence.from_frames(frames))

    @property
    def scales(self):
        return self.seq.scales

    def annulus(self, n):
        lo, hi = annulus_bounds(self.R, n)
        return np.flatnonzero((self.z.norms >= lo) & (self.z.norms <= hi))


def _offset(cfg, dim):
    if cfg.f_offset is None:
        return np.zeros((cfg.N, dim))
    f = np.asarray(cfg.f_offset, dtype=np.float64)
    if f.shape != (cfg.N, dim):
        raise ValueError(f"f_offset must have shape {(cfg.N, dim)}, got {f.shape}")
    return f


def offset_norm(f, norm_kind):
    """Bound ``sqrt(sum_i ||f_i||_*^2)`` on ``||f||`` from the ambient norm into l2."""
    f = np.atleast_2d(np.asarray(f, dtype=np.float64))
    return float(np.sqrt(np.sum(norm(f, DUAL_NORM[norm_kind]) ** 2)))


def _exponents(params):
    if isinstance(params, dict):
        return float(params["s"]), float(params["alpha"]), float(params["beta"])
    if isinstance(params, (tuple, list)):
        s, a, b = params
        return float(s), float(a), float(b)
    return float(params.s), float(params.alpha), float(params.beta)


def tail_exponent(params, cfg, N=None):
    """``delta s + alpha + beta + (alpha + beta) N / 2 + gamma N - delta N``."""
    s, a, b = _exponents(params)
    N = cfg.N if N is None else N
    return cfg.delta * s + a + b + (a + b) / 2 * N + cfg.gamma * N - cfg.delta * N


@dataclass(frozen=True)
class QnEstimate:
    n: int
    empirical_measure: float
    theoretical_bound: float
    annulus_size: int
    stderr: float = 0.0
    recomputed_bound: float = 1.0
    k_n: int = 0
    d_n: int = 0
    threshold: float = 0.0
    empty: bool = False

    def to_dict(self):
        return dict(self.__dict__)


def _probe_stack(ctx, cfg):
    return sample_matrices(ctx.seq, cfg.gamma, cfg.N, cfg.trials, cfg.seed)


def _hits(ctx, cfg, n, mats):
    idx = ctx.annulus(n)
    if idx.size == 0:
        return idx, np.zeros(mats.shape[0], dtype=bool)
    t = n ** (-cfg.delta) * 2.0 ** (-n)
    f = _offset(cfg, ctx.z.dim)
    vals = (mats + f) @ ctx.z.elements[idx].T  # (trials, N, |Z_n|)
    return idx, np.linalg.norm(vals, axis=1).min(axis=1) <= t


def _recomputed(ctx, cfg, n, idx):
    """Union bound over a ``t``-cover of ``Z_n`` with the small-ball estimate at each centre."""
    t = n ** (-cfg.delta) * 2.0 ** (-n)
    cover = greedy_cover(ctx.z.elements[idx], t, ctx.z.norm_kind)
    centers = ctx.z.elements[idx[cover.center_indices]]
    fr = ctx.frames[ctx.scales.index(n)]
    d_n = ctx.seq.dim_at(n)
    K = 1.0 + offset_norm(_offset(cfg, ctx.z.dim), ctx.z.norm_kind) + lipschitz_bound(ctx.seq, cfg.gamma, cfg.N)
    w = np.abs(centers @ fr.weights.T).max(axis=1)
    terms = np.minimum(1.0, n ** cfg.gamma * d_n * K * t / w) ** cfg.N
    return float(min(1.0, terms.sum())), len(cover), d_n


def qn_table(ctx, cfg, params, scales=None, mats=None):
    """:class:`QnEstimate` for every scale, sharing one stack of sampled maps."""
    if mats is None:
        mats = _probe_stack(ctx, cfg)
    scales = ctx.scales if scales is None else list(scales)
    expo = tail_exponent(params, cfg)
    rows, C = [], None
    for n in scales:
        idx, hits = _hits(ctx, cfg, n, mats)
        p = float(hits.mean())
        se = float(np.sqrt(p * (1 - p) / mats.shape[0]))
        t = n ** (-cfg.delta) * 2.0 ** (-n)
        if idx.size == 0:
            rows.append(QnEstimate(n, 0.0, 0.0, 0, 0.0, 0.0, 0, ctx.seq.dim_at(n), t, True))
            continue
        if C is None:
            # calibrate at the first nonempty scale; a zero count is replaced by one hit
            C = max(p, 1.0 / mats.shape[0]) / n ** expo
        rec, k_n, d_n = _recomputed(ctx, cfg, n, idx)
        rows.append(QnEstimate(n, p, float(min(1.0, C * n ** expo)), int(idx.size), se, rec, k_n, d_n, t))
    return rows


def estimate_qn(x, cfg, n, params, ctx=None):
    """Monte-Carlo ``mu(Q_n)`` at one scale, with the bound calibrated at the first nonempty scale."""
    ctx = ctx or ProbeContext.build(x)
    first = next((m for m in ctx.scales if ctx.annulus(m).size), n)
    scales = sorted({first, n})
    table = qn_table(ctx, cfg, params, scales)
    return table[scales.index(n)]


def empirical_slope(estimates):
    """Slope of ``log mu(Q_n)`` against ``log n`` over scales with a nonzero estimate, or ``None``."""
    pts = [(e.n, e.empirical_measure) for e in estimates if e.empirical_measure > 0 and not e.empty]
    if len(pts) < 2:
        return None
    lx = np.log([p[0] for p in pts])
    ly = np.log([p[1] for p in pts])
    if np.ptp(lx) == 0:
        return None
    return float(np.polyfit(lx, ly, 1)[0])


def growth_exponent(ns, values):
    """Least-squares slope of ``log value`` against ``log n`` over positive values, or ``None``."""
    pts = [(n, v) for n, v in zip(ns, values) if v > 0]
    if len(pts) < 2 or len({p[0] for p in pts}) < 2:
        return None
    return float(np.polyfit(np.log([p[0] for p in pts]), np.log([p[1] for p in pts]), 1)[0])


def _frac(v):
    return Fraction(str(float(v)))


def required_dimension(s, a, b, gamma, delta, extra=0):
    """Smallest integer ``N > s`` with ``((a+b)/2 + gamma) N + 1 + extra < delta (N - s)``, exactly.

    Returns ``inf`` when ``delta <= (a+b)/2 + gamma`` (no ``N`` works).
    """
    s, a, b, g, d, e = (_frac(v) for v in (s, a, b, gamma, delta, extra))
    slope = d - (a + b) / 2 - g
    if slope <= 0:
        return inf
    # slope N > 1 + extra + d s
    bound = (1 + e + d * s) / slope
    N = max(floor(bound) + 1, floor(s) + 1, 1)
    while not ((a + b) / 2 + g) * N + 1 + e < d * (N - s):
        N += 1
    return int(N)


@dataclass(frozen=True)
class Summability:
    exponent: float
    summable: bool
    N_required: object  # int or inf
    exponent_without_constant: float = 0.0
    N_required_full: object = inf
    empirical_slope: object = None
    hypothesis_ok: bool = True
    recomputed_exponent: object = None  # growth(k_n) + N (growth(d_n) + gamma - delta)

    def __iter__(self):
        return iter((self.exponent, self.summable, self.N_required))

    def to_dict(self):
        return dict(self.__dict__)


def check_summability(estimates, cfg, params):
    """Exponent of the ``mu(Q_n)`` bound, whether it is below -1, and the smallest admissible ``N``.

    ``N_required`` solves the ratio inequality
    ``((a+b)/2 + gamma) N + 1 < delta (N - s)`` by exact rational scan;
    ``N_required_full`` also carries the constant ``a + b`` of the exponent.
    """
    s, a, b = _exponents(params)
    expo = tail_exponent(params, cfg)
    ok = cfg.delta > (a + b) / 2 + cfg.gamma
    live = [e for e in (estimates or []) if not e.empty]
    gk = growth_exponent([e.n for e in live], [e.k_n for e in live])
    gd = growth_exponent([e.n for e in live], [e.d_n for e in live])
    recomputed = None
    if gk is not None and gd is not None:
        recomputed = float(gk + cfg.N * (gd + cfg.gamma - cfg.delta))
    return Summability(
        exponent=float(expo),
        summable=bool(ok and expo < -1),
        N_required=required_dimension(s, a, b, cfg.gamma, cfg.delta),
        exponent_without_constant=float(expo - a - b),
        N_required_full=required_dimension(s, a, b, cfg.gamma, cfg.delta, extra=a + b),
        empirical_slope=empirical_slope(estimates or []),
        hypothesis_ok=bool(ok),
        recomputed_exponent=recomputed,
    )


def _matrix(L):
    if hasattr(L, "matrix"):
        return np.asarray(L.matrix, dtype=np.float64)
    return np.atleast_2d(np.asarray(L, dtype=np.float64))


def _pairs(x):
    I, J, D = [], [], []
    for i, js, diffs in iter_pairs(x.points):
        I.append(np.full(js.size, i))
        J.append(js)
        D.append(diffs)
    if not I:
        return np.zeros(0, int), np.zeros(0, int), np.zeros((0, x.dim))
    return np.concatenate(I), np.concatenate(J), np.vstack(D)


def _images(matrix, diffs, d):
    img = np.linalg.norm(diffs @ matrix.T, axis=-1) if matrix.shape[0] else np.zeros(diffs.shape[:-1])
    scale = np.linalg.norm(matrix) if matrix.size else 0.0
    zero = img <= 1e-13 * scale * d
    return np.where(zero, 0.0, img)


def wem_constants(matrices, x, delta):
    """Lower constants ``max ||z|| / (|Lz| slog(||z||)^delta)`` for a stack of maps (``inf`` if not injective)."""
    _, _, diffs = _pairs(x)
    d = norm(diffs, x.norm_kind)
    keep = d > 0
    diffs, d = diffs[keep], d[keep]
    out = []
    for m in np.asarray(matrices):
        img = _images(m, diffs, d)
        with np.errstate(divide="ignore"):
            r = np.where(img > 0, d / (img * slog(d) ** delta), inf)
        out.append(float(r.max()) if r.size else 1.0)
    return np.array(out)


def verify_wem(L, x: PointCloud, delta, budget=None):
    """Exhaustive pairwise check of ``||z|| / (C slog(||z||)^delta) <= |Lz| <= C ||z||``."""
    m = _matrix(L)
    I, J, diffs = _pairs(x)
    d = norm(diffs, x.norm_kind) if diffs.size else np.zeros(0)
    keep = d > 0
    skipped = int((~keep).sum())
    I, J, diffs, d = I[keep], J[keep], diffs[keep], d[keep]
    if d.size == 0:
        return DistortionReport(float(delta), 1.0, 1.0, (-1, -1), True, 0, skipped, 0, {"injective": True})
    img = _images(m, diffs, d)
    with np.errstate(divide="ignore"):
        ratio = np.where(img > 0, d / (img * slog(d) ** delta), inf)
    w = int(np.argmax(ratio))
    lower, upper = float(ratio[w]), float(np.max(img / d))
    injective = bool(np.all(img > 0))
    ok = injective and isfinite(lower)
    if budget is not None:
        ok = ok and lower <= budget
    details = {"injective": injective, "budget": budget, "non_injective_pairs": int(np.sum(img == 0))}
    return DistortionReport(float(delta), lower, upper, (int(I[w]), int(J[w])), bool(ok), int(d.size),
                            skipped, int(np.sum(img == 0)), details)


def holder_threshold(k, d_B):
    """Admissible Hoelder exponents lie in ``(0, (k - d_B) / (k (1 + d_B)))``; ``0`` when ``k <= d_B``."""
    if k <= d_B:
        return 0.0
    return float((k - d_B) / (k * (1 + d_B)))


@dataclass(frozen=True)
class HolderReport:
    C: float
    passed: bool
    theta: float
    threshold: object = None
    theta_admissible: object = None

    def __iter__(self):
        return iter((self.C, self.passed))

    def to_dict(self):
        return dict(self.__dict__)


def verify_holder(L, x: PointCloud, theta, d_B=None):
    """Realised ``C = max ||z|| / |Lz|^theta``; passes iff finite."""
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    m = _matrix(L)
    _, _, diffs = _pairs(x)
    d = norm(diffs, x.norm_kind) if diffs.size else np.zeros(0)
    keep = d > 0
    diffs, d = diffs[keep], d[keep]
    if d.size == 0:
        C = 1.0
    else:
        img = _images(m, diffs, d)
        with np.errstate(divide="ignore"):
            C = float(np.max(np.where(img > 0, d / img ** theta, inf)))
    thr = None if d_B is None else holder_threshold(m.shape[0], d_B)
    adm = None if thr is None else bool(theta < thr)
    return HolderReport(C, bool(isfinite(C)), float(theta), thr, adm)


def scale_threshold(L, x, delta, f=None, ctx=None):
    """Smallest ``n_L`` such that ``|(f+L)(z)| >= n^-delta 2^-n`` on every annulus ``Z_n`` with ``n >= n_L``.

    Only the scales of the data are scanned; ``n_L = max scale + 1`` means the
    last nonempty annulus already fails.
    """
    ctx = ctx or ProbeContext.build(x)
    m = _matrix(L)
    f = np.zeros_like(m) if f is None else np.asarray(f, dtype=np.float64)
    worst = 0
    for n in ctx.scales:
        idx = ctx.annulus(n)
        if idx.size == 0:
            continue
        vals = np.linalg.norm(ctx.z.elements[idx] @ (m + f).T, axis=1)
        if np.any(vals < n ** (-delta) * 2.0 ** (-n)):
            worst = n
    return worst + 1


@dataclass(frozen=True)
class TwoRegimeResult:
    passed: bool
    n_L: int
    split: float
    small_constant: float
    holder_constant: float
    large_constant: float
    combined_constant: float
    n_small: int
    n_large: int

    def to_dict(self):
        return dict(self.__dict__)


def two_regime_check(L, x, delta, theta, n_L, R=None):
    """Assemble the slog lower bound from a small-distance and a Hoelder large-distance regime.

    Pairs with ``||z|| <= R 2^-n_L`` use their realised slog constant. For
    the rest, ``|Lz| >= (||z|| / C_H)^(1/theta) >= (R 2^-n_L / C_H)^(1/theta)``
    gives the constant ``max ||z|| slog(||z||)^-delta / (R 2^-n_L / C_H)^(1/theta)``.
    Passes iff both constants are finite and the realised constant over all
    pairs does not exceed the larger of the two.
    """
    m = _matrix(L)
    _, _, diffs = _pairs(x)
    d = norm(diffs, x.norm_kind) if diffs.size else np.zeros(0)
    keep = d > 0
    diffs, d = diffs[keep], d[keep]
    if R is None:
        R = enclosing_radius(difference_set(x))
    split = float(np.ldexp(R, -int(n_L)))
    if d.size == 0:
        return TwoRegimeResult(True, int(n_L), split, 1.0, 1.0, 1.0, 1.0, 0, 0)
    img = _images(m, diffs, d)
    with np.errstate(divide="ignore"):
        ratio = np.where(img > 0, d / (img * slog(d) ** delta), inf)
        holder = float(np.max(np.where(img > 0, d / img ** theta, inf)))
    small = d <= split
    c_small = float(ratio[small].max()) if small.any() else 0.0
    if (~small).any():
        floor_img = (split / holder) ** (1.0 / theta) if isfinite(holder) else 0.0
        top = float(np.max(d[~small] / slog(d[~small]) ** delta))
        c_large = top / floor_img if floor_img > 0 else inf
    else:
        c_large = 0.0
    combined = float(ratio.max())
    bound = max(c_small, c_large)
    ok = isfinite(c_small) and isfinite(c_large) and combined <= bound * (1 + 1e-12)
    return TwoRegimeResult(bool(ok), int(n_L), split, c_small, holder, c_large, combined,
                           int(small.sum()), int((~small).sum()))


@dataclass(frozen=True)
class PerturbationEvent:
    n: int
    element: int
    center: int
    value: float
    center_value: float
    bound: float

    @property
    def holds(self):
        return self.center_value <= self.bound * (1 + 1e-12)


def perturbation_events(L, ctx, delta, gamma, f=None):
    """Near-zero events ``|(f+L)(z)| <= t_n`` and the bound ``(1 + ||f|| + K') t_n`` at their cover centre."""
    m = _matrix(L)
    k = m.shape[0]
    f = np.zeros_like(m) if f is None else np.asarray(f, dtype=np.float64)
    K = 1.0 + offset_norm(f, ctx.z.norm_kind) + lipschitz_bound(ctx.seq, gamma, k)
    events = []
    for n in ctx.scales:
        idx = ctx.annulus(n)
        if idx.size == 0:
            continue
        t = n ** (-delta) * 2.0 ** (-n)
        vals = np.linalg.norm(ctx.z.elements[idx] @ (m + f).T, axis=1)
        bad = np.flatnonzero(vals <= t)
        if bad.size == 0:
            continue
        pts = ctx.z.elements[idx]
        cover = greedy_cover(pts, t, ctx.z.norm_kind)
        centers = pts[cover.center_indices]
        for b in bad:
            gaps = norm(centers - pts[b], ctx.z.norm_kind)
            c = int(np.argmin(gaps))
            cval = float(np.linalg.norm((m + f) @ centers[c]))
            events.append(PerturbationEvent(n, int(idx[b]), int(idx[cover.center_indices[c]]), float(vals[b]), cval, K * t))
    return events


def pass_rate_budget(constants, quantile=DEFAULT_QUANTILE):
    """Empirical ``quantile`` of the lower constants (order statistic, ``inf`` allowed)."""
    c = np.sort(np.asarray(constants, dtype=np.float64))
    if c.size == 0:
        return inf
    i = min(c.size - 1, max(0, int(np.ceil(quantile * c.size)) - 1))
    return float(c[i])


@dataclass
class SweepResult:
    config: ExperimentConfig
    params: object
    qn: list
    summability: Summability
    N_values: list
    budget: float
    wem_constants: dict = field(default_factory=dict)
    pass_rates: dict = field(default_factory=dict)
    holder: dict = field(default_factory=dict)

    @property
    def monotone(self):
        rates = [self.pass_rates[N] for N in self.N_values]
        return all(b >= a for a, b in zip(rates, rates[1:]))

    def to_dict(self):
        return {
            "config": self.config.to_dict(),
            "params": {k: v for k, v in zip(("s", "alpha", "beta"), _exponents(self.params))},
            "qn": [q.to_dict() for q in self.qn],
            "summability": self.summability.to_dict(),
            "N_values": [int(n) for n in self.N_values],
            "budget": self.budget,
            "pass_rates": {str(k): v for k, v in self.pass_rates.items()},
            "monotone": self.monotone,
            "holder": self.holder,
        }


def prevalence_sweep(x, cfg, params, N_values=None, quantile=DEFAULT_QUANTILE, d_B=None, ctx=None):
    """``mu(Q_n)`` table, summability and lower-bound pass-rates across target dimensions under shared seeds.

    The budget is the ``quantile`` of the lower constants at the first ``N``
    and is reused for the others. Rows are drawn per index from the same
    streams, so a larger ``N`` extends the smaller maps and the lower
    constants can only decrease.
    """
    ctx = ctx or ProbeContext.build(x)
    N_values = [cfg.N] if N_values is None else [int(n) for n in N_values]
    big = max(N_values)
    mats_all = sample_matrices(ctx.seq, cfg.gamma, big, cfg.trials, cfg.seed)
    c0 = cfg.with_N(N_values[0])
    qn = qn_table(ctx, c0, params, mats=mats_all[:, : N_values[0]])
    summ = check_summability(qn, c0, params)
    consts, rates, budget = {}, {}, None
    for N in N_values:
        c = wem_constants(mats_all[:, :N], x, cfg.delta)
        if budget is None:
            budget = pass_rate_budget(c, quantile)
        consts[N] = c
        rates[N] = float(np.mean(np.isfinite(c) & (c <= budget)))
    holder = {}
    if d_B is not None:
        thr = holder_threshold(N_values[0], d_B)
        holder = {"threshold": thr, "d_B": float(d_B)}
    return SweepResult(c0, params, qn, summ, N_values, float(budget), consts, rates, holder)
