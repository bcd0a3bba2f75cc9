"""Random linear maps built from per-scale unit balls of functionals.

Each scale frame spans a subspace ``V_n`` of functionals. With a basis
``B_n`` (rows), the unit ball of ``V_n`` is identified with

    U_n = {c in R^{d_n} : ||c^T B_n||_* <= 1}

and a probe row is ``L_i = sum_n n^-gamma c_{i,n}^T B_n`` with the
``c_{i,n}`` independent and uniform on ``U_n``.

Sampling ``U_n``:

* sup ambient, dual l1: the basis rows are signed coordinate functionals
  on distinct coordinates, so ``U_n`` is exactly the l1 ball;
* euclidean ambient: ``U_n`` is the ellipsoid ``c^T B B^T c <= 1``;
* anything else (and ``method="rejection"``): rejection from the bounding
  box of ``U_n``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import qr, solve_triangular

from .errors import ConditioningError, DegenerateInputError, OracleUnavailableError
from .metric import DUAL_NORM, norm

MEMBERSHIP_TOL = 1e-10
MIN_ACCEPTANCE = 1e-6
RANK_RTOL = 1e-10


def _stream(seed, *path):
    """Generator for the sub-stream ``path`` of ``seed`` (an int or a tuple of ints)."""
    base = list(seed) if isinstance(seed, (tuple, list)) else [int(seed)]
    return np.random.default_rng(np.random.SeedSequence([*base, *path]))


def reduce_rank(weights, rtol=RANK_RTOL):
    """Linearly independent subset of the rows of ``weights`` by column-pivoted QR.

    Returns ``(basis, kept)`` with ``basis = weights[kept]``; ``kept`` is sorted.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.shape[0] == 0:
        return w, np.zeros(0, np.int64)
    _, r, piv = qr(w.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > rtol * diag[0])) if diag.size and diag[0] > 0 else 0
    kept = np.sort(piv[:rank])
    return w[kept], kept


@dataclass(frozen=True, eq=False)
class UnitBallSampler:
    """Uniform sampler on ``U = {c : ||c^T basis||_* <= 1}``."""

    basis: np.ndarray
    norm_kind: str
    method: str = "auto"
    half_widths: np.ndarray = field(init=False)
    chol: np.ndarray = field(init=False)
    resolved: str = field(init=False)

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=np.float64)
        if b.ndim != 2 or b.shape[0] == 0:
            raise DegenerateInputError("unit ball of an empty frame")
        g = b @ b.T
        try:
            chol = np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            raise ConditioningError("basis is linearly dependent; rank-reduce first") from None
        # c = (B B^T)^-1 B w, so |c_j| <= ||row_j||_primal over ||w||_* <= 1
        rows = np.linalg.solve(g, b)
        h = norm(rows, self.norm_kind)
        method = self.method
        if method == "auto":
            if self.norm_kind == "euclidean":
                method = "ellipsoid"
            elif self.norm_kind == "sup" and self._is_signed_coordinates(b):
                method = "l1"
            else:
                method = "rejection"
        if method not in ("ellipsoid", "l1", "rejection"):
            raise ValueError(f"unknown sampling method {self.method!r}")
        if method == "ellipsoid" and self.norm_kind != "euclidean":
            raise ValueError("ellipsoid sampling needs a euclidean ambient")
        if method == "l1" and not (self.norm_kind == "sup" and self._is_signed_coordinates(b)):
            raise ValueError("l1-ball sampling needs signed coordinate functionals in a sup ambient")
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "half_widths", h)
        object.__setattr__(self, "chol", chol)
        object.__setattr__(self, "resolved", method)

    @staticmethod
    def _is_signed_coordinates(b):
        nz = b != 0
        if not np.all(nz.sum(axis=1) == 1) or not np.all(np.abs(b[nz]) == 1):
            return False
        cols = np.argmax(nz, axis=1)
        return np.unique(cols).size == cols.size

    @property
    def dim(self):
        return self.basis.shape[0]

    def dual_norms(self, coeffs):
        return norm(np.atleast_2d(coeffs) @ self.basis, DUAL_NORM[self.norm_kind])

    def sample(self, rng, size):
        """``(size, d)`` uniform draws; rejection draws also return the acceptance rate."""
        d = self.dim
        if self.resolved == "l1":
            e = rng.exponential(size=(size, d + 1))
            signs = rng.choice(np.array([-1.0, 1.0]), size=(size, d))
            return signs * e[:, :d] / e.sum(axis=1, keepdims=True)
        if self.resolved == "ellipsoid":
            g = rng.standard_normal((size, d))
            g /= np.linalg.norm(g, axis=1, keepdims=True)
            u = g * rng.uniform(size=(size, 1)) ** (1.0 / d)
            # ||B^T c||_2 = ||chol^T c||_2, so solve chol^T c = u
            return solve_triangular(self.chol.T, u.T, lower=False).T
        return self.sample_rejection(rng, size)[0]

    def sample_rejection(self, rng, size, batch=None):
        """Rejection from the bounding box; returns ``(draws, acceptance_rate)``."""
        d, h = self.dim, self.half_widths
        batch = batch or max(1024, 4 * size)
        out, proposed, accepted = [], 0, 0
        while accepted < size:
            c = rng.uniform(-1.0, 1.0, size=(batch, d)) * h
            ok = self.dual_norms(c) <= 1.0
            proposed += batch
            accepted += int(ok.sum())
            out.append(c[ok])
            if proposed >= 1_000_000 and accepted < MIN_ACCEPTANCE * proposed:
                raise ConditioningError(
                    f"rejection acceptance {accepted / proposed:.2e} below {MIN_ACCEPTANCE:g}; basis badly conditioned")
        return np.concatenate(out)[:size], accepted / proposed


def sample_unit_ball(frame, rng, size=None, method="auto"):
    """Uniform coefficient vector(s) on the unit ball of ``span(frame functionals)``.

    ``frame`` is a :class:`~almostlip.functionals.ScaleFrame` (rank-reduced
    here) or a :class:`UnitBallSampler`. Returns ``None`` for an empty frame.
    """
    if isinstance(frame, UnitBallSampler):
        sampler = frame
    else:
        if frame.m_n == 0:
            return None
        basis, _ = reduce_rank(frame.weights)
        sampler = UnitBallSampler(basis, frame.norm_kind, method)
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    draws = sampler.sample(rng, 1 if size is None else int(size))
    return draws[0] if size is None else draws


@dataclass(frozen=True, eq=False)
class SubspaceSequence:
    """Rank-reduced bases ``B_n`` of the frame spans, one per scale."""

    frames: list
    bases: list
    d: list
    norm_kind: str
    method: str = "auto"
    samplers: dict = field(default_factory=dict)

    @classmethod
    def from_frames(cls, frames, method="auto"):
        if not frames:
            raise DegenerateInputError("no frames")
        kind = frames[0].norm_kind
        bases, dims, samplers = [], [], {}
        for fr in frames:
            b, _ = reduce_rank(fr.weights) if fr.m_n else (np.zeros((0, fr.centers.shape[1])), None)
            bases.append(b)
            dims.append(int(b.shape[0]))
            if b.shape[0]:
                samplers[fr.n] = UnitBallSampler(b, kind, method)
        return cls(list(frames), bases, dims, kind, method, samplers)

    @property
    def scales(self):
        return [fr.n for fr in self.frames]

    @property
    def ambient_dim(self):
        return self.bases[0].shape[1]

    def dim_at(self, n):
        return self.d[self.scales.index(n)]

    def basis_at(self, n):
        return self.bases[self.scales.index(n)]

    def m_at(self, n):
        return self.frames[self.scales.index(n)].m_n


def lipschitz_bound(seq, gamma, k, n_max=None):
    """``sqrt(k) sum_n n^-gamma`` over scales with ``d_n > 0``: a bound on ``||L||`` into l2 for every probe map."""
    ns = [n for n, d in zip(seq.scales, seq.d) if d and (n_max is None or n <= n_max)]
    return float(np.sqrt(k) * sum(n ** (-gamma) for n in ns))


def truncation_budget(seq, gamma, n_max):
    """Row-norm mass ``sum n^-gamma sqrt(m_n)`` of the active scales beyond ``n_max``."""
    return float(sum(n ** (-gamma) * np.sqrt(fr.m_n) for n, fr in zip(seq.scales, seq.frames) if n > n_max))


@dataclass(frozen=True, eq=False)
class ProbeSample:
    gamma: float
    k: int
    coefficients: list  # coefficients[i][n] for active scales n
    matrix: np.ndarray
    seed: object
    n_max: int

    def apply(self, v):
        return np.asarray(v, dtype=np.float64) @ self.matrix.T

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "k": self.k,
            "seed": list(self.seed) if isinstance(self.seed, tuple) else self.seed,
            "n_max": self.n_max,
            "coefficients": [{str(n): c.tolist() for n, c in row.items()} for row in self.coefficients],
            "matrix": self.matrix.tolist(),
        }


def _check_gamma(gamma):
    if not gamma > 1:
        raise ValueError("gamma must exceed 1")


def sample_probe(seq: SubspaceSequence, gamma, k, n_max=None, seed=0):
    """One probe map with ``k`` rows; row ``i`` draws from the sub-stream ``(seed, i)``.

    Rows are independent of ``k``, so the first ``k`` rows of a ``k' > k``
    sample under the same seed coincide with the ``k``-row sample.
    """
    _check_gamma(gamma)
    if k < 1:
        raise ValueError("k must be >= 1")
    n_max = max(seq.scales) if n_max is None else int(n_max)
    coeffs, rows = [], []
    for i in range(k):
        rng = _stream(seed, i)
        row = np.zeros(seq.ambient_dim)
        per = {}
        for n, b in zip(seq.scales, seq.bases):
            if n > n_max or b.shape[0] == 0:
                continue
            c = seq.samplers[n].sample(rng, 1)[0]
            per[n] = c
            row += n ** (-gamma) * (c @ b)
        coeffs.append(per)
        rows.append(row)
    matrix = np.vstack(rows)
    matrix.setflags(write=False)
    return ProbeSample(float(gamma), int(k), coeffs, matrix, seed, n_max)


def sample_matrices(seq, gamma, k, trials, seed=0, n_max=None):
    """``(trials, k, dim)`` stack of independent probe maps, drawn in batches.

    Row ``i`` of every trial comes from the stream ``(seed, i)``, one batched
    draw of ``trials`` coefficients per scale. Adding rows therefore leaves
    the earlier rows unchanged. The streams are consumed differently from
    :func:`sample_probe`, so the two do not reproduce each other.
    """
    _check_gamma(gamma)
    n_max = max(seq.scales) if n_max is None else int(n_max)
    out = np.zeros((int(trials), int(k), seq.ambient_dim))
    for i in range(k):
        rng = _stream(seed, i)
        for n, b in zip(seq.scales, seq.bases):
            if n > n_max or b.shape[0] == 0:
                continue
            out[:, i, :] += n ** (-gamma) * (seq.samplers[n].sample(rng, trials) @ b)
    return out


@dataclass(frozen=True)
class SmallBallResult:
    empirical: float
    bound: float
    variant_bound: float
    stderr: float
    trials: int
    g_value: float
    d_n: int

    def within(self, sigmas=3.0):
        return self.empirical <= self.bound + sigmas * self.stderr

    def to_dict(self):
        return dict(self.__dict__)


def small_ball_bounds(n, gamma, d_n, eps, g_value, k):
    """Small-ball bound ``(n^gamma d_n eps / |g(x)|)^k`` and the variant with the interval length ``2 eps``.

    Both are capped at 1 before the power; the undoubled form is already an upper
    bound since the marginal density of a uniform symmetric convex body along
    ``g`` is at most ``d_n / (2 max|g(x)|)``.
    """
    base = n ** gamma * d_n * eps / g_value
    return float(min(1.0, base) ** k), float(min(1.0, 2.0 * base) ** k)


def verify_lemma_1_6(seq, gamma, k, x, f=None, n=1, eps=0.1, trials=1000, seed=0, n_max=None):
    """Monte-Carlo estimate of ``mu{L : |(f + L)(x)| < eps}`` against the small-ball bound at scale ``n``.

    ``g`` is the frame functional at scale ``n`` maximising ``|g(x)|``.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    x = np.asarray(x, dtype=np.float64).ravel()
    if n not in seq.scales or seq.dim_at(n) == 0:
        raise OracleUnavailableError(f"scale {n} has no functionals")
    fr = seq.frames[seq.scales.index(n)]
    gvals = np.abs(fr.weights @ x)
    g = float(gvals.max())
    if g == 0:
        raise OracleUnavailableError("every frame functional vanishes on x")
    offset = np.zeros(k) if f is None else np.asarray(f, dtype=np.float64) @ x
    vals = sample_matrices(seq, gamma, k, trials, seed, n_max) @ x + offset
    hits = np.linalg.norm(vals, axis=1) < eps
    p = float(hits.mean())
    bound, variant = small_ball_bounds(n, gamma, seq.dim_at(n), eps, g, k)
    se = float(np.sqrt(p * (1 - p) / trials))
    return SmallBallResult(p, bound, variant, se, int(trials), g, seq.dim_at(n))
