"""Property tests for the invariants of every data type."""

import json
import math

import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from almostlip.covering import (
    cover_counts,
    cover_is_valid,
    exact_cover_number,
    fit_envelope,
    fit_homogeneity,
    greedy_cover,
)
from almostlip.embedding import build_embedding, verify_lower_bound
from almostlip.functionals import annulus_bounds, annulus_margin, norming_functional, stack_frames
from almostlip.metric import (
    DUAL_NORM,
    FiniteMetricSpace,
    PointCloud,
    difference_set,
    enclosing_radius,
    kuratowski_embed,
    norm,
    pairwise_distances,
)
from almostlip.prevalence import ExperimentConfig, ProbeContext, qn_table, required_dimension
from almostlip.probe import SubspaceSequence, sample_probe
from almostlip.report import canonical_json, to_jsonable
from almostlip.slog import LOG2, certify_slog_bounds, slog

SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
kinds = st.sampled_from(["sup", "euclidean", "l1"])
coord = st.floats(-10, 10, allow_nan=False, allow_infinity=False, width=64)


def clouds(max_n=12, max_dim=3):
    return st.integers(1, max_dim).flatmap(
        lambda d: arrays(np.float64, st.tuples(st.integers(1, max_n), st.just(d)),
                         elements=st.integers(-20, 20).map(lambda v: v / 4)))


@SETTINGS
@given(st.floats(1e-300, 1e300))
def test_slog_symmetry_and_item1(x):
    s = slog(x)
    assert s >= LOG2 * (1 - 1e-15)
    assert math.isclose(s, slog(1 / x), rel_tol=1e-13) or min(x, 1 / x) < 1e-300
    assert abs(math.log(x)) <= s <= LOG2 + abs(math.log(x)) + 1e-12


@SETTINGS
@given(st.floats(1e-3, 1e3), st.floats(0, 4), st.integers(-30, -1), st.integers(1, 30))
def test_certified_constants_are_ordered_and_hold(C, gamma, lo, hi):
    grid = np.geomspace(2.0**lo, 2.0**hi, 300)
    b = certify_slog_bounds(C, gamma, grid)
    assert 0 < b.A_C <= b.B_C and 0 < b.a_gamma <= b.b_gamma and b.c > 0
    assert b.grid_lo > 0
    assert all(b.check(grid).values())


@SETTINGS
@given(clouds(), kinds)
def test_difference_set_invariants(pts, kind):
    x = PointCloud(pts, kind)
    z = difference_set(x)
    assert z.is_negation_closed()
    assert int(np.sum(z.norms == 0)) == 1
    u = np.unique(pts, axis=0).shape[0]
    assert len(z) <= u * u - u + 1
    keys = {tuple(e) for e in z.elements}
    for i in range(x.n):
        for j in range(x.n):
            assert tuple(pts[i] - pts[j] + 0.0) in keys


@SETTINGS
@given(clouds(max_n=8), kinds)
def test_kuratowski_isometry(pts, kind):
    d = pairwise_distances(pts, kind)
    d = np.maximum(d, d.T)
    img = kuratowski_embed(FiniteMetricSpace(d))
    np.testing.assert_allclose(pairwise_distances(img.points, "sup"), d, atol=1e-12)


@SETTINGS
@given(clouds(max_n=40), kinds, st.floats(0.05, 5), st.sampled_from(["fps", "setcover"]))
def test_cover_validity_and_membership(pts, kind, radius, method):
    c = greedy_cover(pts, radius, kind, method=method)
    assert cover_is_valid(pts, c, kind)
    assert np.all((0 <= c.center_indices) & (c.center_indices < len(pts)))
    assert len(set(c.center_indices.tolist())) == len(c)


@SETTINGS
@given(clouds(max_n=40), kinds)
def test_counts_nonincreasing_in_radius(pts, kind):
    radii = np.geomspace(5, 0.05, 9)
    for method in ("fps", "setcover", "best"):
        c = cover_counts(pts, radii, kind, method=method)
        assert np.all(c >= 1) and np.all(c <= len(pts))
    fps = cover_counts(pts, radii, kind)
    assert np.all(np.diff(fps) >= 0)


@SETTINGS
@given(clouds(max_n=12, max_dim=2), kinds, st.floats(0.1, 3))
def test_greedy_against_exact_oracle(pts, kind, radius):
    exact = exact_cover_number(pts, radius, kind)
    fps = len(greedy_cover(pts, radius, kind))
    sc = len(greedy_cover(pts, radius, kind, method="setcover"))
    assert exact <= fps and exact <= sc
    # a farthest-point net at radius r is r-separated, hence no larger than the r/2-cover number
    assert fps <= exact_cover_number(pts, radius / 2 * (1 - 1e-9), kind)


@SETTINGS
@given(st.lists(st.tuples(st.floats(0.01, 4), st.floats(0.02, 0.9), st.integers(1, 500)), min_size=1, max_size=12))
def test_envelope_is_an_upper_envelope(rows):
    grid = [(r, r * q) for r, q, _ in rows]
    counts = [c for _, _, c in rows]
    p = fit_envelope(grid, counts)
    assert p.M >= 1 and p.s >= 0 and p.alpha >= 0 and p.beta >= 0 and p.residual >= -1e-12
    assert all(rho < r for r, rho in p.scale_grid)
    assert p.envelope_holds()


@SETTINGS
@given(clouds(max_n=10), kinds)
def test_fitted_params_envelope_on_data(pts, kind):
    z = difference_set(PointCloud(pts, kind))
    for origin in (True, False):
        assert fit_homogeneity(z, origin, max_centers=8).envelope_holds()


@SETTINGS
@given(arrays(np.float64, st.integers(1, 6), elements=coord), kinds)
def test_norming_functional(z, kind):
    assume(np.any(z != 0))
    f = norming_functional(z, kind)
    assert abs(norm(f.weights, DUAL_NORM[kind]) - 1) <= 1e-10
    assert abs(f.weights @ z - norm(z, kind)) <= 1e-10 * max(1.0, norm(z, kind))


@SETTINGS
@given(clouds(max_n=10), kinds)
def test_frames_and_embedding_invariants(pts, kind):
    x = PointCloud(pts, kind)
    z = difference_set(x)
    R = enclosing_radius(z)
    frames = stack_frames(z, R)  # the constructor verifies cover and annulus invariants
    for fr in frames:
        assert fr.m_n == len(fr.functionals) <= len(fr.center_indices)
        lo, hi = annulus_bounds(R, fr.n)
        if np.any((z.norms >= lo) & (z.norms <= hi)):
            assert annulus_margin(z, fr) >= 0
    emap = build_embedding(x, 2.0, frames)
    for k, a, b in emap.blocks:
        fr = next(f for f in frames if f.n == k)
        np.testing.assert_array_equal(emap.matrix[a:b], k ** -2.0 * fr.weights)
    assert math.isclose(emap.op_norm_bound**2, sum(f.n**-4.0 * f.m_n for f in frames), rel_tol=1e-12, abs_tol=1e-300)
    rng = np.random.default_rng(0)
    v = rng.normal(size=(50, x.dim))
    img = np.linalg.norm(emap.apply(v), axis=1) if emap.target_dim else np.zeros(50)
    assert np.all(img <= emap.op_norm_bound * norm(v, kind) * (1 + 1e-12))
    assert verify_lower_bound(emap, x).violations == 0


@SETTINGS
@given(clouds(max_n=8), kinds, st.floats(1.01, 3), st.integers(1, 4), st.integers(0, 2**31))
def test_probe_sample_invariants(pts, kind, gamma, k, seed):
    x = PointCloud(pts, kind)
    z = difference_set(x)
    assume(np.isfinite(z.resolution))
    frames = stack_frames(z, enclosing_radius(z))
    seq = SubspaceSequence.from_frames(frames)
    for fr, d, b in zip(seq.frames, seq.d, seq.bases):
        assert d <= fr.m_n
        if d:
            assert np.linalg.matrix_rank(b) == d
    p = sample_probe(seq, gamma, k, seed=seed)
    for i, per in enumerate(p.coefficients):
        row = np.zeros(x.dim)
        for n, c in per.items():
            phi = c @ seq.basis_at(n)
            assert norm(phi, DUAL_NORM[kind]) <= 1 + 1e-9
            row += n ** -gamma * phi
        np.testing.assert_allclose(p.matrix[i], row, rtol=1e-12, atol=1e-15)


@SETTINGS
@given(clouds(max_n=8, max_dim=2), st.floats(0.5, 5), st.integers(1, 4))
def test_qn_measure_in_unit_interval(pts, delta, N):
    x = PointCloud(pts, "euclidean")
    assume(np.isfinite(difference_set(x).resolution))
    ctx = ProbeContext.build(x)
    cfg = ExperimentConfig(delta, 1.5, N, trials=10)
    for row in qn_table(ctx, cfg, (0.5, 0.0, 0.0)):
        assert 0 <= row.empirical_measure <= 1


@SETTINGS
@given(st.floats(0, 3), st.floats(0, 2), st.floats(0, 2), st.floats(1.01, 2), st.floats(0.01, 4))
def test_required_dimension_is_minimal(s, a, b, gamma, excess):
    delta = (a + b) / 2 + gamma + excess
    N = required_dimension(s, a, b, gamma, delta)

    def ok(n):
        return n > s and ((a + b) / 2 + gamma) * n + 1 < delta * (n - s) - 1e-9 * n

    if ok(N - 1):
        # only floating round-off at the boundary can make N - 1 also pass
        assert abs(((a + b) / 2 + gamma) * (N - 1) + 1 - delta * (N - 1 - s)) < 1e-6 * N
    assert N > s


json_values = st.recursive(
    st.none() | st.booleans() | st.integers(-10**6, 10**6) | st.floats(allow_nan=False) | st.text(max_size=5),
    lambda inner: st.lists(inner, max_size=4) | st.dictionaries(st.text(max_size=4), inner, max_size=4),
    max_leaves=20,
)


@SETTINGS
@given(json_values)
def test_canonical_json_roundtrip(v):
    text = canonical_json(v)
    assert canonical_json(json.loads(text)) == text
    assert json.loads(text) == to_jsonable(v)
