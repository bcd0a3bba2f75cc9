import numpy as np
import pytest

from almostlip.covering import box_counting_estimate, default_eps_range, fit_homogeneity
from almostlip.generators import DEFAULTS, EXPECTED_DB, SHAPES, GeneratorSpec, corpus, generate
from almostlip.metric import difference_set


def test_shapes_and_sizes():
    assert generate(GeneratorSpec("interval_grid", {"n": 101})).n == 101
    assert generate(GeneratorSpec("square_grid", {"n": 7})).n == 49
    c = generate(GeneratorSpec("cantor_dust", {"depth": 6}))
    assert c.n == 64 and c.points.min() == 0.0 and c.points.max() == pytest.approx(1 - 3.0**-6)
    o = generate(GeneratorSpec("orthogonal_sequence", {"K": 5}))
    assert o.n == 6 and o.norm_kind == "euclidean"
    np.testing.assert_allclose(np.linalg.norm(o.points[1:], axis=1), np.arange(1, 6) ** -0.5)
    t = generate(GeneratorSpec("two_scale_cluster", {"clusters": 3, "per_cluster": 5}, seed=2))
    assert t.n == 15


def test_validation():
    with pytest.raises(ValueError):
        generate(GeneratorSpec("torus"))
    with pytest.raises(ValueError):
        generate(GeneratorSpec("interval_grid", {"m": 3}))
    with pytest.raises(ValueError):
        generate(GeneratorSpec("interval_grid", {"n": 2.5}))
    with pytest.raises(ValueError):
        generate(GeneratorSpec("cantor_dust", {"depth": -1}))


def test_determinism():
    a = generate(GeneratorSpec("two_scale_cluster", {}, seed=4))
    b = generate(GeneratorSpec("two_scale_cluster", {}, seed=4))
    c = generate(GeneratorSpec("two_scale_cluster", {}, seed=5))
    np.testing.assert_array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)
    assert set(DEFAULTS) == set(SHAPES)


def test_interval_dimension():
    x = generate(GeneratorSpec("interval_grid", {"n": 101}))
    assert box_counting_estimate(x, *default_eps_range(x), 8).value == pytest.approx(EXPECTED_DB["interval_grid"], abs=0.15)


def test_cantor_self_similar_counts():
    x = generate(GeneratorSpec("cantor_dust", {"depth": 6}))
    e = box_counting_estimate(x, 3.0**-1, 3.0**-5, 5)
    assert e.counts == [2, 4, 8, 16, 32]
    assert e.value == pytest.approx(np.log(2) / np.log(3), abs=0.1)


@pytest.mark.xfail(strict=True, reason="finite sets admit M=1, alpha=beta=0 envelopes; log factors are never forced")
def test_orthogonal_origin_fit_needs_log_factors():
    z = difference_set(generate(GeneratorSpec("orthogonal_sequence", {"K": 64})))
    p = fit_homogeneity(z, True)
    assert p.alpha + p.beta > 0


@pytest.fixture(scope="module")
def ortho_fits():
    z = difference_set(generate(GeneratorSpec("orthogonal_sequence", {"K": 64})))
    return fit_homogeneity(z, True), fit_homogeneity(z, False, max_centers=4)


def test_orthogonal_global_counts_dominate(ortho_fits):
    o, g = ortho_fits
    assert g.scale_grid == o.scale_grid
    assert all(cg >= co for cg, co in zip(g.counts, o.counts))
    assert sum(cg > co for cg, co in zip(g.counts, o.counts)) >= len(o.counts) // 2


@pytest.mark.xfail(strict=True, reason="both fits are pinned by the same coarse scale pair, where global and origin counts coincide")
def test_orthogonal_global_fit_is_worse(ortho_fits):
    o, g = ortho_fits
    assert g.objective > o.objective


def test_corpus():
    c = corpus()
    assert set(c) == {"interval", "square", "cantor", "ortho", "cluster"}
    assert all(x.n >= 2 for x in c.values())
