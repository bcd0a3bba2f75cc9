import os
import subprocess
import sys

import numpy as np
import pytest

from almostlip import kernels
from almostlip.kernels import NORM_CODES, get_backend

compiled = pytest.importorskip("almostlip._ckernels")
py = get_backend("python")


@pytest.mark.parametrize("kind", ["sup", "euclidean", "l1"])
@pytest.mark.parametrize("seed", range(5))
def test_backends_agree_on_random_clouds(kind, seed):
    rng = np.random.default_rng(seed)
    p = rng.normal(size=(300, 1 + seed))
    for stop in (0.0, 0.5):
        a = compiled.fps(p, NORM_CODES[kind], stop, 3)
        b = py.fps(p, NORM_CODES[kind], stop, 3)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_allclose(a[1], b[1], rtol=1e-13)
        np.testing.assert_allclose(a[2], b[2], rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(compiled.row_norms(p, NORM_CODES[kind]), py.row_norms(p, NORM_CODES[kind]), rtol=1e-14)


@pytest.mark.parametrize("kind", ["sup", "euclidean", "l1"])
def test_backends_identical_on_integer_grid(kind):
    p = np.array([(a, b) for a in range(7) for b in range(5)], dtype=float)
    a = compiled.fps(p, NORM_CODES[kind], 0.0, 0)
    b = py.fps(p, NORM_CODES[kind], 0.0, 0)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


def test_fps_contract():
    p = np.arange(10, dtype=float)[:, None]
    order, radii, mind = kernels.fps(p, "sup", 0.0, 0)
    assert order.tolist()[:2] == [0, 9]
    assert np.all(np.diff(radii) <= 0)
    assert radii[-1] == 0.0 and np.all(mind == 0.0)
    assert sorted(order.tolist()) == list(range(10))


def test_get_backend_errors():
    with pytest.raises(ValueError):
        get_backend("fortran")
    assert get_backend() is (compiled if kernels.BACKEND == "compiled" else py)


def test_env_var_forces_fallback():
    env = dict(os.environ, ALMOSTLIP_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import almostlip; print(almostlip.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
