"""Compare the compiled and pure-Python kernel backends.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``. Each timing is
the best of ``repeat`` runs; results are checked for agreement before timing.
"""

import argparse
import timeit

import numpy as np

from almostlip.kernels import NORM_CODES, get_backend


def cases(rng):
    yield "fps 2000x2 euclidean", "fps", (rng.uniform(size=(2000, 2)), NORM_CODES["euclidean"], 0.0, 0)
    yield "fps 5000x1 sup", "fps", (rng.uniform(size=(5000, 1)), NORM_CODES["sup"], 1e-3, 0)
    yield "fps 1000x32 l1", "fps", (rng.uniform(size=(1000, 32)), NORM_CODES["l1"], 0.0, 0)
    yield "row_norms 200000x8 euclidean", "row_norms", (rng.normal(size=(200_000, 8)), NORM_CODES["euclidean"])
    yield "row_norms 200000x8 sup", "row_norms", (rng.normal(size=(200_000, 8)), NORM_CODES["sup"])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    py = get_backend("python")
    try:
        c = get_backend("compiled")
    except ImportError:
        c = None
        print("compiled backend not built; timing the python backend only")
    rng = np.random.default_rng(0)
    print(f"{'case':32} {'python s':>10} {'compiled s':>11} {'speedup':>8}")
    for name, fn, a in cases(rng):
        tp = min(timeit.repeat(lambda: getattr(py, fn)(*a), number=1, repeat=args.repeat))
        if c is None:
            print(f"{name:32} {tp:10.4f}")
            continue
        rp, rc = getattr(py, fn)(*a), getattr(c, fn)(*a)
        for u, v in zip(rp if isinstance(rp, tuple) else (rp,), rc if isinstance(rc, tuple) else (rc,)):
            np.testing.assert_allclose(np.asarray(u), np.asarray(v), rtol=1e-12, atol=0)
        tc = min(timeit.repeat(lambda: getattr(c, fn)(*a), number=1, repeat=args.repeat))
        print(f"{name:32} {tp:10.4f} {tc:11.4f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
