"""Reference point clouds with known box-counting behaviour.

=====================  =========================================  ===========
shape                  points                                     d_B
=====================  =========================================  ===========
interval_grid          ``n`` equispaced points of [0, 1]          1
square_grid            ``n x n`` grid of [0, 1]^2                 2
cantor_dust            left endpoints of middle-thirds level      log2/log3
orthogonal_sequence    {0} u {n^-decay e_n : n <= K} in l2        0 (finite)
two_scale_cluster      tight random clusters at random sites      0 (finite)
=====================  =========================================  ===========

``orthogonal_sequence`` is the family whose difference set is almost
homogeneous at the origin without being homogeneous.
"""

from dataclasses import dataclass, field

import numpy as np

from .metric import PointCloud

SHAPES = ("interval_grid", "square_grid", "cantor_dust", "orthogonal_sequence", "two_scale_cluster")

DEFAULTS = {
    "interval_grid": {"n": 101, "norm": "sup"},
    "square_grid": {"n": 21, "norm": "euclidean"},
    "cantor_dust": {"depth": 6, "norm": "sup"},
    "orthogonal_sequence": {"K": 64, "decay": 0.5},
    "two_scale_cluster": {"clusters": 4, "per_cluster": 8, "spread": 0.02, "dim": 2, "norm": "euclidean"},
}

EXPECTED_DB = {
    "interval_grid": 1.0,
    "square_grid": 2.0,
    "cantor_dust": float(np.log(2) / np.log(3)),
}


@dataclass(frozen=True)
class GeneratorSpec:
    shape: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def resolved(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}; expected one of {SHAPES}")
        p = dict(DEFAULTS[self.shape])
        unknown = set(self.params) - set(p)
        if unknown:
            raise ValueError(f"unknown parameters for {self.shape}: {sorted(unknown)}")
        p.update(self.params)
        for key, v in p.items():
            if key != "norm" and not (isinstance(v, (int, float)) and v > 0):
                raise ValueError(f"{self.shape}.{key} must be positive, got {v!r}")
        return p


def _int(p, key):
    v = p[key]
    if int(v) != v:
        raise ValueError(f"{key} must be an integer")
    return int(v)


def generate(spec: GeneratorSpec) -> PointCloud:
    p = spec.resolved()
    shape = spec.shape
    if shape == "interval_grid":
        n = _int(p, "n")
        pts = (np.arange(n) / max(n - 1, 1))[:, None]
        return PointCloud(pts, p["norm"], f"interval_grid(n={n})")
    if shape == "square_grid":
        n = _int(p, "n")
        t = np.arange(n) / max(n - 1, 1)
        pts = np.array([(a, b) for a in t for b in t])
        return PointCloud(pts, p["norm"], f"square_grid(n={n})")
    if shape == "cantor_dust":
        depth = _int(p, "depth")
        pts = np.zeros(1)
        for level in range(1, depth + 1):
            pts = np.concatenate([pts, pts + 2.0 * 3.0 ** (-level)])
        return PointCloud(np.sort(pts)[:, None], p["norm"], f"cantor_dust(depth={depth})")
    if shape == "orthogonal_sequence":
        K = _int(p, "K")
        pts = np.zeros((K + 1, K))
        pts[1:] = np.diag(np.arange(1, K + 1, dtype=float) ** (-p["decay"]))
        return PointCloud(pts, "euclidean", f"orthogonal_sequence(K={K},decay={p['decay']})")
    # two_scale_cluster
    rng = np.random.default_rng(spec.seed)
    c, per, dim = _int(p, "clusters"), _int(p, "per_cluster"), _int(p, "dim")
    sites = rng.uniform(0.0, 1.0, size=(c, dim))
    offs = rng.uniform(-p["spread"], p["spread"], size=(c, per, dim))
    pts = (sites[:, None, :] + offs).reshape(c * per, dim)
    return PointCloud(pts, p["norm"], f"two_scale_cluster(c={c},per={per},seed={spec.seed})")


def corpus(seed=0):
    """The synthetic datasets used by the acceptance suite, keyed by name."""
    specs = {
        "interval": GeneratorSpec("interval_grid", {"n": 101}),
        "square": GeneratorSpec("square_grid", {"n": 11}),
        "cantor": GeneratorSpec("cantor_dust", {"depth": 5}),
        "ortho": GeneratorSpec("orthogonal_sequence", {"K": 32}),
        "cluster": GeneratorSpec("two_scale_cluster", {}, seed),
    }
    return {name: generate(s) for name, s in specs.items()}
