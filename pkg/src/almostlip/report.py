"""Run reports: canonical JSON, content digests, schema validation and atomic writes."""

import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from importlib import resources

import jsonschema
import numpy as np

from .errors import InvariantViolation, UsageError
from .metric import NORM_KINDS, FiniteMetricSpace, PointCloud, kuratowski_embed

SCHEMA_VERSION = 1


def to_jsonable(obj):
    """Plain JSON types; infinities become the strings ``"inf"`` / ``"-inf"``. NaN is an error."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            raise InvariantViolation("NaN in report")
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def canonical_json(obj):
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def digest(obj):
    """sha256 of the canonical JSON of ``obj``."""
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def cloud_digest(cloud: PointCloud):
    return digest(cloud.to_dict())


def atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def tsv(rows, header):
    lines = ["\t".join(header)]
    for row in rows:
        lines.append("\t".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def load_schema(name):
    text = resources.files("almostlip").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(doc, name):
    try:
        jsonschema.validate(doc, load_schema(name))
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise UsageError(f"{name} schema violation at {loc}: {exc.message}") from None


def _read(path):
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _parse_csv(path, text):
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rows.append([float(v) for v in line.split(",")])
        except ValueError:
            raise UsageError(f"{path}:{lineno}: non-numeric field") from None
        if len(rows[-1]) != len(rows[0]):
            raise UsageError(f"{path}:{lineno}: expected {len(rows[0])} columns, got {len(rows[-1])}")
    if not rows:
        raise UsageError(f"{path}: no rows")
    arr = np.array(rows)
    if not np.all(np.isfinite(arr)):
        r = int(np.argwhere(~np.isfinite(arr))[0][0]) + 1
        raise UsageError(f"{path}: non-finite value in data row {r}")
    return arr


def load_cloud(path, norm=None):
    """Read a cloud from JSON (``{"norm", "points", "label"}``) or headerless CSV."""
    text = _read(path)
    if path.lower().endswith(".csv"):
        if norm is not None and norm not in NORM_KINDS:
            raise UsageError(f"unknown norm {norm!r}")
        return PointCloud(_parse_csv(path, text), norm or "euclidean", os.path.basename(path))
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    try:
        validate(doc, "cloud")
    except UsageError as exc:
        raise UsageError(f"{path}: {exc}") from None
    if norm is not None:
        doc["norm"] = norm
    try:
        return PointCloud.from_dict(doc)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


def load_distance_matrix(path):
    """Kuratowski image of a CSV distance matrix."""
    d = _parse_csv(path, _read(path))
    try:
        return kuratowski_embed(FiniteMetricSpace(d))
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


def save_cloud(cloud, path):
    if path.lower().endswith(".csv"):
        atomic_write(path, "".join(",".join(repr(float(v)) for v in row) + "\n" for row in cloud.points))
    else:
        atomic_write(path, canonical_json(cloud.to_dict()))


@dataclass
class RunReport:
    command: str
    config: dict
    input_digest: object
    seed: int
    outputs: dict = field(default_factory=dict)
    passed: bool = True
    streams: dict = field(default_factory=dict)
    wall_time: object = None
    messages: list = field(default_factory=list)

    def to_dict(self):
        d = {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "config": self.config,
            "input_digest": self.input_digest,
            "seed": int(self.seed),
            "outputs": self.outputs,
            "pass": bool(self.passed),
            "streams": self.streams,
            "messages": list(self.messages),
        }
        if self.wall_time is not None:
            d["wall_time"] = self.wall_time
        return d

    def render(self):
        doc = to_jsonable(self.to_dict())
        validate(doc, "report")
        return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"
