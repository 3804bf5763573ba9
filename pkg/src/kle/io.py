"""JSON and CSV file formats.

Every document is validated against a JSON schema shipped in
``kle/schemas``; failures raise :class:`~kle.errors.SchemaError` carrying the
JSON pointer of the offending element. Files are written atomically and
floats use the shortest repr that round-trips exactly.
"""
import csv
from importlib import resources
import io as _io
import json
import os
import tempfile

import jsonschema
import numpy as np

from .errors import KLEError, SchemaError
from .families import get_family
from .regression import FittedCurve, TrajectoryDataset

FIT_FORMAT = "kle-fit"
FIT_VERSION = 1

_SCHEMAS = {}


def load_schema(name):
    if name not in _SCHEMAS:
        text = resources.files("kle").joinpath("schemas", f"{name}.schema.json").read_text()
        _SCHEMAS[name] = json.loads(text)
    return _SCHEMAS[name]


def _pointer(path):
    return "/" + "/".join(str(p) for p in path) if path else ""


def validate(doc, name):
    """Validate ``doc`` against schema ``name``; raise SchemaError on the first problem."""
    validator = jsonschema.Draft202012Validator(load_schema(name))
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise SchemaError(err.message, _pointer(err.absolute_path))
    return doc


def read_json(path, schema=None):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    return validate(doc, schema) if schema else doc


def dumps(doc):
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


def write_text_atomic(path, text):
    """Write via a temporary file in the target directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, doc):
    write_text_atomic(path, dumps(doc))


def write_csv(path, header, rows):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                         for v in row])
    write_text_atomic(path, buf.getvalue())


# ----------------------------------------------------------------------------
# Datasets
# ----------------------------------------------------------------------------

def dataset_to_doc(dataset):
    trajs = []
    for t, x in dataset.trajectories:
        flat = x.reshape(t.size, -1)
        trajs.append({"points": [{"t": float(tj), "x": xj.tolist()} for tj, xj in zip(t, flat)]})
    return {"manifold": dataset.manifold, "dim": dataset.dim, "trajectories": trajs}


def trajectories_doc(manifold, dim, trajectories):
    """Dataset document from raw ``(times, points)`` pairs (may be empty)."""
    out = []
    for t, x in trajectories:
        t = np.asarray(t, dtype=float)
        flat = np.asarray(x, dtype=float).reshape(t.size, -1)
        out.append({"points": [{"t": float(tj), "x": xj.tolist()} for tj, xj in zip(t, flat)]})
    return {"manifold": manifold, "dim": int(dim), "trajectories": out}


def dataset_from_doc(doc):
    validate(doc, "dataset")
    try:
        fam = get_family(doc["manifold"], doc["dim"])
    except (KLEError, ValueError) as exc:
        raise SchemaError(str(exc), "/dim") from exc
    trajs = []
    for i, tr in enumerate(doc["trajectories"]):
        pts = tr["points"]
        t = np.array([p["t"] for p in pts], dtype=float)
        xs = []
        for j, p in enumerate(pts):
            try:
                xs.append(fam.validate(p["x"]))
            except (KLEError, ValueError) as exc:
                raise SchemaError(str(exc), f"/trajectories/{i}/points/{j}/x") from exc
        x = np.array(xs).reshape((t.size,) + fam.point_shape)
        trajs.append((t, x))
    if sum(t.size for t, _ in trajs) == 0:
        raise SchemaError("dataset contains no points", "/trajectories")
    return TrajectoryDataset(doc["manifold"], doc["dim"], trajs)


def load_dataset(path):
    return dataset_from_doc(read_json(path))


def save_dataset(dataset, path):
    write_json(path, dataset_to_doc(dataset))


# ----------------------------------------------------------------------------
# Fits
# ----------------------------------------------------------------------------

def _clean(value):
    """JSON-safe copy of diagnostics (numpy scalars to Python, inf to None)."""
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if np.isfinite(value) else None
    return value


def fit_to_doc(curve):
    fam = curve.family
    return {
        "format": FIT_FORMAT, "version": FIT_VERSION,
        "manifold": fam.tag, "dim": fam.dim, "family": fam.name,
        "config": _clean(curve.config),
        "times": curve.times.tolist(),
        "params": [None if p is None else fam.params_to_dict(p) for p in curve.params],
        "ess": [float(e) for e in curve.ess],
        "diagnostics": _clean(curve.diagnostics),
    }


def fit_from_doc(doc):
    validate(doc, "fit")
    fam = get_family(doc["manifold"], doc["dim"])
    n = len(doc["times"])
    for key in ("params", "ess", "diagnostics"):
        if len(doc[key]) != n:
            raise SchemaError(f"{key} has {len(doc[key])} entries for {n} times", f"/{key}")
    params = []
    for k, p in enumerate(doc["params"]):
        try:
            params.append(None if p is None else fam.params_from_dict(p))
        except (KLEError, ValueError, KeyError) as exc:
            raise SchemaError(f"invalid parameters: {exc}", f"/params/{k}") from exc
    return FittedCurve(fam, np.array(doc["times"], dtype=float), params,
                       np.array(doc["ess"], dtype=float), list(doc["diagnostics"]),
                       dict(doc["config"]))


def load_fit(path):
    return fit_from_doc(read_json(path))


def save_fit(curve, path):
    write_json(path, fit_to_doc(curve))


# ----------------------------------------------------------------------------
# Ground truth
# ----------------------------------------------------------------------------

def truth_from_doc(doc):
    validate(doc, "truth")
    times = np.array(doc["times"], dtype=float)
    if len(doc["means"]) != times.size:
        raise SchemaError("one mean per time is required", "/means")
    means = []
    for k, m in enumerate(doc["means"]):
        d = int(round(np.sqrt(len(m))))
        if d * d != len(m):
            raise SchemaError("mean is not a square matrix", f"/means/{k}")
        means.append(np.reshape(m, (d, d)))
    return times, np.array(means)


def load_truth(path):
    return truth_from_doc(read_json(path))
