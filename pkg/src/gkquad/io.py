"""CSV and JSON file formats.

* point/weight files: header ``x1,...,xd,weight``
* point files: header ``x1,...,xd``
* traces: header ``n,wce,selected_index,score``

Floats are written as ``%.16e`` (17 significant digits), so a write/read
round trip is exact.  Every write goes to a temporary file in the target
directory and is then renamed into place.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .functionals import DiscreteFunctional
from .greedy import QuadratureRule, TraceEntry
from .kernels import PointSet

FLOAT_FMT = "%.16e"


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return FLOAT_FMT % x


def atomic_write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix="." + path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def _read_table(path):
    """Return ``(header, float matrix)``, checking every row for width and parseability."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            lines = list(csv.reader(fh))
    except FileNotFoundError:
        raise DataFormatError("file not found", path=str(path)) from None
    except OSError as exc:
        raise DataFormatError(f"cannot read file ({exc.strerror})", path=str(path)) from None
    if not lines or not lines[0]:
        raise DataFormatError("missing header", path=str(path), line=1)
    header = [h.strip() for h in lines[0]]
    rows = []
    for lineno, row in enumerate(lines[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataFormatError(f"expected {len(header)} fields, found {len(row)}", path=str(path), line=lineno)
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise DataFormatError(f"non-numeric field in row {row!r}", path=str(path), line=lineno) from None
        rows.append(vals)
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return header, data


def _point_header(dim):
    return [f"x{k + 1}" for k in range(dim)]


# -- points and functionals -------------------------------------------------

def write_points(path, X):
    coords = X.coords if isinstance(X, PointSet) else np.asarray(X, float)
    atomic_write_text(path, _csv_text(_point_header(coords.shape[1]), ([fmt(v) for v in r] for r in coords)))


def read_points(path, dim=None, on_sphere=False) -> PointSet:
    header, data = _read_table(path)
    for k, h in enumerate(header):
        if h != f"x{k + 1}":
            raise DataFormatError(f"expected column x{k + 1}, found {h!r}", path=str(path), line=1)
    if dim is not None and data.shape[1] != dim:
        raise DataFormatError(f"points have dimension {data.shape[1]}, expected {dim}", path=str(path), line=1)
    if data.shape[0] == 0:
        raise DataFormatError("no points", path=str(path))
    if on_sphere:
        norms = np.sqrt(np.sum(data * data, axis=1))
        bad = np.flatnonzero(np.abs(norms - 1.0) > 1e-12)
        if bad.size:
            raise DataFormatError(f"point not on the unit sphere (norm {norms[bad[0]]!r})", path=str(path),
                                  line=int(bad[0]) + 2)
    return PointSet(data, on_sphere=on_sphere)


def write_weighted(path, coords, weights):
    coords = np.asarray(coords, float)
    rows = ([fmt(v) for v in r] + [fmt(w)] for r, w in zip(coords, np.asarray(weights, float)))
    atomic_write_text(path, _csv_text(_point_header(coords.shape[1]) + ["weight"], rows))


def read_weighted(path, dim=None):
    header, data = _read_table(path)
    if len(header) < 2 or header[-1] != "weight":
        raise DataFormatError("last column must be 'weight'", path=str(path), line=1)
    for k, h in enumerate(header[:-1]):
        if h != f"x{k + 1}":
            raise DataFormatError(f"expected column x{k + 1}, found {h!r}", path=str(path), line=1)
    if dim is not None and data.shape[1] - 1 != dim:
        raise DataFormatError(f"nodes have dimension {data.shape[1] - 1}, expected {dim}", path=str(path), line=1)
    if data.shape[0] == 0:
        raise DataFormatError("no nodes", path=str(path))
    return data[:, :-1], data[:, -1]


def write_functional(path, L: DiscreteFunctional):
    write_weighted(path, L.nodes.coords, L.weights)


def read_functional(path, dim=None, on_sphere=False) -> DiscreteFunctional:
    coords, w = read_weighted(path, dim)
    return DiscreteFunctional(PointSet(coords, on_sphere=on_sphere), w)


# -- rules and traces -------------------------------------------------------

def write_rule(path, rule: QuadratureRule):
    write_weighted(path, rule.nodes.coords.reshape(rule.n, -1), rule.weights)


def rule_summary(rule: QuadratureRule, kernel, selection_rule, seed) -> dict:
    return {
        "n": rule.n,
        "wce": rule.wce,
        "status": None if rule.status is None else rule.status.value,
        "seed": seed,
        "kernel": kernel.to_dict(),
        "rule": getattr(selection_rule, "value", selection_rule),
    }


def write_rule_summary(path, rule: QuadratureRule, kernel, selection_rule, seed, extra=None):
    summary = rule_summary(rule, kernel, selection_rule, seed)
    if extra:
        summary.update(extra)
    write_json(path, summary)


def write_trace(path, trace):
    rows = ([str(t.n), fmt(t.wce), str(t.selected_index), fmt(t.score)] for t in trace)
    atomic_write_text(path, _csv_text(["n", "wce", "selected_index", "score"], rows))


def read_trace(path):
    header, data = _read_table(path)
    if header != ["n", "wce", "selected_index", "score"]:
        raise DataFormatError(f"unexpected trace header {header}", path=str(path), line=1)
    return [TraceEntry(int(r[0]), float(r[1]), int(r[2]), float(r[3])) for r in data]


def write_table(path, header, rows):
    """Generic numeric table; ints are written verbatim, floats in full precision."""
    def cell(v):
        if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
            return str(int(v))
        return fmt(v)

    atomic_write_text(path, _csv_text(header, ([cell(v) for v in r] for r in rows)))


def read_table(path):
    return _read_table(path)


# -- UQ datasets ------------------------------------------------------------

def write_matrix(path, prefix, M):
    M = np.asarray(M, float)
    header = [f"{prefix}{k + 1}" for k in range(M.shape[1])]
    atomic_write_text(path, _csv_text(header, ([fmt(v) for v in r] for r in M)))


def read_matrix(path, prefix):
    header, data = _read_table(path)
    for k, h in enumerate(header):
        if h != f"{prefix}{k + 1}":
            raise DataFormatError(f"expected column {prefix}{k + 1}, found {h!r}", path=str(path), line=1)
    return data
