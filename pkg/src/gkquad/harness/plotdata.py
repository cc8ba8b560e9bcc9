"""Plot-ready columns assembled from the files of an experiment run.

Columns of ``plotdata.csv``:

``n``              number of nodes
``greedy_wce``     worst-case error of the greedy rule (``nan`` if n is not on the trace)
``uniform_wce``    error of the comparison rule of that size (omitted without a comparison)
``bound``          ``c_G / sqrt(n)``
``ref_tau``        ``n^(-tau/d)``, scaled to the last positive greedy error
``ref_singular``   ``n^(-tau/d + shift)``, same scaling (only for singular densities)
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .. import io
from ..errors import DataFormatError


def _anchor(trace_n, trace_wce):
    pos = [(n, e) for n, e in zip(trace_n, trace_wce) if e > 0]
    if not pos:
        return None
    return pos[-1]


def plot_rows(trace, comparison, c_G, exponent, shift=None):
    """Rows aligned on the union of trace and comparison sizes; returns ``(header, rows)``."""
    greedy = {int(t.n): float(t.wce) for t in trace}
    uniform = {int(n): float(e) for n, e in comparison} if comparison else {}
    ns = sorted(set(greedy) | set(uniform))
    anchor = _anchor(list(greedy), list(greedy.values()))
    if anchor is None and uniform:
        anchor = _anchor(list(uniform), list(uniform.values()))
    header = ["n", "greedy_wce"]
    if uniform:
        header.append("uniform_wce")
    header += ["bound", "ref_tau"]
    if shift is not None:
        header.append("ref_singular")
    scale_tau = scale_sing = math.nan
    if anchor is not None:
        na, ea = anchor
        scale_tau = ea * na ** (-exponent)
        if shift is not None:
            scale_sing = ea * na ** (-(exponent + shift))
    rows = []
    for n in ns:
        row = [n, greedy.get(n, math.nan)]
        if uniform:
            row.append(uniform.get(n, math.nan))
        row += [c_G / math.sqrt(n), scale_tau * n ** exponent]
        if shift is not None:
            row.append(scale_sing * n ** (exponent + shift))
        rows.append(row)
    return header, rows


def emit_plot_data(run_dir, out_path=None) -> Path:
    """Read ``trace.csv``, ``summary.json`` and (if present) ``comparison.csv``."""
    run_dir = Path(run_dir)
    summary_path = run_dir / "summary.json"
    try:
        with open(summary_path) as fh:
            summary = json.load(fh)
    except FileNotFoundError:
        raise DataFormatError("summary not found", path=str(summary_path)) from None
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON ({exc.msg})", path=str(summary_path), line=exc.lineno) from None
    for key in ("c_G", "reference_exponent"):
        if key not in summary:
            raise DataFormatError(f"missing key {key!r}", path=str(summary_path))
    trace = io.read_trace(run_dir / "trace.csv")
    comp_path = run_dir / "comparison.csv"
    comparison = []
    if comp_path.exists():
        header, data = io.read_table(comp_path)
        if header != ["n", "wce"]:
            raise DataFormatError(f"unexpected header {header}", path=str(comp_path), line=1)
        comparison = [(int(r[0]), float(r[1])) for r in data]
    header, rows = plot_rows(trace, comparison, summary["c_G"], summary["reference_exponent"],
                             summary.get("singular_shift"))
    out_path = run_dir / "plotdata.csv" if out_path is None else Path(out_path)
    io.write_table(out_path, header, rows)
    return out_path


def read_plot_data(path):
    header, data = io.read_table(path)
    return header, np.asarray(data)
