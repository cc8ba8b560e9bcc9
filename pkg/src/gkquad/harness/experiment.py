"""Greedy versus uniform quadrature experiments.

:func:`run_experiment` writes into an output directory:

``functional.csv``   the Monte Carlo surrogate (nodes and weights)
``trace.csv``        per-step greedy trace
``rule.csv``         greedy nodes and weights, with a ``rule.json`` sidecar
``comparison.csv``   comparison-set sizes and their optimal-rule errors
``plotdata.csv``     aligned columns for plotting
``summary.json``     status, bound constant, fitted slopes, echoed config
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .. import io
from ..errors import ConfigError
from ..functionals import Box, monte_carlo_functional
from ..greedy import (
    discrete_continuity,
    greedy_bound_constant,
    run_greedy,
    weight_optimal_rule,
    worst_case_error,
)
from ..kernels import PointSet
from ..oracle import rate_fit
from .config import (
    ExperimentConfig,
    FromFile,
    Grid,
    UniformGrid,
    UniformRandom,
    reference_exponent,
    singular_shift,
)
from .plotdata import emit_plot_data

#: smallest n used when fitting the greedy rate
FIT_START = 20


def tensor_grid(domain: Box, points_per_axis: int) -> np.ndarray:
    """Tensor grid including the endpoints; the last coordinate varies fastest."""
    if points_per_axis < 2:
        raise ConfigError("a grid needs at least 2 points per axis to include both endpoints")
    axes = [np.linspace(lo, hi, points_per_axis) for lo, hi in zip(domain.lo, domain.hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.reshape(-1) for m in mesh])


def generate_candidates(config: ExperimentConfig) -> PointSet:
    gen = config.candidate_gen
    on_sphere = not isinstance(config.domain, Box)
    if isinstance(gen, Grid):
        if on_sphere:
            raise ConfigError("Grid candidates are only defined on a Box domain")
        return PointSet(tensor_grid(config.domain, gen.points_per_axis))
    if isinstance(gen, UniformRandom):
        # a separate stream from the Monte Carlo functional, derived from the same seed
        rng = np.random.default_rng([config.seed, 1])
        return PointSet(config.domain.sample(rng, gen.count), on_sphere=on_sphere)
    if isinstance(gen, FromFile):
        return io.read_points(gen.path, dim=config.domain.dim, on_sphere=on_sphere)
    raise ConfigError(f"unsupported candidate generator {gen!r}")


def comparison_sets(config: ExperimentConfig):
    """List of point sets to compare against, sorted by size."""
    comp = config.comparison
    if comp is None:
        return []
    on_sphere = not isinstance(config.domain, Box)
    if isinstance(comp, UniformGrid):
        out = []
        for s in comp.sizes:
            k = round(s ** (1.0 / config.domain.dim))
            out.append(PointSet(tensor_grid(config.domain, k)))
        return out
    if isinstance(comp, FromFile):
        p = Path(comp.path)
        files = sorted(p.glob("*.csv")) if p.is_dir() else [p]
        if not files:
            raise ConfigError(f"no comparison CSV files in {p}")
        sets = [io.read_points(f, dim=config.domain.dim, on_sphere=on_sphere) for f in files]
        sets.sort(key=len)
        return sets
    raise ConfigError(f"unsupported comparison {comp!r}")


def _slope(ns, errs, lo=None, hi=None):
    ns = np.asarray(ns, dtype=float)
    errs = np.asarray(errs, dtype=float)
    keep = errs > 0
    if lo is not None:
        keep &= ns >= lo
    if hi is not None:
        keep &= ns <= hi
    if np.count_nonzero(keep) < 3:
        return None
    return rate_fit(ns[keep], errs[keep])


def run_experiment(config: ExperimentConfig, out_dir) -> dict:
    """Run one experiment and write its artifacts; returns the summary."""
    out = Path(out_dir)
    kernel = config.kernel
    L = monte_carlo_functional(config.density, config.domain, config.mc_M, config.seed)
    candidates = generate_candidates(config)
    result = run_greedy(kernel, candidates, L, config.rule, config.term)

    q, c_L = discrete_continuity(L)
    c_G = greedy_bound_constant(L, kernel, config.domain, q, c_L, candidates=candidates)
    ns = np.array([t.n for t in result.trace], dtype=float)
    wce = np.array([t.wce for t in result.trace])
    bound = c_G / np.sqrt(ns) if ns.size else ns
    ratio = float(np.max(wce / bound)) if ns.size and c_G > 0 else 0.0

    comp_rows = []
    for X in comparison_sets(config):
        rule_u = weight_optimal_rule(kernel, X, L)
        comp_rows.append((len(X), worst_case_error(rule_u, L, kernel)))

    summary = {
        "seed": config.seed,
        "status": result.status.value,
        "n": result.n,
        "wce": result.wce,
        "wce_recomputed": worst_case_error(result, L, kernel) if result.n else result.initial_wce,
        "initial_wce": result.initial_wce,
        "mc_M": config.mc_M,
        "n_candidates": len(candidates),
        "c_L": c_L,
        "q": "inf",
        "c_G": c_G,
        "bound_max_ratio": ratio,
        "bound_holds": bool(ratio <= 1.0 + 1e-12),
        "reference_exponent": reference_exponent(config),
        "singular_shift": singular_shift(config),
        "greedy_slope": _slope(ns, wce, lo=FIT_START),
        "negative_weights": int(np.count_nonzero(result.weights < 0)),
        "config": config.to_dict(),
    }
    if comp_rows:
        cn = [r[0] for r in comp_rows]
        ce = [r[1] for r in comp_rows]
        summary["uniform_slope"] = _slope(cn, ce)
        summary["uniform_monotone"] = bool(np.all(np.diff(ce) <= 0))
        summary["greedy_slope_matched"] = _slope(ns, wce, lo=min(cn), hi=max(cn))
        if summary["uniform_slope"] is not None and summary["greedy_slope_matched"] is not None:
            summary["slope_gap"] = summary["uniform_slope"] - summary["greedy_slope_matched"]

    out.mkdir(parents=True, exist_ok=True)
    io.write_functional(out / "functional.csv", L)
    io.write_trace(out / "trace.csv", result.trace)
    io.write_rule(out / "rule.csv", result)
    io.write_rule_summary(out / "rule.json", result, kernel, config.rule, config.seed)
    if comp_rows:
        io.write_table(out / "comparison.csv", ["n", "wce"], comp_rows)
    elif (out / "comparison.csv").exists():
        (out / "comparison.csv").unlink()
    io.write_json(out / "summary.json", summary)
    emit_plot_data(out)
    return summary

