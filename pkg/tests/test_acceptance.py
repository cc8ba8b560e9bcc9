"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Seeded instances (all on the unit square, MaternQuadratic with gamma = 1):

* oracle instances, seeds 0..19: 400 candidates with separation >= 0.01 and
  an indicator-density Monte Carlo functional with M = 200 (seed + 1000)
* lookahead instances, seeds 0..9: same candidates, M = 500 (seed + 2000)
* perturbation instances, seeds 0..9: 40 nodes with separation >= 0.05,
  exact functional M = 400 (seed + 3000), surrogate M = 100 (seed + 4000)
"""
import math
import time

import numpy as np
import pytest

from gkquad import (
    Constant,
    DiscreteFunctional,
    KernelSpec,
    PointSet,
    Termination,
    compress,
    hnorm_squared,
    monte_carlo_functional,
    perturbation_decomposition,
    representer_values,
    worst_case_error,
)
from gkquad.functionals import difference
from gkquad.greedy import greedy_run_state, prefix_weights, signed_norm_sq
from gkquad.harness import parse_config, preset, run_experiment, synthetic_uq, uq_sweep
from gkquad import io
from gkquad.oracle import direct_interpolant, one_step_errors, rate_fit

from _instances import MATERN1, SUPPORT, UNIT_SQUARE, oracle_instance, separated_points

ORACLE_SEEDS = range(20)
LOOKAHEAD_SEEDS = range(10)
PERTURB_SEEDS = range(10)

# per-step records (wce^2 before, residual, power^2) for criterion 4
_STEP_RECORDS = []


def _recording_run(X, L, max_n, label):
    rec = []

    def hook(state, idx, score):
        rec.append((state.wce_squared(), float(state.residual[idx]), float(state.power_sq[idx])))

    state, trace, status = greedy_run_state(MATERN1, X, L, "FOverP", Termination(max_n=max_n), step_hook=hook)
    _STEP_RECORDS.append((label, X, L, state, rec))
    return state


@pytest.fixture(scope="module")
def oracle_runs():
    runs = []
    t0 = time.perf_counter()
    for seed in ORACLE_SEEDS:
        X, L = oracle_instance(seed)
        runs.append((X, L, _recording_run(X, L, 60, f"c1 seed {seed}"), _recording_run(X, L, 100, f"c2 seed {seed}")))
    return runs, time.perf_counter() - t0


@pytest.fixture(scope="module")
def lookahead_runs():
    runs = []
    for seed in LOOKAHEAD_SEEDS:
        X = PointSet(separated_points(np.random.default_rng(seed), 400))
        L = monte_carlo_functional(SUPPORT, UNIT_SQUARE, 500, seed + 2000)
        runs.append((X, L, _recording_run(X, L, 20, f"c3 seed {seed}")))
    return runs


@pytest.fixture(scope="module")
def box_runs(tmp_path_factory):
    cfg = parse_config(preset("box"))
    dirs, times, summaries = [], [], []
    for k in range(2):
        out = tmp_path_factory.mktemp(f"box{k}")
        t0 = time.perf_counter()
        summaries.append(run_experiment(cfg, out))
        times.append(time.perf_counter() - t0)
        dirs.append(out)
    return dirs, summaries, times


def test_criterion_01_oracle_equivalence(oracle_runs, report):
    runs, _ = oracle_runs
    t0 = time.perf_counter()
    worst = 0.0
    for X, L, st60, _ in runs:
        Xs = X.coords[st60.selected]
        ref = direct_interpolant(MATERN1, Xs, representer_values(L, MATERN1, Xs), X)
        worst = max(worst, float(np.max(np.abs(st60.interpolant_values() - ref)) / np.max(np.abs(ref))))
    elapsed = time.perf_counter() - t0 + oracle_runs[1]
    ok = worst <= 1e-8 and elapsed < 10
    report(1, ok, f"max relative interpolant error {worst:.2e} (<= 1e-08), n=60, 20 instances, {elapsed:.1f}s")
    assert ok


def test_criterion_02_newton_orthonormality(oracle_runs, report):
    runs, _ = oracle_runs
    t0 = time.perf_counter()
    worst = max(st100.validate()["orthonormality"] for _, _, _, st100 in runs)
    elapsed = time.perf_counter() - t0 + oracle_runs[1]
    ok = worst <= 1e-8 and elapsed < 10
    report(2, ok, f"max |C A C^T - I| = {worst:.2e} (<= 1e-08), n=100, 20 instances, {elapsed:.1f}s")
    assert ok


def test_criterion_03_one_step_optimality(lookahead_runs, report):
    t0 = time.perf_counter()
    mismatches, worst_tie = 0, 0.0
    good = True
    for X, L, state in lookahead_runs:
        hn = hnorm_squared(L, MATERN1)
        for n in range(state.n):
            errs = one_step_errors(MATERN1, X.coords[state.selected[:n]], X, L, hn)
            best, chosen = int(np.argmin(errs)), state.selected[n]
            if best != chosen:
                mismatches += 1
                rel = abs(errs[chosen] - errs[best]) / errs[best]
                worst_tie = max(worst_tie, rel)
                good &= rel <= 1e-9
    elapsed = time.perf_counter() - t0
    ok = good and elapsed < 60
    report(3, ok, f"{mismatches} index mismatches over 10 x 20 steps, worst tie gap {worst_tie:.1e}, {elapsed:.1f}s")
    assert ok


def test_criterion_04_energy_splitting(oracle_runs, lookahead_runs, report):
    worst_tracked, worst_indep = 0.0, 0.0
    for label, X, L, state, rec in _STEP_RECORDS:
        hn = state.target_hnorm_sq
        tracked_after = [r[0] for r in rec[1:]] + [state.wce_squared()]
        prev_indep = hn
        for n, ((before, r, p), after) in enumerate(zip(rec, tracked_after), start=1):
            drop = r * r / p
            worst_tracked = max(worst_tracked, abs(after - (before - drop)) / before)
            w = prefix_weights(state, n)
            indep = signed_norm_sq(MATERN1, X.coords[state.selected[:n]], w, L)
            # the independent error is accurate only to about eps ||v_L||^2
            worst_indep = max(worst_indep, abs(indep - (prev_indep - drop)) / hn)
            prev_indep = indep
    ok = worst_tracked <= 1e-9 and worst_indep <= 1e-9
    report(4, ok, f"tracked identity {worst_tracked:.1e} rel. to e_(n-1)^2, independent recompute "
                  f"{worst_indep:.1e} rel. to ||v_L||^2 (both <= 1e-09), {len(_STEP_RECORDS)} traces")
    assert ok


def test_criterion_05_greedy_bound(box_runs, report):
    dirs, summaries, times = box_runs
    s = summaries[0]
    trace = io.read_trace(dirs[0] / "trace.csv")
    worst = max(t.wce - s["c_G"] / math.sqrt(t.n) for t in trace)
    ok = len(trace) == 150 and worst <= 1e-12 and times[0] < 60
    report(5, ok, f"max_n wce(n) - c_G n^-1/2 = {worst:.2e} (<= 1e-12), c_G = {s['c_G']:.4g}, "
                  f"max ratio {s['bound_max_ratio']:.3f}, {times[0]:.1f}s")
    assert ok


def test_criterion_06_greedy_rate(box_runs, report):
    dirs, summaries, _ = box_runs
    trace = io.read_trace(dirs[0] / "trace.csv")
    ns = [t.n for t in trace if 20 <= t.n <= 150]
    slope = rate_fit(ns, [t.wce for t in trace if 20 <= t.n <= 150])
    ok = slope <= -1.0
    report(6, ok, f"greedy slope over n in [20, 150] = {slope:.3f} (<= -1.0)")
    assert ok


def test_criterion_07_singular_separation(tmp_path, report):
    t0 = time.perf_counter()
    s = run_experiment(parse_config(preset("singular")), tmp_path)
    elapsed = time.perf_counter() - t0
    gap = s.get("slope_gap")
    ok = gap is not None and gap >= 0.3 and elapsed < 120
    report(7, ok, f"uniform slope {s['uniform_slope']:.3f} - greedy slope {s['greedy_slope_matched']:.3f} "
                  f"= {gap:.3f} (>= 0.3) over n in [16, 144], {elapsed:.1f}s")
    assert ok


def test_criterion_08_compression_exactness(report):
    t0 = time.perf_counter()
    worst, decreasing = 0.0, True
    for seed in range(5):
        L = monte_carlo_functional(Constant(), UNIT_SQUARE, 300, seed)
        out = compress(L, MATERN1, 300)
        hn = math.sqrt(hnorm_squared(L, MATERN1))
        worst = max(worst, worst_case_error(out, L, MATERN1) / hn)
        w = np.array([t.wce for t in out.trace])
        decreasing &= bool(np.all(np.diff(w) < 0)) and out.n == 300
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and decreasing and elapsed < 10
    report(8, ok, f"wce / ||v_L|| = {worst:.1e} at n = M = 300 (<= 1e-08), strictly decreasing trace: "
                  f"{decreasing}, 5 seeds, {elapsed:.1f}s")
    assert ok


def test_criterion_09_perturbation(report):
    t0 = time.perf_counter()
    worst_id, worst_eq, dominated = 0.0, 0.0, True
    for seed in PERTURB_SEEDS:
        rng = np.random.default_rng(seed)
        X = PointSet(separated_points(rng, 40, sep=0.05))
        Le = monte_carlo_functional(SUPPORT, UNIT_SQUARE, 400, seed + 3000)
        Lt = monte_carlo_functional(SUPPORT, UNIT_SQUARE, 100, seed + 4000)
        s = perturbation_decomposition(MATERN1, X, Le, Lt)
        worst_id = max(worst_id, abs(s.total_sq - (s.e_sq + s.proj_delta_sq)) / s.total_sq)
        dominated &= s.proj_delta_sq <= s.eps_sq
        # a perturbation supported on X is seen completely by the projection
        delta = DiscreteFunctional(X, rng.normal(0.0, 0.01, len(X)))
        s2 = perturbation_decomposition(MATERN1, X, Le, difference(Le, delta))
        worst_eq = max(worst_eq, abs(s2.total_sq - (s2.e_sq + s2.eps_sq)) / s2.total_sq)
    elapsed = time.perf_counter() - t0
    ok = worst_id <= 1e-9 and worst_eq <= 1e-9 and dominated and elapsed < 10
    report(9, ok, f"split identity {worst_id:.1e}, equality case {worst_eq:.1e} (<= 1e-09), "
                  f"proj_delta_sq <= eps_sq: {dominated}, {elapsed:.1f}s")
    assert ok


def test_criterion_10_uq_pipeline(report):
    t0 = time.perf_counter()
    ds = synthetic_uq(N=2000, S=50, seed=0)
    res = {r.n: r for r in uq_sweep(ds, KernelSpec("MaternQuadratic", 0.5, 3), [25, 50, 100, 200, 2000])}
    elapsed = time.perf_counter() - t0
    full = res[2000].E_mu if 2000 in res else math.inf
    ok = full <= 1e-10 and res[200].E_mu <= res[25].E_mu and elapsed < 60
    report(10, ok, f"E_mu(n=N) = {full:.1e} (<= 1e-10), E_mu(200) = {res[200].E_mu:.2e} <= "
                   f"E_mu(25) = {res[25].E_mu:.2e}, {elapsed:.1f}s")
    assert ok


def test_criterion_11_determinism(box_runs, report):
    dirs, _, _ = box_runs
    names = sorted(p.name for p in dirs[0].glob("*.csv"))
    differ = [n for n in names if (dirs[0] / n).read_bytes() != (dirs[1] / n).read_bytes()]
    ok = not differ and len(names) >= 5
    report(11, ok, f"{len(names)} CSV files byte-identical across two runs" if ok else f"differ: {differ}")
    assert ok
