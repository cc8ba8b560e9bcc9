"""Compression of a Monte Carlo estimator of output statistics.

A dataset holds parameter samples ``theta_i`` (rows of ``params``) and model
outputs ``y_i`` (rows of ``outputs``, one column per solution cell).  The
empirical mean over the samples is the functional; greedy compression picks
``n`` samples and weights, which then estimate the mean and standard
deviation of every output cell.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidInputError
from ..functionals import DiscreteFunctional
from ..greedy import (
    QuadratureRule,
    SelectionRule,
    Termination,
    greedy_run_state,
    prefix_weights,
    refine_trace,
    rule_from_state,
)
from ..kernels import KernelSpec, PointSet

DEFAULT_SYNTH_SCALE = 10.0


@dataclass(frozen=True)
class UqDataset:
    params: np.ndarray = field(repr=False)
    outputs: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.array(self.params, dtype=float)
        y = np.array(self.outputs, dtype=float)
        if p.ndim != 2 or y.ndim != 2:
            raise InvalidInputError("params and outputs must be matrices")
        if p.shape[0] != y.shape[0]:
            raise InvalidInputError(f"{p.shape[0]} parameter rows but {y.shape[0]} output rows")
        if p.shape[0] < 1 or y.shape[1] < 1:
            raise InvalidInputError("dataset needs N >= 1 samples and S >= 1 cells")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(y))):
            raise InvalidInputError("dataset contains non-finite values")
        p.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "params", p)
        object.__setattr__(self, "outputs", y)

    @property
    def N(self) -> int:
        return self.params.shape[0]

    @property
    def S(self) -> int:
        return self.outputs.shape[1]

    def functional(self) -> DiscreteFunctional:
        """The Monte Carlo mean, uniform weights ``1/N`` on the parameter rows."""
        return DiscreteFunctional(PointSet(self.params), np.full(self.N, 1.0 / self.N))


@dataclass(frozen=True)
class UqResult:
    n: int
    E_mu: float
    E_sigma: float
    clamped: int
    mu: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    rule_out: QuadratureRule = field(repr=False, default=None)


def weighted_moments(weights, Y):
    """``(mean, std, clamped)`` with the variance argument clamped at zero."""
    weights = np.asarray(weights, dtype=float)
    mu = weights @ Y
    var = weights @ (Y * Y) - mu * mu
    neg = var < 0
    return mu, np.sqrt(np.where(neg, 0.0, var)), int(np.count_nonzero(neg))


def reference_moments(dataset: UqDataset):
    mu, sigma, _ = weighted_moments(np.full(dataset.N, 1.0 / dataset.N), dataset.outputs)
    return mu, sigma


def _errors(dataset, idx, w, mu_ref, sigma_ref):
    mu, sigma, clamped = weighted_moments(w, dataset.outputs[list(idx)])
    S = dataset.S
    return mu, sigma, clamped, float(np.linalg.norm(mu_ref - mu)) / S, float(np.linalg.norm(sigma_ref - sigma)) / S


def uq_sweep(dataset: UqDataset, kernel: KernelSpec, ns, rule=SelectionRule.F_OVER_P, coeff_precision="double"):
    """Run greedy once up to ``max(ns)`` and evaluate every nested prefix in ``ns``.

    Sizes beyond the point where greedy stopped are skipped.  Sweeps usually
    run to ``n`` close to ``N``, so the change of basis defaults to float64.
    """
    ns = sorted({int(n) for n in ns})
    if not ns or ns[0] < 1:
        raise InvalidInputError("ns must be positive integers")
    if ns[-1] > dataset.N:
        raise InvalidInputError(f"n = {ns[-1]} exceeds the dataset size {dataset.N}")
    if kernel.dim != dataset.params.shape[1]:
        raise InvalidInputError(f"kernel dimension {kernel.dim} but params have {dataset.params.shape[1]} columns")
    L = dataset.functional()
    state, trace, status = greedy_run_state(kernel, L.nodes, L, rule, Termination(max_n=ns[-1]),
                                           coeff_precision=coeff_precision)
    mu_ref, sigma_ref = reference_moments(dataset)
    results = []
    for n in ns:
        if n > state.n:
            break
        w = prefix_weights(state, n)
        idx = state.selected[:n]
        mu, sigma, clamped, e_mu, e_sigma = _errors(dataset, idx, w, mu_ref, sigma_ref)
        rule_out = rule_from_state(state, refine_trace(state, trace, L), status) if n == state.n else None
        results.append(UqResult(n=n, E_mu=e_mu, E_sigma=e_sigma, clamped=clamped, mu=mu, sigma=sigma,
                                rule_out=rule_out))
    return results


def uq_compress(dataset: UqDataset, kernel: KernelSpec, n: int, rule=SelectionRule.F_OVER_P,
                coeff_precision="double") -> UqResult:
    """Compress the dataset mean to ``n`` nodes and report ``E_mu``, ``E_sigma``.

    The errors are normalized by the number of cells ``S``.
    """
    if int(n) != n or n < 1:
        raise InvalidInputError(f"n must be a positive integer, got {n}")
    res = uq_sweep(dataset, kernel, [n], rule, coeff_precision)
    if not res:
        raise InvalidInputError(f"greedy stopped before reaching n = {n}")
    return res[0]


def synthetic_uq(N: int = 2000, S: int = 50, seed: int = 0, scale: float = DEFAULT_SYNTH_SCALE) -> UqDataset:
    """A seeded smooth parameter-to-output map mimicking a moving saturation front.

    Three independent inputs (uniform, Beta(2, 5), truncated normal) on
    ``[0, 1]`` control the position and width of a tanh front sampled at ``S``
    cell centres.  Parameters are stored multiplied by ``scale``, which sets
    the separation of the samples relative to the kernel length scale.
    """
    if int(N) != N or N < 1 or int(S) != S or S < 1:
        raise InvalidInputError("N and S must be positive integers")
    if not scale > 0:
        raise InvalidInputError("scale must be positive")
    rng = np.random.default_rng(seed)
    u = np.column_stack([
        rng.uniform(0.0, 1.0, N),
        rng.beta(2.0, 5.0, N),
        np.clip(rng.normal(0.5, 0.15, N), 0.0, 1.0),
    ])
    x = (np.arange(S) + 0.5) / S
    front = 0.25 + 0.4 * u[:, 0] ** 0.8 * (1.0 + 0.3 * u[:, 2]) / (1.0 + 0.5 * u[:, 1])
    width = 0.04 + 0.06 * u[:, 1]
    y = 0.5 * (1.0 - np.tanh((x[None, :] - front[:, None]) / width[:, None]))
    return UqDataset(params=u * scale, outputs=y)


def summary_rows(results):
    return [(r.n, r.E_mu, r.E_sigma, r.clamped) for r in results]

