"""Greedy selection of quadrature nodes and weight-optimal rules.

For a functional ``L`` with Riesz representer ``v_L``, the weight-optimal rule
on nodes ``X`` interpolates ``v_L`` on ``X`` and its worst-case error on the
unit ball of the native space is ``||v_L - Pi_X v_L||``.  The f/P rule picks
the candidate maximizing ``|v_L - Pi v_L| / P``, which is the candidate with
the smallest one-step worst-case error.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
import scipy.linalg

from .errors import InvalidInputError, NumericalBreakdownError
from .functionals import (
    DiscreteFunctional,
    continuity_constant,
    difference,
    hnorm_squared,
    merge_signed,
    representer_values,
)
from .kernels import KernelSpec, PointSet, as_coords, diag, gram_matrix
from .newton import GreedyState

_BLOCK = 1024


class SelectionRule(str, enum.Enum):
    F_OVER_P = "FOverP"
    F = "F"
    F_OVER_SQRT_K = "FOverSqrtK"
    P = "P"


class Status(str, enum.Enum):
    MAX_N = "MaxN"
    RESIDUAL_TOL = "ResidualTol"
    WCE_TOL = "WceTol"
    POWER_EXHAUSTED = "PowerExhausted"


@dataclass(frozen=True)
class Termination:
    """Stop at ``max_n`` points, or when ``max |residual| <= residual_tol``,
    or when the worst-case error is ``<= wce_tol``.

    A tolerance of None disables that criterion; ``max_n`` is always active.
    """

    max_n: int
    residual_tol: Optional[float] = None
    wce_tol: Optional[float] = None

    def __post_init__(self):
        if int(self.max_n) != self.max_n or self.max_n < 1:
            raise InvalidInputError(f"max_n must be a positive integer, got {self.max_n}")
        for name in ("residual_tol", "wce_tol"):
            tol = getattr(self, name)
            if tol is not None and not tol >= 0:
                raise InvalidInputError(f"{name} must be nonnegative, got {tol}")
        object.__setattr__(self, "max_n", int(self.max_n))


class TraceEntry(NamedTuple):
    n: int
    wce: float
    selected_index: int
    score: float


@dataclass(frozen=True)
class QuadratureRule:
    nodes: PointSet
    weights: np.ndarray = field(repr=False)
    trace: tuple = field(default=(), repr=False)
    status: Optional[Status] = None
    indices: tuple = field(default=(), repr=False)
    initial_wce: float = float("nan")

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != len(self.nodes):
            raise InvalidInputError(f"{w.shape[0]} weights for {len(self.nodes)} nodes")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.nodes)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def wce(self) -> float:
        """The tracked worst-case error after the last step."""
        return self.trace[-1].wce if self.trace else self.initial_wce


def selection_scores(state: GreedyState, rule: SelectionRule) -> np.ndarray:
    """Score of every candidate under ``rule``; ineligible ones get ``-inf``."""
    rule = SelectionRule(rule)
    eligible = state.eligible()
    scores = np.full(len(state.candidates), -np.inf)
    r = np.abs(state.residual[eligible])
    if rule is SelectionRule.F_OVER_P:
        scores[eligible] = r / np.sqrt(state.power_sq[eligible])
    elif rule is SelectionRule.F:
        scores[eligible] = r
    elif rule is SelectionRule.F_OVER_SQRT_K:
        scores[eligible] = r / np.sqrt(state.kdiag[eligible])
    else:
        scores[eligible] = np.sqrt(state.power_sq[eligible])
    return scores


def greedy_loop(
    state: GreedyState,
    rule: SelectionRule,
    term: Termination,
    step_hook: Optional[Callable[[GreedyState, int, float], None]] = None,
):
    """Run selection steps on ``state`` until a stopping criterion fires.

    ``step_hook(state, idx, score)`` is called just before each ``add_point``.
    Returns ``(trace, status)``.
    """
    rule = SelectionRule(rule)
    trace = []
    while True:
        if state.n >= term.max_n:
            status = Status.MAX_N
            break
        if (term.residual_tol is not None and rule is not SelectionRule.P
                and np.max(np.abs(state.residual)) <= term.residual_tol):
            status = Status.RESIDUAL_TOL
            break
        if term.wce_tol is not None and math.sqrt(state.wce_squared()) <= term.wce_tol:
            status = Status.WCE_TOL
            break
        scores = selection_scores(state, rule)
        idx = int(np.argmax(scores))
        best = scores[idx]
        if best == -np.inf:
            status = Status.POWER_EXHAUSTED
            break
        if best <= 0.0:
            status = Status.RESIDUAL_TOL
            break
        if step_hook is not None:
            step_hook(state, idx, float(best))
        state.add_point(idx)
        trace.append(TraceEntry(state.n, math.sqrt(state.wce_squared()), idx, float(best)))
    return trace, status


def run_greedy(
    kernel: KernelSpec,
    candidates: PointSet,
    L: DiscreteFunctional,
    rule: SelectionRule = SelectionRule.F_OVER_P,
    term: Termination = Termination(max_n=100),
    step_hook=None,
    max_entries: Optional[int] = None,
    coeff_precision: str = "extended",
) -> QuadratureRule:
    """Greedy weight-optimal quadrature for ``L`` with nodes drawn from ``candidates``.

    ``coeff_precision`` selects how the change of basis is accumulated, see
    :mod:`gkquad.newton`; ``"double"`` is much faster for runs of thousands of steps.
    """
    state, trace, status = greedy_run_state(kernel, candidates, L, rule, term, step_hook, max_entries,
                                            coeff_precision)
    return rule_from_state(state, refine_trace(state, trace, L), status)


def refine_trace(state: GreedyState, trace, L: DiscreteFunctional):
    """Recompute the trace errors backwards from an accurate final error.

    By energy splitting ``e_n^2 = e_final^2 + sum_{k > n} c_k^2``.  The running
    value ``||v_L||^2 - sum_k c_k^2`` loses all accuracy once ``e_n`` drops
    to about ``sqrt(eps) ||v_L||``; the tail sums have no cancellation, and
    ``e_final`` comes from :func:`signed_norm_sq`.
    """
    if not trace:
        return list(trace)
    w = state.newton_to_standard()
    e_sq = signed_norm_sq(state.kernel, state.candidates.coords[state.selected], w, L)
    c_sq = state.coeffs ** 2
    # tail[k] = sum of c_j^2 for j > k (0-based step index)
    tail = np.concatenate([np.cumsum(c_sq[::-1])[::-1][1:], [0.0]])
    return [t._replace(wce=math.sqrt(e_sq + tail[t.n - 1])) for t in trace]


def greedy_run_state(kernel, candidates, L, rule=SelectionRule.F_OVER_P, term=Termination(max_n=100),
                     step_hook=None, max_entries=None, coeff_precision="extended"):
    """Like :func:`run_greedy` but returns ``(state, trace, status)`` for further inspection."""
    if len(candidates) == 0:
        raise InvalidInputError("candidate set is empty")
    if candidates.dim != L.dim:
        raise InvalidInputError(f"candidates have dimension {candidates.dim}, functional has {L.dim}")
    target = representer_values(L, kernel, candidates)
    hn = hnorm_squared(L, kernel)
    kwargs = {"coeff_precision": coeff_precision}
    if max_entries is not None:
        kwargs["max_entries"] = max_entries
    state = GreedyState.init(kernel, candidates, target, hn, **kwargs)
    trace, status = greedy_loop(state, rule, term, step_hook)
    return state, trace, status


def prefix_weights(state: GreedyState, n: int) -> np.ndarray:
    """Optimal weights of the rule made of the first ``n`` selected points.

    The Newton basis is nested, so this is the leading block of the change of
    basis applied to the leading coefficients.
    """
    if not 1 <= n <= state.n:
        raise InvalidInputError(f"prefix length {n} outside 1..{state.n}")
    C = state.newton_coeffs[:n, :n]
    return (C.T @ state.coeffs[:n].astype(C.dtype)).astype(float)


def rule_from_state(state: GreedyState, trace=(), status=None) -> QuadratureRule:
    idx = tuple(state.selected)
    weights = state.newton_to_standard() if idx else np.zeros(0)
    nodes = state.candidates[list(idx)] if idx else PointSet(np.zeros((0, state.kernel.dim)), check=False)
    return QuadratureRule(
        nodes=nodes,
        weights=weights,
        trace=tuple(trace),
        status=status,
        indices=idx,
        initial_wce=math.sqrt(state.target_hnorm_sq),
    )


def _quadratic_form(kernel: KernelSpec, X: np.ndarray, beta: np.ndarray) -> float:
    partial = []
    for start in range(0, X.shape[0], _BLOCK):
        stop = min(start + _BLOCK, X.shape[0])
        partial.append(float(beta[start:stop] @ (gram_matrix(kernel, X[start:stop], X) @ beta)))
    return math.fsum(partial)


def signed_norm_sq(kernel: KernelSpec, X, w, L: DiscreteFunctional) -> float:
    """``||sum_i w_i K(., x_i) - v_L||^2``, clamped at zero.

    Coinciding nodes of the rule and of ``L`` are merged before forming the
    quadratic form, so an exact reproduction of ``L`` gives exactly zero.
    """
    Xc = as_coords(X).reshape(-1, L.dim)
    U, beta = merge_signed([(Xc, w), (L.nodes.coords, -L.weights)], L.dim)
    return max(0.0, _quadratic_form(kernel, U, beta))


def worst_case_error(rule_out: QuadratureRule, L: DiscreteFunctional, kernel: KernelSpec) -> float:
    """Recompute ``e_H`` of ``rule_out`` for ``L`` from scratch."""
    if rule_out.n == 0:
        return math.sqrt(hnorm_squared(L, kernel))
    return math.sqrt(signed_norm_sq(kernel, rule_out.nodes.coords, rule_out.weights, L))


def apply_rule(rule_out: QuadratureRule, f_values_at_nodes) -> float:
    f = np.asarray(f_values_at_nodes, dtype=float).reshape(-1)
    if f.shape[0] != rule_out.n:
        raise InvalidInputError(f"f has {f.shape[0]} values for a rule with {rule_out.n} nodes")
    return float(math.fsum(rule_out.weights * f))


def optimal_weights(kernel: KernelSpec, X: PointSet, L: DiscreteFunctional) -> np.ndarray:
    """Weights of the weight-optimal rule on fixed nodes, by a dense Cholesky solve."""
    A = gram_matrix(kernel, X)
    try:
        factor = scipy.linalg.cho_factor(A, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalBreakdownError(f"kernel matrix on {len(X)} nodes is numerically singular") from exc
    return scipy.linalg.cho_solve(factor, representer_values(L, kernel, X))


def weight_optimal_rule(kernel: KernelSpec, X: PointSet, L: DiscreteFunctional) -> QuadratureRule:
    w = optimal_weights(kernel, X, L)
    wce = math.sqrt(signed_norm_sq(kernel, X.coords, w, L))
    return QuadratureRule(nodes=X, weights=w, trace=(TraceEntry(len(X), wce, -1, float("nan")),),
                          initial_wce=math.sqrt(hnorm_squared(L, kernel)))


def discrete_continuity(L: DiscreteFunctional):
    """The canonical ``(q, c_L) = (inf, ||rho||_1)`` pair of a discrete functional."""
    return math.inf, continuity_constant(L)


def greedy_bound_constant(L: DiscreteFunctional, kernel: KernelSpec, domain, q: float, c_L: float,
                          candidates=None) -> float:
    """``c_G = max(||v_L||, c_L |Omega|^(1/q) max sqrt(K(x, x)))``.

    The greedy worst-case error after ``n`` steps is at most ``c_G / sqrt(n)``.
    """
    if c_L < 0:
        raise InvalidInputError("c_L must be nonnegative")
    if candidates is None:
        kmax = kernel.max_diag
    else:
        kmax = float(np.max(diag(kernel, candidates)))
    measure_factor = 1.0 if math.isinf(q) else domain.measure ** (1.0 / q)
    return max(math.sqrt(hnorm_squared(L, kernel)), c_L * measure_factor * math.sqrt(kmax))


@dataclass(frozen=True)
class PerturbationSplit:
    """Squared errors of a rule built from a perturbed functional.

    ``total_sq = e_sq + proj_delta_sq`` holds exactly in exact arithmetic, and
    ``proj_delta_sq <= eps_sq``.
    """

    e_sq: float
    proj_delta_sq: float
    eps_sq: float
    total_sq: float


def perturbation_decomposition(kernel: KernelSpec, X: PointSet, L_exact: DiscreteFunctional,
                               L_tilde: DiscreteFunctional) -> PerturbationSplit:
    A = gram_matrix(kernel, X)
    try:
        chol = scipy.linalg.cholesky(A, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalBreakdownError("kernel matrix on X is numerically singular") from exc
    delta = difference(L_exact, L_tilde)

    def solve(b):
        return scipy.linalg.cho_solve((chol, True), b)

    w_exact = solve(representer_values(L_exact, kernel, X))
    w_tilde = solve(representer_values(L_tilde, kernel, X))
    y = scipy.linalg.solve_triangular(chol, representer_values(delta, kernel, X), lower=True)
    return PerturbationSplit(
        e_sq=signed_norm_sq(kernel, X.coords, w_exact, L_exact),
        proj_delta_sq=float(math.fsum(y * y)),
        eps_sq=hnorm_squared(delta, kernel),
        total_sq=signed_norm_sq(kernel, X.coords, w_tilde, L_exact),
    )


def compress(L: DiscreteFunctional, kernel: KernelSpec, n: int,
             rule: SelectionRule = SelectionRule.F_OVER_P, step_hook=None,
             coeff_precision: str = "extended") -> QuadratureRule:
    """Extract an ``n``-node weight-optimal rule from the nodes of ``L``."""
    if int(n) != n or n < 1:
        raise InvalidInputError(f"n must be a positive integer, got {n}")
    if n > len(L):
        raise InvalidInputError(f"cannot compress {len(L)} nodes to {n}")
    return run_greedy(kernel, L.nodes, L, rule, Termination(max_n=int(n)), step_hook=step_hook,
                      coeff_precision=coeff_precision)
