"""Brute-force reference computations.

Everything here goes through dense factorizations of the kernel matrix and
never touches the Newton basis, so agreement with :mod:`gkquad.newton` and
:mod:`gkquad.greedy` is a meaningful check.  Intended for test-sized inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.spatial import cKDTree

from .errors import InvalidInputError, NumericalBreakdownError
from .functionals import DiscreteFunctional
from .kernels import KernelSpec, as_coords, gram_matrix


@dataclass(frozen=True)
class DenseProjection:
    gram: np.ndarray
    cross: np.ndarray
    alpha: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return self.cross @ self.alpha


def dense_projection(kernel: KernelSpec, X, values, query) -> DenseProjection:
    A = gram_matrix(kernel, X)
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.shape[0] != A.shape[0]:
        raise InvalidInputError(f"{values.shape[0]} values for {A.shape[0]} points")
    try:
        factor = scipy.linalg.cho_factor(A, lower=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalBreakdownError("kernel matrix is numerically singular") from exc
    alpha = scipy.linalg.cho_solve(factor, values)
    return DenseProjection(gram=A, cross=gram_matrix(kernel, query, X), alpha=alpha)


def direct_interpolant(kernel: KernelSpec, X, values, query) -> np.ndarray:
    """Kernel interpolant of ``values`` on ``X``, evaluated at ``query``."""
    return dense_projection(kernel, X, values, query).values


def _representer(kernel, L: DiscreteFunctional, X) -> np.ndarray:
    # naive accumulation over nodes, independent of functionals.representer_values
    Xc = as_coords(X)
    out = np.zeros(Xc.shape[0])
    for z, rho in zip(L.nodes.coords, L.weights):
        out += rho * kernel.phi(np.sqrt(np.sum((Xc - z) ** 2, axis=1)))
    return out


def hnorm_sq_naive(kernel: KernelSpec, L: DiscreteFunctional) -> float:
    Z = L.nodes.coords
    total = 0.0
    for i in range(len(L)):
        r = np.sqrt(np.sum((Z - Z[i]) ** 2, axis=1))
        total += L.weights[i] * float(L.weights @ kernel.phi(r))
    return total


def projection_error_sq(kernel: KernelSpec, X, L: DiscreteFunctional, hnorm_sq=None) -> float:
    """``||v_L - Pi_X v_L||^2 = ||v_L||^2 - v_L(X)^T A^{-1} v_L(X)``."""
    if hnorm_sq is None:
        hnorm_sq = hnorm_sq_naive(kernel, L)
    Xc = as_coords(X)
    if Xc.shape[0] == 0:
        return hnorm_sq
    b = _representer(kernel, L, Xc)
    A = gram_matrix(kernel, Xc)
    return hnorm_sq - float(b @ np.linalg.solve(A, b))


def one_step_errors(kernel: KernelSpec, current, candidates, L: DiscreteFunctional, hnorm_sq=None) -> np.ndarray:
    """``||v_L - Pi_{X + {x}} v_L||^2`` for every candidate ``x``.

    Candidates coinciding with a point of ``current`` get ``+inf``.
    """
    if hnorm_sq is None:
        hnorm_sq = hnorm_sq_naive(kernel, L)
    X = as_coords(current).reshape(-1, kernel.dim)
    Y = as_coords(candidates)
    n = X.shape[0]
    bx = _representer(kernel, L, X)
    by = _representer(kernel, L, Y)
    A = gram_matrix(kernel, X)
    cross = gram_matrix(kernel, Y, X)
    kyy = kernel.phi(np.zeros(Y.shape[0]))
    # batched (n+1) x (n+1) systems, one per candidate
    big = np.empty((Y.shape[0], n + 1, n + 1))
    big[:, :n, :n] = A
    big[:, :n, n] = cross
    big[:, n, :n] = cross
    big[:, n, n] = kyy
    rhs = np.empty((Y.shape[0], n + 1))
    rhs[:, :n] = bx
    rhs[:, n] = by
    out = np.full(Y.shape[0], np.inf)
    if n:
        dist = np.min(np.sum((Y[:, None, :] - X[None, :, :]) ** 2, axis=2), axis=1)
        ok = dist > 1e-24
    else:
        ok = np.ones(Y.shape[0], dtype=bool)
    sol = np.linalg.solve(big[ok], rhs[ok][..., None])[..., 0]
    out[ok] = hnorm_sq - np.sum(rhs[ok] * sol, axis=1)
    return out


def exhaustive_fp_step(kernel: KernelSpec, current, candidates, L: DiscreteFunctional, hnorm_sq=None) -> int:
    """Index of the candidate whose addition minimizes the worst-case error (lowest on ties)."""
    errs = one_step_errors(kernel, current, candidates, L, hnorm_sq)
    return int(np.argmin(errs))


@dataclass(frozen=True)
class FillSeparation:
    h: float
    q_sep: float


def fill_and_separation(X, probe) -> FillSeparation:
    """Fill distance of ``X`` measured on ``probe`` and separation distance of ``X``."""
    Xc = as_coords(X)
    P = as_coords(probe)
    if Xc.shape[0] == 0:
        raise InvalidInputError("X is empty")
    tree = cKDTree(Xc)
    h = float(np.max(tree.query(P, k=1)[0]))
    if Xc.shape[0] < 2:
        return FillSeparation(h=h, q_sep=math.inf)
    d, _ = tree.query(Xc, k=2)
    return FillSeparation(h=h, q_sep=0.5 * float(np.min(d[:, 1])))


def rate_fit(ns, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(n)``."""
    ns = np.asarray(ns, dtype=float).reshape(-1)
    errors = np.asarray(errors, dtype=float).reshape(-1)
    if ns.shape != errors.shape:
        raise InvalidInputError("ns and errors differ in length")
    if ns.shape[0] < 3:
        raise InvalidInputError("need at least three points for a rate fit")
    if np.any(errors <= 0):
        raise InvalidInputError("errors must be positive")
    if np.any(np.diff(ns) <= 0):
        raise InvalidInputError("ns must be strictly increasing")
    x = np.log(ns)
    y = np.log(errors)
    xm = x - x.mean()
    return float(xm @ (y - y.mean()) / (xm @ xm))
