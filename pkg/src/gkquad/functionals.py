"""Discrete functionals ``L(f) = sum_i rho_i f(z_i)`` and their Riesz representers.

Integration functionals with a density are approximated by Monte Carlo:
uniform samples ``z_i`` on the domain with importance weights
``rho_i = nu(z_i) |Omega| / M``.  Random numbers come from numpy's PCG64
generator (``numpy.random.default_rng(seed)``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import InvalidInputError
from .kernels import KernelSpec, PointSet, as_coords, gram_matrix, find_duplicates, DUPLICATE_SQ_TOL

#: samples closer than this to a radial singularity are redrawn
SINGULAR_EXCLUSION = 1e-12
#: default cap on the node count for the O(M^2) norm computation
DEFAULT_MAX_NORM_NODES = 20000
_BLOCK = 1024


# -- densities --------------------------------------------------------------

@dataclass(frozen=True)
class IndicatorBox:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        if lo.shape != hi.shape or not np.all(lo < hi):
            raise InvalidInputError("IndicatorBox needs lo < hi componentwise")
        object.__setattr__(self, "lo", tuple(lo.tolist()))
        object.__setattr__(self, "hi", tuple(hi.tolist()))

    @property
    def dim(self):
        return len(self.lo)

    def __call__(self, x):
        x = as_coords(x)
        inside = np.all((x >= np.asarray(self.lo)) & (x <= np.asarray(self.hi)), axis=1)
        return inside.astype(float)


@dataclass(frozen=True)
class RadialSingular:
    """``nu(x) = ||x - center||^(-alpha)``."""

    center: tuple
    alpha: float

    def __post_init__(self):
        if not self.alpha >= 0:
            raise InvalidInputError(f"alpha must be nonnegative, got {self.alpha}")
        object.__setattr__(self, "center", tuple(np.asarray(self.center, float).tolist()))

    @property
    def dim(self):
        return len(self.center)

    def distance(self, x):
        d = as_coords(x) - np.asarray(self.center)
        return np.sqrt(np.sum(d * d, axis=1))

    def __call__(self, x):
        return self.distance(x) ** (-self.alpha)


@dataclass(frozen=True)
class SphereGaussian:
    """``nu(x) = exp((x - center)^T diag(sigma_diag) (x - center))`` in Cartesian coordinates."""

    center: tuple
    sigma_diag: tuple

    def __post_init__(self):
        c = np.asarray(self.center, float)
        s = np.asarray(self.sigma_diag, float)
        if c.shape != (3,) or s.shape != (3,):
            raise InvalidInputError("SphereGaussian needs 3-vectors for center and sigma_diag")
        object.__setattr__(self, "center", tuple(c.tolist()))
        object.__setattr__(self, "sigma_diag", tuple(s.tolist()))

    @property
    def dim(self):
        return 3

    def __call__(self, x):
        d = as_coords(x) - np.asarray(self.center)
        return np.exp(np.sum(d * d * np.asarray(self.sigma_diag), axis=1))


@dataclass(frozen=True)
class Constant:
    value: float = 1.0

    dim = None

    def __call__(self, x):
        return np.full(as_coords(x).shape[0], float(self.value))


DensitySpec = Union[IndicatorBox, RadialSingular, SphereGaussian, Constant]


# -- domains ----------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        if lo.ndim != 1 or lo.shape != hi.shape or not np.all(lo < hi):
            raise InvalidInputError("Box needs lo < hi componentwise")
        object.__setattr__(self, "lo", tuple(lo.tolist()))
        object.__setattr__(self, "hi", tuple(hi.tolist()))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def manifold_dim(self) -> int:
        return self.dim

    @property
    def measure(self) -> float:
        return float(np.prod(np.asarray(self.hi) - np.asarray(self.lo)))

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(m, self.dim))


@dataclass(frozen=True)
class UnitSphere2:
    dim = 3
    manifold_dim = 2
    measure = 4.0 * math.pi

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        g = rng.standard_normal((m, 3))
        return g / np.sqrt(np.sum(g * g, axis=1))[:, None]


DomainSpec = Union[Box, UnitSphere2]


# -- discrete functionals ---------------------------------------------------

@dataclass(frozen=True)
class DiscreteFunctional:
    """``L(f) = sum_i weights[i] * f(nodes[i])``."""

    nodes: PointSet
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if len(self.nodes) < 1:
            raise InvalidInputError("a discrete functional needs at least one node")
        if w.shape[0] != len(self.nodes):
            raise InvalidInputError(f"{w.shape[0]} weights for {len(self.nodes)} nodes")
        if not np.all(np.isfinite(w)):
            raise InvalidInputError("weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.nodes)

    @property
    def dim(self):
        return self.nodes.dim

    def scaled(self, s: float) -> "DiscreteFunctional":
        return DiscreteFunctional(self.nodes, s * self.weights)


def point_evaluation(z, on_sphere: bool = False) -> DiscreteFunctional:
    """The functional ``f -> f(z)``."""
    return DiscreteFunctional(PointSet(np.atleast_2d(z), on_sphere=on_sphere), np.ones(1))


def monte_carlo_functional(density, domain, M: int, seed: int) -> DiscreteFunctional:
    """Monte Carlo surrogate of ``f -> int_Omega f nu``."""
    if int(M) != M or M < 1:
        raise InvalidInputError(f"M must be a positive integer, got {M}")
    M = int(M)
    ddim = getattr(density, "dim", None)
    if ddim is not None and ddim != domain.dim:
        raise InvalidInputError(f"density has dimension {ddim}, domain has {domain.dim}")
    rng = np.random.default_rng(seed)
    nodes = domain.sample(rng, M)
    if isinstance(density, RadialSingular):
        while True:
            bad = np.flatnonzero(density.distance(nodes) <= SINGULAR_EXCLUSION)
            if bad.size == 0:
                break
            nodes[bad] = domain.sample(rng, bad.size)
    weights = density(nodes) * (domain.measure / M)
    return DiscreteFunctional(PointSet(nodes, on_sphere=isinstance(domain, UnitSphere2)), weights)


def apply(L: DiscreteFunctional, f_values) -> float:
    f = np.asarray(f_values, dtype=float).reshape(-1)
    if f.shape[0] != len(L):
        raise InvalidInputError(f"f_values has length {f.shape[0]}, functional has {len(L)} nodes")
    return float(math.fsum(L.weights * f))


def representer_values(L: DiscreteFunctional, kernel: KernelSpec, X) -> np.ndarray:
    """``v_L(x) = sum_i rho_i K(x, z_i)`` at every row of ``X``."""
    Xc = as_coords(X)
    out = np.empty(Xc.shape[0])
    for start in range(0, Xc.shape[0], _BLOCK):
        stop = min(start + _BLOCK, Xc.shape[0])
        out[start:stop] = gram_matrix(kernel, Xc[start:stop], L.nodes) @ L.weights
    return out


def hnorm_squared(L: DiscreteFunctional, kernel: KernelSpec, max_nodes: int = DEFAULT_MAX_NORM_NODES) -> float:
    """``||v_L||_H^2 = rho^T A rho``, accumulated block by block in a fixed order."""
    if len(L) > max_nodes:
        raise InvalidInputError(f"{len(L)} nodes exceeds the norm computation cap of {max_nodes}")
    Z = L.nodes.coords
    rho = L.weights
    partial = []
    for start in range(0, len(L), _BLOCK):
        stop = min(start + _BLOCK, len(L))
        partial.append(float(rho[start:stop] @ (gram_matrix(kernel, Z[start:stop], Z) @ rho)))
    return max(0.0, math.fsum(partial))


def continuity_constant(L: DiscreteFunctional) -> float:
    """``||rho||_1``, the sup-norm continuity constant of ``L`` (pairs with ``q = inf``)."""
    return float(math.fsum(np.abs(L.weights)))


def merge_signed(parts, dim: int):
    """Combine several weighted point clouds into one, summing weights of coinciding points.

    ``parts`` is an iterable of ``(coords, weights)``.  Returns ``(coords, weights)``
    with pairwise distinct rows.
    """
    coords = [np.asarray(c, float).reshape(-1, dim) for c, _ in parts]
    weights = [np.asarray(w, float).reshape(-1) for _, w in parts]
    X = np.vstack(coords) if coords else np.zeros((0, dim))
    w = np.concatenate(weights) if weights else np.zeros(0)
    if X.shape[0] < 2 or find_duplicates(X) is None:
        return X, w
    from scipy.spatial import cKDTree

    pairs = cKDTree(X).query_pairs(r=np.sqrt(DUPLICATE_SQ_TOL), output_type="ndarray")
    parent = np.arange(X.shape[0])

    def root(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in pairs:
        d = X[i] - X[j]
        if float(d @ d) <= DUPLICATE_SQ_TOL:
            ri, rj = root(i), root(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    roots = np.array([root(i) for i in range(X.shape[0])])
    keep = np.flatnonzero(roots == np.arange(X.shape[0]))
    merged = np.zeros(X.shape[0])
    np.add.at(merged, roots, w)
    return X[keep], merged[keep]


def difference(L1: DiscreteFunctional, L2: DiscreteFunctional) -> DiscreteFunctional:
    """``L1 - L2`` on the union of their nodes."""
    if L1.dim != L2.dim:
        raise InvalidInputError("functionals live in different dimensions")
    X, w = merge_signed([(L1.nodes.coords, L1.weights), (L2.nodes.coords, -L2.weights)], L1.dim)
    return DiscreteFunctional(PointSet(X, check=False), w)
