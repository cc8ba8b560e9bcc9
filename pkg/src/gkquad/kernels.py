"""Strictly positive definite radial kernels and point sets.

Two families are provided:

``MaternQuadratic``
    ``phi(r) = exp(-gamma r) (3 + 3 gamma r + (gamma r)^2)``, with ``phi(0) = 3``.
``Gaussian``
    ``phi(r) = exp(-(gamma r)^2)``, with ``phi(0) = 1``.

Distances are always computed as the square root of an explicit sum of
squared coordinate differences, so that ``K(x, y)`` and ``K(y, x)`` are the
same floating-point expression.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidInputError

#: two points closer than this (squared distance) are considered identical
DUPLICATE_SQ_TOL = 1e-24
#: tolerance on the unit-norm constraint of sphere points
SPHERE_NORM_TOL = 1e-12
#: rows per block when assembling kernel matrices
_ROW_BLOCK = 1024


class KernelFamily(str, enum.Enum):
    MATERN_QUADRATIC = "MaternQuadratic"
    GAUSSIAN = "Gaussian"


@dataclass(frozen=True)
class KernelSpec:
    """A radial kernel ``K(x, y) = phi(||x - y||)`` on ``R^dim``.

    ``tau`` is the Fourier-decay exponent of the kernel. It is metadata used
    only to draw reference convergence rates and never enters the numerics.
    """

    family: KernelFamily
    gamma: float
    dim: int
    tau: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise InvalidInputError(f"gamma must be positive, got {self.gamma}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise InvalidInputError(f"dim must be a positive integer, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        if self.tau is not None and not self.tau > 0:
            raise InvalidInputError(f"tau must be positive, got {self.tau}")

    @property
    def smoothness(self) -> float:
        """``tau`` if given, else the default for the family in dimension ``dim``."""
        if self.tau is not None:
            return float(self.tau)
        if self.family is KernelFamily.MATERN_QUADRATIC:
            return (self.dim + 5) / 2
        return np.inf

    @property
    def max_diag(self) -> float:
        """``max_x K(x, x)``, which for radial kernels is ``phi(0)``."""
        return float(self.phi(np.zeros(1))[0])

    def phi(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        s = self.gamma * r
        if self.family is KernelFamily.MATERN_QUADRATIC:
            return np.exp(-s) * (3.0 + 3.0 * s + s * s)
        return np.exp(-(s * s))

    def to_dict(self) -> dict:
        return {"family": self.family.value, "gamma": self.gamma, "dim": self.dim, "tau": self.tau}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(family=d["family"], gamma=float(d["gamma"]), dim=int(d["dim"]), tau=d.get("tau"))


class PointSet:
    """An immutable set of pairwise distinct points, one per row.

    Construction fails if two rows are within squared distance
    ``DUPLICATE_SQ_TOL``, or, with ``on_sphere=True``, if a row is not of unit
    norm.
    """

    __slots__ = ("_coords", "on_sphere")

    def __init__(self, coords, on_sphere: bool = False, check: bool = True):
        arr = np.array(coords, dtype=float, copy=True)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise InvalidInputError(f"coords must be a 2-d array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("coords contain non-finite values")
        arr.setflags(write=False)
        self._coords = arr
        self.on_sphere = bool(on_sphere)
        if check:
            self._validate()

    def _validate(self):
        X = self._coords
        if self.on_sphere:
            if X.shape[1] != 3:
                raise InvalidInputError("sphere points must live in R^3")
            norms = np.sqrt(np.sum(X * X, axis=1))
            bad = np.flatnonzero(np.abs(norms - 1.0) > SPHERE_NORM_TOL)
            if bad.size:
                raise InvalidInputError(f"point {bad[0]} is not on the unit sphere (norm {norms[bad[0]]!r})")
        dup = find_duplicates(X)
        if dup is not None:
            i, j = dup
            raise InvalidInputError(f"points {i} and {j} coincide")

    @property
    def coords(self) -> np.ndarray:
        return self._coords

    @property
    def dim(self) -> int:
        return self._coords.shape[1]

    def __len__(self) -> int:
        return self._coords.shape[0]

    def __getitem__(self, idx) -> "PointSet":
        sub = self._coords[np.atleast_1d(idx)]
        return PointSet(sub, on_sphere=self.on_sphere, check=False)

    def __repr__(self) -> str:
        return f"PointSet(n={len(self)}, dim={self.dim}, on_sphere={self.on_sphere})"


def find_duplicates(X: np.ndarray):
    """Return one pair ``(i, j)`` of coinciding rows of ``X``, or None."""
    if X.shape[0] < 2:
        return None
    pairs = cKDTree(X).query_pairs(r=np.sqrt(DUPLICATE_SQ_TOL), output_type="ndarray")
    for i, j in pairs:
        d = X[i] - X[j]
        if float(d @ d) <= DUPLICATE_SQ_TOL:
            return int(min(i, j)), int(max(i, j))
    return None


def as_coords(X) -> np.ndarray:
    if isinstance(X, PointSet):
        return X.coords
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    return arr


def _check_dim(kernel: KernelSpec, X: np.ndarray, name: str):
    if X.ndim != 2 or X.shape[1] != kernel.dim:
        raise InvalidInputError(f"{name} has dimension {X.shape[-1]}, kernel expects {kernel.dim}")


def evaluate(kernel: KernelSpec, x, y) -> float:
    """``K(x, y)`` for two single points."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape[0] != kernel.dim or y.shape[0] != kernel.dim:
        raise InvalidInputError(f"points must have dimension {kernel.dim}")
    d = x - y
    r = np.sqrt(np.sum(d * d))
    return float(kernel.phi(r))


def distance_matrix(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    sq = np.zeros((X.shape[0], Y.shape[0]))
    for k in range(X.shape[1]):
        d = X[:, k, None] - Y[None, :, k]
        sq += d * d
    return np.sqrt(sq)


def gram_matrix(kernel: KernelSpec, X, Y=None) -> np.ndarray:
    """Kernel matrix with entries ``K(X_i, Y_j)``; ``Y`` defaults to ``X``."""
    Xc = as_coords(X)
    Yc = Xc if Y is None else as_coords(Y)
    _check_dim(kernel, Xc, "X")
    _check_dim(kernel, Yc, "Y")
    out = np.empty((Xc.shape[0], Yc.shape[0]))
    for start in range(0, Xc.shape[0], _ROW_BLOCK):
        stop = min(start + _ROW_BLOCK, Xc.shape[0])
        out[start:stop] = kernel.phi(distance_matrix(Xc[start:stop], Yc))
    return out


def kernel_column(kernel: KernelSpec, X, y) -> np.ndarray:
    """``K(X_i, y)`` for all rows of ``X`` and a single point ``y``."""
    Xc = as_coords(X)
    y = np.asarray(y, dtype=float).reshape(1, -1)
    _check_dim(kernel, Xc, "X")
    _check_dim(kernel, y, "y")
    return kernel.phi(distance_matrix(Xc, y)[:, 0])


def diag(kernel: KernelSpec, X) -> np.ndarray:
    """``K(X_i, X_i)`` for every row of ``X``."""
    Xc = as_coords(X)
    _check_dim(kernel, Xc, "X")
    return kernel.phi(np.zeros(Xc.shape[0]))
