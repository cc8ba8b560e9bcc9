"""Incremental Newton basis over a fixed candidate set.

The state tracks, for a target function ``v`` in the native space whose
values on the candidates are known, the nested interpolants
``Pi_n v = sum_k c_k v_k`` where ``v_1, ..., v_n`` is the Newton basis of the
selected points.  Each call to :meth:`GreedyState.add_point` performs one
Gram-Schmidt step:

* ``v_n = (K(., x_n) - sum_k v_k(x_n) v_k) / P_{n-1}(x_n)``
* ``P_n(x)^2 = P_{n-1}(x)^2 - v_n(x)^2``
* ``c_n = (v - Pi_{n-1} v)(x_n) / P_{n-1}(x_n)``
* ``(v - Pi_n v) = (v - Pi_{n-1} v) - c_n v_n``

and the squared native-space error drops by exactly ``c_n^2``.

The change-of-basis matrix is kept as a lower-triangular ``C`` whose row
``k`` holds the coefficients of ``v_k`` in the translates ``K(., x_j)``,
``j <= k``; the interpolation weights are then ``C^T c``.  ``C`` is the
inverse Cholesky factor of the kernel matrix ``A`` on the selected points,
so any float64 representation of it is A-orthonormal only to about
``eps * cond(A)``.  With ``coeff_precision="extended"`` (the default) ``C``
is instead accumulated in ``np.longdouble`` straight from the entries of
``A``, with one reorthogonalization pass per row:

* ``r = e_n - (C_{n-1} A[:n, n])^T C_{n-1}``
* ``r -= (C_{n-1} A r)^T C_{n-1}``
* row n of ``C``: ``r / sqrt(r^T A r)``

This costs ``O(n^2)`` software-float operations per step; the ``"double"``
mode uses the float64 recursion ``(e_n - sum_k v_k(x_n) C[k, :]) / P``.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import InvalidInputError, NumericalBreakdownError, SelectionError
from .kernels import KernelSpec, PointSet, as_coords, diag, gram_matrix, kernel_column

#: relative breakdown threshold on the squared power function
BREAKDOWN_REL = 1e-13
#: default cap on the size of the N x n Newton buffer
DEFAULT_MAX_ENTRIES = 10**7
#: dtype of the change-of-basis matrix in each precision mode
COEFF_DTYPES = {"extended": np.longdouble, "double": np.float64}


class GreedyState:
    """Newton-basis factorization of a target over ``candidates``.

    Create with :meth:`init`; grow with :meth:`add_point`.  The state is
    mutated in place and ``add_point`` returns it for chaining.
    """

    def __init__(self, kernel, candidates, target_values, target_hnorm_sq, max_entries=DEFAULT_MAX_ENTRIES,
                 coeff_precision="extended"):
        if coeff_precision not in COEFF_DTYPES:
            raise InvalidInputError(f"coeff_precision must be 'extended' or 'double', got {coeff_precision!r}")
        self.coeff_precision = coeff_precision
        self._dtype = COEFF_DTYPES[coeff_precision]
        self.kernel = kernel
        self.candidates = candidates
        N = len(candidates)
        self._cap = min(N, 16)
        self._V = np.zeros((N, self._cap))
        self._C = np.zeros((self._cap, self._cap), dtype=self._dtype)
        # kernel matrix on the selected points, extended mode only
        self._A = np.zeros((self._cap, self._cap), dtype=self._dtype)
        self._c = np.zeros(self._cap)
        self.selected: list[int] = []
        self.kdiag = diag(kernel, candidates)
        self.power_sq = self.kdiag.copy()
        self.residual = np.array(target_values, dtype=float)
        self.target_hnorm_sq = float(target_hnorm_sq)
        self._wce_sq = float(target_hnorm_sq)
        self._mask = np.zeros(N, dtype=bool)
        self.tau_p = BREAKDOWN_REL * float(np.max(self.kdiag))
        self.max_entries = int(max_entries)

    @classmethod
    def init(cls, kernel: KernelSpec, candidates: PointSet, target_values, target_hnorm_sq: float, **kwargs):
        if len(candidates) == 0:
            raise InvalidInputError("candidate set is empty")
        if candidates.dim != kernel.dim:
            raise InvalidInputError(f"candidates have dimension {candidates.dim}, kernel expects {kernel.dim}")
        target_values = np.asarray(target_values, dtype=float).reshape(-1)
        if target_values.shape[0] != len(candidates):
            raise InvalidInputError(
                f"target_values has length {target_values.shape[0]}, expected {len(candidates)}"
            )
        if not target_hnorm_sq >= 0:
            raise InvalidInputError(f"target_hnorm_sq must be nonnegative, got {target_hnorm_sq}")
        return cls(kernel, candidates, target_values, target_hnorm_sq, **kwargs)

    # -- views -------------------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.selected)

    @property
    def newton_values(self) -> np.ndarray:
        """N x n matrix; column k holds ``v_k`` on every candidate."""
        return self._V[:, : self.n]

    @property
    def newton_coeffs(self) -> np.ndarray:
        """Lower-triangular n x n change-of-basis matrix ``C`` (dtype per ``coeff_precision``)."""
        return self._C[: self.n, : self.n]

    @property
    def coeffs(self) -> np.ndarray:
        """``c_k = <v, v_k>``, the Newton coefficients of the interpolant."""
        return self._c[: self.n]

    @property
    def selected_mask(self) -> np.ndarray:
        return self._mask.copy()

    def eligible(self) -> np.ndarray:
        """Candidates that may still be selected without breakdown."""
        return (~self._mask) & (self.power_sq > self.tau_p)

    def interpolant_values(self) -> np.ndarray:
        return self.newton_values @ self.coeffs

    # -- updates -----------------------------------------------------------
    def _grow(self):
        new_cap = min(len(self.candidates), 2 * self._cap)
        if len(self.candidates) * new_cap > self.max_entries:
            new_cap = self.max_entries // len(self.candidates)
            if new_cap <= self._cap:
                raise InvalidInputError(
                    f"Newton buffer would exceed {self.max_entries} entries; raise max_entries"
                )
        V = np.zeros((self._V.shape[0], new_cap))
        V[:, : self._cap] = self._V
        C = np.zeros((new_cap, new_cap), dtype=self._dtype)
        C[: self._cap, : self._cap] = self._C
        A = np.zeros((new_cap, new_cap), dtype=self._dtype)
        A[: self._cap, : self._cap] = self._A
        c = np.zeros(new_cap)
        c[: self._cap] = self._c
        self._V, self._C, self._A, self._c, self._cap = V, C, A, c, new_cap

    def add_point(self, idx: int) -> "GreedyState":
        idx = int(idx)
        if not 0 <= idx < len(self.candidates):
            raise InvalidInputError(f"candidate index {idx} out of range")
        if self._mask[idx]:
            raise SelectionError(f"candidate {idx} is already selected")
        p_sq = self.power_sq[idx]
        if not p_sq > self.tau_p:
            raise NumericalBreakdownError(
                f"power function at candidate {idx} is {p_sq:.3e}, below threshold {self.tau_p:.3e}"
            )
        n = self.n
        if n == self._cap:
            self._grow()
        p = np.sqrt(p_sq)
        X = self.candidates.coords
        Vn = self._V[:, :n]
        row = Vn[idx].copy()

        col = kernel_column(self.kernel, X, X[idx])
        if self.coeff_precision == "extended":
            self._C[n, : n + 1] = self._extended_row(n, col, idx, p)
        else:
            crow = np.zeros(n + 1)
            crow[n] = 1.0
            if n:
                crow[:n] -= row @ self._C[:n, :n]
            self._C[n, : n + 1] = crow / p
        if n:
            col -= Vn @ row
        col /= p
        self._V[:, n] = col

        c_n = self.residual[idx] / p
        self._c[n] = c_n
        self.residual -= c_n * col
        self.power_sq -= col * col
        np.maximum(self.power_sq, 0.0, out=self.power_sq)
        self.power_sq[idx] = 0.0
        self._wce_sq = max(0.0, self._wce_sq - c_n * c_n)

        self._mask[idx] = True
        self.selected.append(idx)
        return self

    def _extended_row(self, n, col, idx, p):
        ld = self._dtype
        a = col[self.selected].astype(ld)
        self._A[:n, n] = a
        self._A[n, :n] = a
        self._A[n, n] = self.kdiag[idx]
        A = self._A[: n + 1, : n + 1]
        C_prev = self._C[:n, :n]
        r = np.zeros(n + 1, dtype=ld)
        r[n] = 1.0
        if n:
            r[:n] = -((C_prev @ a) @ C_prev)
            # reorthogonalize against the previous rows in the A inner product
            r[:n] -= (C_prev @ (A @ r)[:n]) @ C_prev
        nrm_sq = r @ (A @ r)
        return r / (np.sqrt(nrm_sq) if nrm_sq > 0 else ld(p))

    # -- queries -----------------------------------------------------------
    def newton_to_standard(self) -> np.ndarray:
        """Weights ``w`` with ``Pi_n v = sum_i w_i K(., x_i)``."""
        if self.n == 0:
            raise InvalidInputError("no points selected")
        return (self.newton_coeffs.T @ self.coeffs.astype(self._dtype)).astype(float)

    def wce_squared(self) -> float:
        """``||v - Pi_n v||^2``, updated by energy splitting."""
        return self._wce_sq

    def power_at(self, query) -> np.ndarray:
        """Power function ``P_n`` at arbitrary points."""
        Q = as_coords(query)
        if Q.shape[1] != self.kernel.dim:
            raise InvalidInputError(f"query has dimension {Q.shape[1]}, kernel expects {self.kernel.dim}")
        kd = diag(self.kernel, Q)
        if self.n == 0:
            return np.sqrt(kd)
        Xs = self.candidates.coords[self.selected]
        Vq = gram_matrix(self.kernel, Q, Xs) @ self.newton_coeffs.T.astype(float)
        return np.sqrt(np.maximum(kd - np.sum(Vq * Vq, axis=1), 0.0))

    def validate(self) -> dict:
        """Compare the recursive basis against a dense Cholesky factorization.

        Returns the max-norm deviation of ``C A C^T`` from the identity and the
        relative drift of ``C`` from the inverse Cholesky factor of ``A``.
        """
        if self.n == 0:
            return {"orthonormality": 0.0, "coeff_drift": 0.0}
        A = gram_matrix(self.kernel, self.candidates.coords[self.selected])
        C = self.newton_coeffs
        # extended precision so the measurement itself adds no round-off
        Cl = C.astype(np.longdouble)
        G = Cl @ A.astype(np.longdouble) @ Cl.T
        ortho = float(np.max(np.abs(G - np.eye(self.n, dtype=np.longdouble))))
        L = scipy.linalg.cholesky(A, lower=True)
        C_ref = scipy.linalg.solve_triangular(L, np.eye(self.n), lower=True)
        drift = float(np.max(np.abs(C - C_ref)) / np.max(np.abs(C_ref)))
        return {"orthonormality": ortho, "coeff_drift": drift}


def init_state(kernel, candidates, target_values, target_hnorm_sq, **kwargs) -> GreedyState:
    return GreedyState.init(kernel, candidates, target_values, target_hnorm_sq, **kwargs)


def add_point(state: GreedyState, idx: int) -> GreedyState:
    return state.add_point(idx)


def newton_to_standard(state: GreedyState) -> np.ndarray:
    return state.newton_to_standard()


def wce_squared(state: GreedyState) -> float:
    return state.wce_squared()


def power_at(state: GreedyState, query) -> np.ndarray:
    return state.power_at(query)
