"""
Small dense complex-Hermitian linear algebra kernels.

Every solver in the package goes through these helpers for factorizations,
linear solves, Schur complements and PSD tests, so tolerances are applied in
one place.
"""

from typing import Optional, Sequence, Union

import numpy as np
import scipy.linalg

from .errors import DimensionMismatchError, NotPositiveDefiniteError

# Relative pivot tolerance of the Cholesky factorization
PIVOT_TOLERANCE = 1e-12


class HermitianMatrix:
    """Immutable Hermitian matrix, symmetrized on construction as (a + a^H)/2"""

    __slots__ = ("_entries",)

    def __init__(self, entries):
        a = np.array(entries, dtype=complex)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise DimensionMismatchError(
                f"Hermitian matrix must be square with dim >= 1, got shape {a.shape}"
            )
        a = 0.5 * (a + a.conj().T)
        a.setflags(write=False)
        self._entries = a

    @classmethod
    def identity(cls, dim: int) -> "HermitianMatrix":
        return cls(np.eye(dim))

    @classmethod
    def zeros(cls, dim: int) -> "HermitianMatrix":
        return cls(np.zeros((dim, dim)))

    @classmethod
    def diagonal(cls, values: Sequence[float]) -> "HermitianMatrix":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @property
    def dim(self) -> int:
        return self._entries.shape[0]

    @property
    def entries(self) -> np.ndarray:
        """Read-only view of the entries"""
        return self._entries

    def to_array(self) -> np.ndarray:
        return self._entries.copy()

    def diag(self) -> np.ndarray:
        return self._entries.diagonal().real.copy()

    def trace(self) -> float:
        return float(self._entries.trace().real)

    def max_norm(self) -> float:
        return float(np.max(np.abs(self._entries)))

    def permuted(self, order: Sequence[int]) -> "HermitianMatrix":
        """Reindex rows and columns: result[i, j] = self[order[i], order[j]]"""
        idx = np.asarray(order, dtype=int)
        return HermitianMatrix(self._entries[np.ix_(idx, idx)])

    def is_diagonal(self) -> bool:
        off = self._entries - np.diag(self._entries.diagonal())
        return not np.any(off)

    def __array__(self, dtype=None, copy=None):
        return np.array(self._entries, dtype=dtype)

    def __repr__(self) -> str:
        return f"HermitianMatrix(dim={self.dim})"


MatrixLike = Union[HermitianMatrix, np.ndarray]


def _as_array(a: MatrixLike) -> np.ndarray:
    if isinstance(a, HermitianMatrix):
        return a.entries
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatchError(f"Expected a square matrix, got shape {arr.shape}")
    return arr


def cholesky(a: MatrixLike) -> np.ndarray:
    """
    Lower-triangular factor L with L L^H = a.

    Raises NotPositiveDefiniteError if any pivot is at or below
    1e-12 times the largest diagonal entry.
    """
    arr = _as_array(a)
    scale = float(np.max(arr.diagonal().real))
    if scale <= 0.0:
        raise NotPositiveDefiniteError("Matrix has no positive diagonal entry")
    try:
        lower = scipy.linalg.cholesky(arr, lower=True)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefiniteError(f"Cholesky factorization failed: {e}") from e
    pivots = lower.diagonal().real ** 2
    if np.any(pivots <= PIVOT_TOLERANCE * scale):
        raise NotPositiveDefiniteError(
            f"Pivot {pivots.min():.3e} below tolerance {PIVOT_TOLERANCE * scale:.3e}"
        )
    return lower


def solve_hermitian(a: MatrixLike, b) -> np.ndarray:
    """Solve a x = b for positive-definite a (b may be a vector or a matrix)"""
    lower = cholesky(a)
    rhs = np.asarray(b, dtype=complex)
    if rhs.shape[0] != lower.shape[0]:
        raise DimensionMismatchError(
            f"Right-hand side has {rhs.shape[0]} rows, matrix has {lower.shape[0]}"
        )
    y = scipy.linalg.solve_triangular(lower, rhs, lower=True)
    return scipy.linalg.solve_triangular(lower.conj().T, y, lower=False)


def conditional_variance(a: MatrixLike, index: int, given: Sequence[int]) -> float:
    """
    Schur complement a[i,i] - a[i,G] a[G,G]^{-1} a[G,i] for 0-based index i
    and conditioning index set G.
    """
    arr = _as_array(a)
    given = [int(g) for g in given]
    if index in given:
        raise DimensionMismatchError(f"Index {index} cannot condition on itself")
    value = arr[index, index].real
    if not given:
        return float(value)
    lower = cholesky(arr[np.ix_(given, given)])
    y = scipy.linalg.solve_triangular(lower, arr[given, index], lower=True)
    return float(value - np.vdot(y, y).real)


def schur_complement(a: MatrixLike, m: int) -> float:
    """Schur complement of the leading (m-1)-block at row/column m (1-based)"""
    arr = _as_array(a)
    if not 1 <= m <= arr.shape[0]:
        raise DimensionMismatchError(f"Index {m} outside 1..{arr.shape[0]}")
    return conditional_variance(arr, m - 1, range(m - 1))


def log_det(a: MatrixLike) -> float:
    """Natural log-determinant of a positive-definite matrix"""
    lower = cholesky(a)
    return float(2.0 * np.sum(np.log(lower.diagonal().real)))


def min_eigen_psd_check(a: MatrixLike, tol: Optional[float] = None) -> bool:
    """
    True iff the smallest eigenvalue of a is >= -tol.

    The default tolerance is 1e-10 * trace(a) / dim.
    """
    arr = _as_array(a)
    if tol is None:
        tol = 1e-10 * abs(arr.trace().real) / arr.shape[0]
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return bool(scipy.linalg.eigvalsh(arr)[0] >= -tol)
