from collections.abc import Collection

import numpy as np
from scipy import linalg

from .exceptions import ShapeMismatchError

RANK_TOLERANCE = 1e-12


def as_matrix(a: np.ndarray) -> np.ndarray:
    """Validate a dense real matrix: two-dimensional with finite entries."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ShapeMismatchError(f"Expected a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ShapeMismatchError("Matrix contains non-finite entries")
    return a


def _as_rhs(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if b.ndim != 1 or b.shape[0] != a.shape[0]:
        raise ShapeMismatchError(
            f"Right-hand side of shape {b.shape} does not match "
            f"matrix of shape {a.shape}",
        )
    return b


def numerical_rank(r_diagonal: np.ndarray) -> int:
    magnitudes = np.abs(r_diagonal)
    if magnitudes.size == 0 or magnitudes.max() == 0:
        return 0
    threshold = RANK_TOLERANCE * magnitudes.max()
    return int(np.count_nonzero(magnitudes > threshold))


def lstsq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Minimum-norm least-squares solution of a @ x = b.

    Uses column-pivoted Householder QR. When the numerical rank is below
    the column count the trailing columns are eliminated by a second QR of
    the leading rows of R (complete orthogonal decomposition).
    """
    a = as_matrix(a)
    b = _as_rhs(a, b)
    n = a.shape[1]
    x = np.zeros(n)
    if a.size == 0:
        return x

    q, r, perm = linalg.qr(a, mode="economic", pivoting=True)
    rank = numerical_rank(np.diag(r))
    if rank == 0:
        return x
    qtb = q[:, :rank].T @ b
    if rank == n:
        y = linalg.solve_triangular(r[:n, :n], qtb)
    else:
        # (A P) = Q1 R1 = Q1 T^T Z^T with R1^T = Z T
        z, t = linalg.qr(r[:rank, :].T, mode="economic")
        w = linalg.solve_triangular(t, qtb, trans="T")
        y = z @ w
    x[perm] = y
    return x


def modified_lstsq(
        a: np.ndarray,
        b: np.ndarray,
        clamp_indices: Collection[int],
) -> np.ndarray:
    """
    Solve the unconstrained problem and overwrite negative entries with 0.

    Only entries listed in `clamp_indices` are touched.
    """
    x = lstsq(a, b)
    indices = np.fromiter(clamp_indices, dtype=int)
    if indices.size and (indices.min() < 0 or indices.max() >= x.size):
        raise ShapeMismatchError(
            f"Clamp indices {sorted(clamp_indices)} are outside "
            f"a solution of length {x.size}",
        )
    clamped = x[indices]
    x[indices] = np.where(clamped < 0, 0.0, clamped)
    return x


def residual(a: np.ndarray, x: np.ndarray, b: np.ndarray) -> float:
    a = as_matrix(a)
    b = _as_rhs(a, b)
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != a.shape[1]:
        raise ShapeMismatchError(
            f"Solution of shape {x.shape} does not match "
            f"matrix of shape {a.shape}",
        )
    return float(np.linalg.norm(a @ x - b))
