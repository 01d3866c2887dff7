"""Small dense linear-algebra helpers shared by the Gaussian code paths."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    pass


def invert_lower_triangular(c: np.ndarray) -> np.ndarray:
    """Inverse of a lower-triangular matrix by forward substitution.

    Row ``i`` of the inverse only depends on rows ``< i``, so each row is a
    single vectorised update; total cost is O(N^3) flops in general and
    proportional to the number of non-zeros for sparse factors.
    """
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    if c.shape != (n, n):
        raise ValueError("expected a square matrix")
    diag = np.diag(c)
    if np.any(diag == 0):
        raise ZeroDivisionError(f"zero diagonal entry at index {int(np.flatnonzero(diag == 0)[0])}")
    inv = np.zeros_like(c)
    for i in range(n):
        row = -(c[i, :i] @ inv[:i, :])
        row[i] = 1.0
        inv[i] = row / diag[i]
    return inv


def cholesky(cov: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(np.asarray(cov, dtype=float))
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError("covariance matrix is not positive definite") from None


def logdet_pd(cov: np.ndarray) -> float:
    """log det of a positive-definite matrix through its Cholesky factor."""
    return 2.0 * float(np.sum(np.log(np.diag(cholesky(cov)))))


@dataclass(frozen=True, eq=False)
class SpectralFactor:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @classmethod
    def of(cls, cov: np.ndarray) -> "SpectralFactor":
        vals, vecs = np.linalg.eigh(np.asarray(cov, dtype=float))
        if vals[0] <= 0:
            raise NotPositiveDefiniteError("covariance matrix is not positive definite")
        return cls(vals[::-1].copy(), vecs[:, ::-1].copy())

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.T

    def inverse(self) -> np.ndarray:
        u = self.eigenvectors
        return (u / self.eigenvalues) @ u.T

    def logdet(self) -> float:
        return float(np.sum(np.log(self.eigenvalues)))
