"""First- and second-moment statistics of a labelled activation set.

All covariances are population covariances (divide by the count, no Bessel
correction): the global/class means and the three scatter matrices are plain
averages over a balanced index set, so the decomposition
``total = between + within`` holds exactly in exact arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .io import ActivationPack


@dataclass(frozen=True)
class Moments:
    """Moment statistics of a balanced activation pack.

    Attributes
    ----------
    global_mean : ndarray of shape (p,)
        Average of all activations.
    class_means : ndarray of shape (C, p)
        Per-class averages.
    total_cov, between_cov, within_cov : ndarray of shape (p, p)
        Population covariance of globally centered activations, of centered
        class means, and of activations centered at their class means.
    """

    global_mean: np.ndarray
    class_means: np.ndarray
    total_cov: np.ndarray
    between_cov: np.ndarray
    within_cov: np.ndarray

    @property
    def num_classes(self) -> int:
        return self.class_means.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.class_means.shape[1]

    @property
    def centered_means(self) -> np.ndarray:
        """Globally centered class means stacked as columns, shape ``(p, C)``."""
        return (self.class_means - self.global_mean).T


def _sym(a: np.ndarray) -> np.ndarray:
    return (a + a.T) / 2.0


def compute_moments(pack: ActivationPack) -> Moments:
    """Compute means and the total/between/within covariance decomposition."""
    p, c, n = pack.feature_dim, pack.num_classes, pack.per_class_count
    grouped = pack.data.reshape(c, n, p)
    class_means = grouped.mean(axis=1)
    global_mean = pack.data.mean(axis=0)

    centered_all = pack.data - global_mean
    total_cov = _sym(centered_all.T @ centered_all / (c * n))

    centered_means = class_means - global_mean
    between_cov = _sym(centered_means.T @ centered_means / c)

    within_rows = (grouped - class_means[:, None, :]).reshape(c * n, p)
    within_cov = _sym(within_rows.T @ within_rows / (c * n))

    return Moments(global_mean, class_means, total_cov, between_cov, within_cov)


def pseudo_inverse(a: np.ndarray, rtol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a symmetric PSD matrix.

    Eigendecomposition based: eigenvalues at or below ``rtol * lambda_max``
    map to 0, the rest to their reciprocal. The default ``rtol`` is
    ``1e-12 * p``, small enough to keep genuinely positive spectra intact and
    large enough to zero the known null directions of rank-deficient scatter
    matrices.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = np.linalg.norm(a)
    if np.linalg.norm(a - a.T) > 1e-10 * max(scale, 1e-300):
        raise ValueError("matrix is not symmetric")
    p = a.shape[0]
    if rtol is None:
        rtol = 1e-12 * p
    if rtol <= 0:
        raise ValueError("rtol must be positive")
    eigvals, eigvecs = np.linalg.eigh(_sym(a))
    cutoff = rtol * max(float(eigvals[-1]), 0.0)
    keep = eigvals > cutoff
    inv = np.zeros_like(eigvals)
    inv[keep] = 1.0 / eigvals[keep]
    return _sym((eigvecs * inv) @ eigvecs.T)
