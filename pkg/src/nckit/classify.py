"""Decision rules and classifier constructions for last-layer activations.

Two plain decision rules (linear scores, nearest class center), the
total-scatter linear-discriminant closed form for the optimal least-squares
linear classifier, and a small max-margin solver for collapsed class means.
The estimator classes follow the scikit-learn fit/predict convention so they
compose with the wider ecosystem.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from ._validation import as_float_matrix, check_consistent_length, check_labels
from .io import ClassifierSnapshot, pack_from_arrays
from .moments import Moments, compute_moments, pseudo_inverse


class ConvergenceError(RuntimeError):
    """Raised when the max-margin solver exhausts its iteration budget."""


@dataclass(frozen=True)
class LinearRule:
    """argmax_c <w_c, h> + b_c with ties broken to the lowest class index."""

    weights: np.ndarray  # (C, p)
    biases: np.ndarray   # (C,)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.biases, dtype=np.float64)
        if w.ndim != 2 or b.shape != (w.shape[0],):
            raise ValueError("weights must be (C, p) and biases (C,)")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)

    def scores(self, H: np.ndarray) -> np.ndarray:
        H = np.asarray(H, dtype=np.float64)
        if H.shape[-1] != self.weights.shape[1]:
            raise ValueError(
                f"dimension mismatch: inputs have {H.shape[-1]} features, "
                f"rule expects {self.weights.shape[1]}"
            )
        return H @ self.weights.T + self.biases

    def predict(self, H: np.ndarray) -> np.ndarray:
        return np.argmax(self.scores(H), axis=-1)


@dataclass(frozen=True)
class CentroidRule:
    """argmin_c ||h - mu_c|| with ties broken to the lowest class index."""

    means: np.ndarray  # (C, p)

    def __post_init__(self):
        m = np.asarray(self.means, dtype=np.float64)
        if m.ndim != 2:
            raise ValueError("means must be (C, p)")
        object.__setattr__(self, "means", m)

    def predict(self, H: np.ndarray) -> np.ndarray:
        H = np.asarray(H, dtype=np.float64)
        if H.shape[-1] != self.means.shape[1]:
            raise ValueError(
                f"dimension mismatch: inputs have {H.shape[-1]} features, "
                f"rule expects {self.means.shape[1]}"
            )
        d2 = (
            np.sum(H * H, axis=-1, keepdims=True)
            - 2.0 * H @ self.means.T
            + np.sum(self.means * self.means, axis=1)
        )
        return np.argmin(d2, axis=-1)


def decide(rule, h) -> int:
    """Classify a single activation vector with either rule."""
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 1:
        raise ValueError(f"expected a single vector, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ValueError("activation contains a non-finite value")
    return int(rule.predict(h[None, :])[0])


def webb_lowe(m: Moments, rtol: float | None = None) -> ClassifierSnapshot:
    """Optimal least-squares linear classifier from moment statistics.

    Weights are ``centered_means.T @ pinv(total_cov) / C`` and biases
    ``1/C - W @ global_mean``; this is the total-scatter variant of linear
    discriminant analysis.
    """
    c = m.num_classes
    st_inv = pseudo_inverse(m.total_cov, rtol)
    weights = (m.centered_means.T @ st_inv) / c
    biases = np.full(c, 1.0 / c) - weights @ m.global_mean
    return ClassifierSnapshot(c, m.feature_dim, weights, biases)


class _MarginConstraints(NamedTuple):
    own: np.ndarray     # class index c whose score must win, per constraint
    rival: np.ndarray   # rival class index c'
    points: np.ndarray  # (K, p) activation each constraint is anchored at


def _pairwise_constraints(means: np.ndarray) -> _MarginConstraints:
    c = means.shape[1]
    own, rival = zip(*[(a, b) for a in range(c) for b in range(c) if b != a])
    own = np.asarray(own)
    return _MarginConstraints(own, np.asarray(rival), means.T[own])


def _activation_constraints(X: np.ndarray, y: np.ndarray, c: int) -> _MarginConstraints:
    own, rival, rows = [], [], []
    for i, label in enumerate(y):
        for other in range(c):
            if other != label:
                own.append(label)
                rival.append(other)
                rows.append(i)
    return _MarginConstraints(np.asarray(own), np.asarray(rival), X[np.asarray(rows)])


def max_margin_solve(
    means: np.ndarray,
    tol: float = 1e-6,
    *,
    activations: np.ndarray | None = None,
    labels: np.ndarray | None = None,
    max_iter: int = 2_000_000,
) -> np.ndarray:
    """Minimum-norm linear classifier separating class means with margin 1.

    Solves ``min 0.5 * sum_c ||w_c||^2`` subject to
    ``<w_c - w_c', x> >= 1`` for every ordered pair ``c != c'``, with ``x``
    the mean of class ``c`` (or, when ``activations``/``labels`` are given,
    every activation of class ``c``). The dual is maximized by projected
    gradient ascent; the result satisfies every constraint to at least
    ``1 - tol`` and complementary slackness to ``tol``.

    Parameters
    ----------
    means : ndarray of shape (p, C)
        Centered class means as columns (zero column sum).
    tol : float
        KKT residual bound used as the stopping criterion.
    activations, labels : optional
        Anchor the constraints on individual activations instead of means.
    max_iter : int
        Iteration cap; exhaustion raises :class:`ConvergenceError` with the
        residual diagnostics.

    Returns
    -------
    ndarray of shape (C, p)
        The optimal classifier weights.
    """
    m = as_float_matrix(means, "means")
    p, c = m.shape
    if c < 2:
        raise ValueError("need at least 2 classes")
    colsum = np.linalg.norm(m.sum(axis=1))
    if colsum > 1e-8 * max(np.linalg.norm(m), 1e-300):
        raise ValueError("means must have zero column sum (centered)")
    diffs = m[:, :, None] - m[:, None, :]
    dist = np.linalg.norm(diffs, axis=0)
    np.fill_diagonal(dist, np.inf)
    if np.min(dist) == 0.0:
        raise ValueError("infeasible: duplicate class means")

    if activations is not None:
        X = as_float_matrix(activations, "activations")
        y = check_labels(labels, "labels")
        check_consistent_length(X, y)
        if y.min() < 0 or y.max() >= c:
            raise ValueError("labels out of range")
        cons = _activation_constraints(X, y, c)
    else:
        cons = _pairwise_constraints(m)

    own, rival, pts = cons
    k = own.size
    # Gram of the constraint functionals <A_i, A_j> with A = (e_c - e_c') x^T
    e_gram = (
        (own[:, None] == own[None, :]).astype(float)
        - (own[:, None] == rival[None, :])
        - (rival[:, None] == own[None, :])
        + (rival[:, None] == rival[None, :])
    )
    gram = e_gram * (pts @ pts.T)
    lam = np.zeros(k)
    lipschitz = float(np.linalg.eigvalsh(gram)[-1])
    if lipschitz <= 0:
        raise ValueError("degenerate constraint set")
    step = 1.0 / lipschitz

    margins = gram @ lam
    check_every = 200
    for it in range(1, max_iter + 1):
        lam = np.maximum(0.0, lam + step * (1.0 - margins))
        margins = gram @ lam
        if it % check_every == 0:
            feas = float(np.max(1.0 - margins))
            slack = float(np.max(lam * np.abs(margins - 1.0)))
            if feas <= tol and slack <= tol:
                break
    else:
        feas = float(np.max(1.0 - margins))
        slack = float(np.max(lam * np.abs(margins - 1.0)))
        raise ConvergenceError(
            f"max-margin solver did not converge in {max_iter} iterations: "
            f"worst margin violation {feas:.3e}, complementarity {slack:.3e}"
        )

    weights = np.zeros((c, p))
    np.add.at(weights, own, lam[:, None] * pts)
    np.add.at(weights, rival, -lam[:, None] * pts)
    return weights


class NearestClassCenter(ClassifierMixin, BaseEstimator):
    """Classify to the class with the nearest training mean.

    Parameters
    ----------
    centroids : ndarray of shape (C, p), optional
        Pre-computed class means; when given the estimator is usable
        without fitting and predicts raw class indices ``0..C-1``.
    """

    def __init__(self, centroids=None):
        self.centroids = centroids

    def fit(self, X, y):
        X = as_float_matrix(X, "X")
        y = check_labels(y)
        check_consistent_length(X, y)
        self.classes_ = np.unique(y)
        self.centroids_ = np.stack([X[y == c].mean(axis=0) for c in self.classes_])
        return self

    def _rule(self) -> CentroidRule:
        if getattr(self, "centroids_", None) is not None:
            return CentroidRule(self.centroids_)
        if self.centroids is not None:
            return CentroidRule(np.asarray(self.centroids, dtype=np.float64))
        raise NotFittedError("NearestClassCenter: call fit or pass centroids")

    def predict(self, X):
        X = as_float_matrix(X, "X")
        idx = self._rule().predict(X)
        if getattr(self, "classes_", None) is not None:
            return self.classes_[idx]
        return idx


class WebbLoweLDA(ClassifierMixin, BaseEstimator):
    """Linear classifier fit by the total-scatter discriminant closed form.

    ``fit`` computes the moment statistics of a balanced training set and
    applies :func:`webb_lowe`; classes must be balanced.

    Parameters
    ----------
    rtol : float, optional
        Relative eigenvalue cutoff for the total-covariance pseudoinverse.

    Attributes
    ----------
    classes_ : ndarray of shape (C,)
        Sorted class labels.
    weights_ : ndarray of shape (C, p)
    biases_ : ndarray of shape (C,)
    moments_ : Moments
        The fitted moment statistics.
    """

    def __init__(self, rtol=None):
        self.rtol = rtol

    def fit(self, X, y):
        pack = pack_from_arrays(X, y)
        self.classes_ = np.unique(check_labels(y))
        self.moments_ = compute_moments(pack)
        snapshot = webb_lowe(self.moments_, self.rtol)
        self.weights_ = snapshot.weights
        self.biases_ = snapshot.biases
        return self

    def snapshot(self) -> ClassifierSnapshot:
        self._check_fitted()
        return ClassifierSnapshot(
            self.classes_.size, self.weights_.shape[1], self.weights_, self.biases_
        )

    def _check_fitted(self):
        if getattr(self, "weights_", None) is None:
            raise NotFittedError("WebbLoweLDA: call fit first")

    def decision_function(self, X):
        self._check_fitted()
        return LinearRule(self.weights_, self.biases_).scores(as_float_matrix(X, "X"))

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=-1)]
