"""Simplex equiangular tight frames: construction, deviation measures, and
the maximin-distance geometry used by the codebook-optimality checks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.spatial.distance import pdist


def standard_etf(num_classes: int) -> np.ndarray:
    """The standard simplex ETF: ``sqrt(C/(C-1)) * (I - ones/C)``.

    Columns are unit-norm, sum to zero, and every pair of distinct columns
    has cosine ``-1/(C-1)``.
    """
    c = int(num_classes)
    if c < 2:
        raise ValueError("num_classes must be >= 2")
    return np.sqrt(c / (c - 1.0)) * (np.eye(c) - np.ones((c, c)) / c)


@dataclass(frozen=True)
class SimplexEtf:
    """A simplex ETF with ``C`` vertices posed in ``p``-dimensional space.

    ``pose`` is a ``(p, C)`` matrix with orthonormal columns; the realized
    vertex matrix is ``scale * pose @ standard_etf(C)``.
    """

    num_classes: int
    ambient_dim: int
    scale: float
    pose: np.ndarray

    def __post_init__(self):
        c, p = self.num_classes, self.ambient_dim
        if c < 2:
            raise ValueError("num_classes must be >= 2")
        if p < c:
            raise ValueError(f"ambient_dim must be >= num_classes ({p} < {c})")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        u = np.ascontiguousarray(self.pose, dtype=np.float64)
        if u.shape != (p, c):
            raise ValueError(f"pose must have shape ({p}, {c}), got {u.shape}")
        gram = u.T @ u
        if np.max(np.abs(gram - np.eye(c))) > 1e-10:
            raise ValueError("pose columns are not orthonormal")
        object.__setattr__(self, "pose", u)


def realize(etf: SimplexEtf) -> np.ndarray:
    """The ``(p, C)`` vertex matrix ``scale * pose @ standard_etf(C)``."""
    return etf.scale * (etf.pose @ standard_etf(etf.num_classes))


def random_pose(ambient_dim: int, num_classes: int, rng: np.random.Generator) -> np.ndarray:
    """A Haar-ish random ``(p, C)`` matrix with orthonormal columns."""
    if ambient_dim < num_classes:
        raise ValueError("ambient_dim must be >= num_classes")
    gauss = rng.standard_normal((ambient_dim, num_classes))
    q, r = np.linalg.qr(gauss)
    # fix the sign convention so the pose is a deterministic function of gauss
    return q * np.sign(np.diag(r))


class EtfDeviation(NamedTuple):
    """How far a set of vectors is from a simplex ETF (all zero at an ETF)."""

    norm_cv: float        # Std_c ||m_c|| / Avg_c ||m_c||
    cosine_std: float     # Std of pairwise cosines over distinct pairs
    max_angle_dev: float  # Avg |cos(m_c, m_c') + 1/(C-1)| over distinct pairs


def etf_deviation(matrix: np.ndarray) -> EtfDeviation:
    """Equinormality / equiangularity / maximal-angle deviations of columns.

    Pair statistics run over distinct unordered pairs ``c < c'``. Population
    standard deviations throughout.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] < 2:
        raise ValueError(f"expected a (p, C) matrix with C >= 2, got shape {m.shape}")
    norms = np.linalg.norm(m, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("degenerate column (zero norm)")
    unit = m / norms
    c = m.shape[1]
    iu, ju = np.triu_indices(c, k=1)
    cosines = (unit.T @ unit)[iu, ju]
    return EtfDeviation(
        norm_cv=float(np.std(norms) / np.mean(norms)),
        cosine_std=float(np.std(cosines)),
        max_angle_dev=float(np.mean(np.abs(cosines + 1.0 / (c - 1)))),
    )


def maximin_distance(matrix: np.ndarray) -> float:
    """Minimum pairwise Euclidean distance between columns."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] < 2:
        raise ValueError(f"expected a (p, C) matrix with C >= 2, got shape {m.shape}")
    return float(np.min(pdist(m.T)))


def circumcenter(matrix: np.ndarray) -> tuple[np.ndarray, float]:
    """Center and radius of the sphere through all columns within their
    affine hull. Requires affinely independent columns."""
    m = np.asarray(matrix, dtype=np.float64)
    p, c = m.shape
    lifted = np.vstack([m, np.ones((1, c))])
    if np.linalg.matrix_rank(lifted) < c:
        raise ValueError("no unique circumsphere: columns are affinely dependent")
    # p0 = mu_1 + A t with A = [mu_c - mu_1]; equidistance gives a linear system
    a = m[:, 1:] - m[:, :1]
    g = np.sum(a * a, axis=0)
    t = np.linalg.solve(2.0 * (a.T @ a), g)
    offset = a @ t
    center = m[:, 0] + offset
    radius = float(np.linalg.norm(offset))
    dists = np.linalg.norm(m - center[:, None], axis=0)
    if np.max(np.abs(dists - radius)) > 1e-8 * max(radius, 1.0):
        raise ValueError("circumcenter solve failed equidistance check")
    return center, radius


def mes_rescale(matrix: np.ndarray) -> np.ndarray:
    """Push affinely independent columns of norm <= 1 out to the unit sphere.

    Maps every column through ``mu -> (mu - p0) / r`` where ``(p0, r)`` is
    the circumsphere of the columns. When ``r <= 1`` (the configurations
    where the circumsphere is the minimal enclosing sphere with all columns
    on its surface) every pairwise distance grows by the factor ``1/r >= 1``.
    Inputs whose circumsphere pokes outside the unit ball are rejected
    rather than silently shrinking distances.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] < 2:
        raise ValueError(f"expected a (p, C) matrix with C >= 2, got shape {m.shape}")
    norms = np.linalg.norm(m, axis=0)
    if np.any(norms > 1.0 + 1e-10):
        raise ValueError("columns must have norm <= 1")
    center, radius = circumcenter(m)
    if radius > 1.0 + 1e-10:
        raise ValueError(
            f"circumsphere radius {radius:.6g} exceeds the unit ball; the "
            "all-columns-on-surface premise fails for this configuration"
        )
    return (m - center[:, None]) / radius


class DeltaSearchResult(NamedTuple):
    best_delta: float
    best_matrix: np.ndarray


def _min_distance_to_others(col: np.ndarray, m: np.ndarray, skip: int) -> float:
    d = np.linalg.norm(m - col[:, None], axis=0)
    d[skip] = np.inf
    return float(np.min(d))


def delta_optimality_search(
    num_classes: int,
    budget: int,
    seed: int,
    *,
    step_init: float = 0.1,
    sweeps: int = 40,
) -> DeltaSearchResult:
    """Randomized maximization of the minimum pairwise column distance over
    ``C x C`` matrices with columns in the unit ball.

    Each restart starts from random unit-norm columns and runs coordinate
    ascent (one coordinate of one column at a time, re-projecting onto the
    unit ball, halving the step after sweeps with no improvement). Restart
    ``i`` is seeded with ``seed + i``, so results are reproducible and the
    best restart wins with lowest-index tie-break.
    """
    c = int(num_classes)
    if c < 2:
        raise ValueError("num_classes must be >= 2")
    if budget < 1:
        raise ValueError("budget must be >= 1")

    best_delta = -np.inf
    best_m = None
    for restart in range(budget):
        rng = np.random.default_rng(seed + restart)
        m = rng.standard_normal((c, c))
        m /= np.linalg.norm(m, axis=0)
        dist = np.linalg.norm(m[:, :, None] - m[:, None, :], axis=0)
        np.fill_diagonal(dist, np.inf)
        delta = float(np.min(dist))
        step = step_init
        for _ in range(sweeps):
            improved = False
            for col in range(c):
                for coord in range(c):
                    for sign in (1.0, -1.0):
                        cand = m[:, col].copy()
                        cand[coord] += sign * step
                        norm = np.linalg.norm(cand)
                        if norm > 1.0:
                            cand /= norm
                        # min distance if this column moved
                        masked = dist.copy()
                        masked[col, :] = np.inf
                        masked[:, col] = np.inf
                        cand_delta = min(
                            _min_distance_to_others(cand, m, col),
                            float(np.min(masked)) if c > 2 else np.inf,
                        )
                        if cand_delta > delta:
                            m[:, col] = cand
                            new_d = np.linalg.norm(m - cand[:, None], axis=0)
                            new_d[col] = np.inf
                            dist[col, :] = new_d
                            dist[:, col] = new_d
                            delta = cand_delta
                            improved = True
            if not improved:
                step *= 0.5
        if delta > best_delta:
            best_delta = delta
            best_m = m.copy()
    return DeltaSearchResult(best_delta, best_m)
