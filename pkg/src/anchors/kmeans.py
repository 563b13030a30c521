"""
Lloyd's k-means with k-means++ seeding.

Seeding comes from scikit-learn; the Lloyd loop is local so the inertia of
every iteration can be reported and empty clusters are handled the same
way on every platform (re-seeded with the point farthest from its center).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.spatial.distance import cdist
from sklearn.cluster import kmeans_plusplus

from src.data.dataset import Dataset
from src.exceptions import ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KMeansResult:
    centers: np.ndarray  # d x m
    labels: np.ndarray  # n cluster assignments
    inertia_history: tuple[float, ...]
    n_iter: int

    @property
    def inertia(self) -> float:
        return self.inertia_history[-1]


def _assign(points: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    sq = cdist(points, centers, "sqeuclidean")
    labels = np.argmin(sq, axis=1)
    return labels, sq[np.arange(points.shape[0]), labels]


def _reseed_empty(points: np.ndarray, centers: np.ndarray, labels: np.ndarray, sq_dist: np.ndarray) -> None:
    """Move the farthest point (from its own center) into each empty cluster, in place."""
    m = centers.shape[0]
    counts = np.bincount(labels, minlength=m)
    taken = np.zeros(points.shape[0], dtype=bool)
    for j in np.flatnonzero(counts == 0):
        # never empty another cluster by stealing its only member
        candidates = np.where(taken | (counts[labels] <= 1), -np.inf, sq_dist)
        far = int(np.argmax(candidates))
        logger.debug(f"k-means: cluster {j} empty, re-seeding with sample {far}")
        counts[labels[far]] -= 1
        counts[j] += 1
        labels[far] = j
        sq_dist[far] = 0.0
        centers[j] = points[far]
        taken[far] = True


def kmeans(ds: Dataset, m: int, seed: int = 0, max_iter: int = 100) -> KMeansResult:
    """
    Cluster the samples of ``ds`` into m groups (labels are ignored).

    Args:
        ds: dataset
        m: number of clusters, 1 <= m <= n
        seed: seeding RNG seed; identical seeds give identical results
        max_iter: Lloyd iteration cap

    Returns:
        KMeansResult with d x m centers and a non-increasing inertia history

    Raises:
        ValidationError: m > n or m < 1
    """
    points = np.ascontiguousarray(ds.samples)
    n = points.shape[0]
    if m < 1 or m > n:
        raise ValidationError(f"cannot form {m} clusters from {n} samples")

    centers, _ = kmeans_plusplus(points, n_clusters=m, random_state=seed)
    centers = np.array(centers, dtype=np.float64)
    labels, sq_dist = _assign(points, centers)
    history = [float(sq_dist.sum())]

    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        _reseed_empty(points, centers, labels, sq_dist)
        counts = np.bincount(labels, minlength=m)
        membership = sparse.csr_matrix((np.ones(n), (labels, np.arange(n))), shape=(m, n))
        centers = (membership @ points) / counts[:, None]

        new_labels, sq_dist = _assign(points, centers)
        history.append(float(sq_dist.sum()))
        if np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels

    logger.debug(f"k-means: m={m}, iterations={n_iter}, inertia={history[-1]:.6g}")
    return KMeansResult(centers=centers.T.copy(), labels=labels, inertia_history=tuple(history), n_iter=n_iter)
