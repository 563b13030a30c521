"""
Anchor selection and anchor-sample graph (ASG) construction.

Anchors are real training samples: for every k-means center the nearest
unused sample is taken. Each sample is then connected to its k nearest
anchors with Gaussian-kernel coefficients normalized to sum to 1.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.spatial.distance import cdist
from scipy.special import softmax

from src.data.dataset import Dataset
from src.exceptions import ValidationError

logger = logging.getLogger(__name__)

SIGMA_FLOOR = 1e-4
SIGMA_RULES = ("as-printed", "unrooted")


@dataclass(frozen=True, eq=False)
class AnchorSet:
    vectors: np.ndarray  # d x m, each column a training sample
    source_indices: np.ndarray  # m indices into the training set

    @property
    def m(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True, eq=False)
class AnchorSampleGraph:
    """
    Row-sparse n x m coefficient matrix M with exactly k entries per row.

    Row i holds the anchors ``neighbor_indices[i]`` and their coefficients
    gamma_z(x_i) (nonnegative, summing to 1).
    """

    neighbor_indices: np.ndarray  # n x k anchor indices
    coefficients: np.ndarray  # n x k
    anchors: AnchorSet

    @property
    def n(self) -> int:
        return self.neighbor_indices.shape[0]

    @property
    def k(self) -> int:
        return self.neighbor_indices.shape[1]

    @property
    def m(self) -> int:
        return self.anchors.m

    def to_csr(self) -> sparse.csr_matrix:
        """M as a CSR matrix; stored entries stay explicit even when a coefficient underflows to 0."""
        n, k = self.neighbor_indices.shape
        indptr = np.arange(0, n * k + 1, k)
        return sparse.csr_matrix(
            (self.coefficients.ravel(), self.neighbor_indices.ravel(), indptr), shape=(n, self.m)
        )

    def interpolate(self, rows: np.ndarray, anchor_values: np.ndarray) -> np.ndarray:
        """sum_j gamma_{z_j}(x_i) * anchor_values[..., j] for each row i in ``rows``."""
        neighbors = self.neighbor_indices[rows]
        return np.sum(self.coefficients[rows] * anchor_values[..., neighbors], axis=-1)


def select_anchors(ds: Dataset, centers: np.ndarray) -> AnchorSet:
    """
    Replace each center by its nearest training sample.

    Ties go to the lowest sample index. When a sample already serves an
    earlier center, the next-nearest unused sample is taken instead.

    Args:
        ds: dataset
        centers: d x m matrix

    Returns:
        AnchorSet with m distinct source samples
    """
    centers = np.asarray(centers, dtype=np.float64)
    if not np.all(np.isfinite(centers)):
        raise ValidationError("anchor centers contain non-finite values")
    m = centers.shape[1]
    if m > ds.n:
        raise ValidationError(f"cannot pick {m} distinct anchors from {ds.n} samples")

    sq = cdist(centers.T, ds.samples, "sqeuclidean")
    used = np.zeros(ds.n, dtype=bool)
    chosen = np.empty(m, dtype=np.intp)
    for j in range(m):
        order = np.argsort(sq[j], kind="stable")
        pick = order[np.argmax(~used[order])]
        if pick != order[0]:
            logger.debug(f"Anchor {j}: sample {order[0]} already used, taking {pick}")
        chosen[j] = pick
        used[pick] = True

    return AnchorSet(vectors=np.asfortranarray(ds.features[:, chosen]), source_indices=chosen)


def kernel_width(distances: np.ndarray, rule: str = "as-printed") -> np.ndarray:
    """
    Per-sample Gaussian width from the distances to its k nearest anchors.

    as-printed: sigma = max(eps, min_j sqrt(||x_i - z_j||))
    unrooted:   sigma = max(eps, min_j ||x_i - z_j||)
    """
    nearest = distances.min(axis=1)
    if rule == "as-printed":
        nearest = np.sqrt(nearest)
    elif rule != "unrooted":
        raise ValidationError(f"unknown sigma rule {rule!r}, expected one of {SIGMA_RULES}")
    return np.maximum(SIGMA_FLOOR, nearest)


def build_asg(ds: Dataset, anchors: AnchorSet, k: int, sigma_rule: str = "as-printed") -> AnchorSampleGraph:
    """
    Connect every sample to its k nearest anchors.

    gamma_z(x_i) = exp(-||x_i - z||^2 / sigma_i^2), normalized per row. The
    normalization runs in the log domain so rows never collapse to 0/0.

    Args:
        ds: dataset
        anchors: anchor set built from ``ds``
        k: neighbors per sample, 1 <= k <= m
        sigma_rule: "as-printed" or "unrooted"

    Returns:
        AnchorSampleGraph with n*k stored coefficients
    """
    if not 1 <= k <= anchors.m:
        raise ValidationError(f"k must satisfy 1 <= k <= m={anchors.m}, got {k}")

    sq = cdist(ds.samples, anchors.vectors.T, "sqeuclidean")
    neighbors = np.argsort(sq, axis=1, kind="stable")[:, :k]
    sq_near = np.take_along_axis(sq, neighbors, axis=1)
    sigma = kernel_width(np.sqrt(sq_near), sigma_rule)

    coefficients = softmax(-sq_near / sigma[:, None] ** 2, axis=1)
    logger.debug(f"ASG: n={ds.n}, m={anchors.m}, k={k}, median sigma={np.median(sigma):.4g}")
    return AnchorSampleGraph(neighbor_indices=neighbors, coefficients=coefficients, anchors=anchors)
