"""
Desk-scale synthetic benchmark data: a mixture of isotropic Gaussians.

Cluster means are placed so that any two of them sit exactly ``separation``
apart when clusters <= dims (scaled unit vectors); otherwise they lie on a
line with consecutive means ``separation`` apart. Labels follow cluster
parity: even clusters are +1, odd clusters are -1.
"""
from __future__ import annotations

import logging

import numpy as np
from sklearn.datasets import make_blobs

from src.data.dataset import Dataset, append_intercept, uniform_weights, unit_normalize
from src.exceptions import ValidationError

logger = logging.getLogger(__name__)


def cluster_means(clusters: int, dims: int, separation: float) -> np.ndarray:
    """(clusters x dims) array of mixture means, centered at the origin."""
    means = np.zeros((clusters, dims))
    if clusters <= dims:
        means[np.arange(clusters), np.arange(clusters)] = separation / np.sqrt(2.0)
    else:
        means[:, 0] = separation * np.arange(clusters)
    if clusters == 1:
        return np.zeros((1, dims))
    return means - means.mean(axis=0)


def synth_gaussian(
    n: int,
    d: int,
    clusters: int,
    separation: float,
    seed: int,
    std: float = 1.0,
    normalize: bool = False,
    intercept: bool = True,
) -> Dataset:
    """
    Draw a labelled Gaussian-mixture dataset.

    Args:
        n: number of samples
        d: feature dimensions (before the intercept)
        clusters: number of mixture components
        separation: distance between component means
        seed: RNG seed; identical seeds give identical datasets
        std: per-coordinate standard deviation of each component
        normalize: scale samples to unit norm
        intercept: append the constant-1 dimension

    Returns:
        Dataset with uniform weights
    """
    if n < 1 or d < 1 or clusters < 1:
        raise ValidationError(f"n, d and clusters must be >= 1 (got n={n}, d={d}, clusters={clusters})")

    means = cluster_means(clusters, d, separation)
    samples, component = make_blobs(
        n_samples=n, n_features=d, centers=means, cluster_std=std, shuffle=True, random_state=seed
    )
    labels = np.where(component % 2 == 0, 1.0, -1.0)
    if normalize:
        samples = unit_normalize(samples)

    features = append_intercept(samples) if intercept else samples.T
    ds = Dataset(features, labels, uniform_weights(n), has_intercept=intercept)
    logger.debug(f"Synthetic dataset: n={n}, d={d}, clusters={clusters}, separation={separation}, seed={seed}")
    return ds
