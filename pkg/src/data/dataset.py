"""
Dataset container shared by every optimizer run.

Features are stored column-per-sample (d rows x n columns, Fortran order) so
that a mini-batch gather ``features[:, batch]`` reads contiguous columns.
When ``has_intercept`` is set the last feature row is the constant-1
intercept dimension appended at load time.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from sklearn.model_selection import train_test_split

from src.exceptions import ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable labelled sample matrix with per-sample weights."""

    features: np.ndarray
    labels: np.ndarray
    weights: np.ndarray
    has_intercept: bool = True
    names: Optional[tuple[str, ...]] = None
    _positive: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        features = np.asfortranarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.float64).ravel()
        weights = np.asarray(self.weights, dtype=np.float64).ravel()

        if features.ndim != 2 or features.shape[0] < 1 or features.shape[1] < 1:
            raise ValidationError(f"features must be a non-empty d x n matrix, got shape {features.shape}")
        n = features.shape[1]
        if labels.shape[0] != n or weights.shape[0] != n:
            raise ValidationError(
                f"labels ({labels.shape[0]}) and weights ({weights.shape[0]}) must match n={n}"
            )
        if not np.all(np.isfinite(features)):
            raise ValidationError("features contain non-finite entries")
        if not np.all(np.isin(labels, (-1.0, 1.0))):
            bad = np.unique(labels[~np.isin(labels, (-1.0, 1.0))])
            raise ValidationError(f"labels must be +1/-1, found {bad[:5].tolist()}")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValidationError("weights must be finite and nonnegative")

        for array in (features, labels, weights):
            array.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "_positive", labels > 0)

    @property
    def n(self) -> int:
        return self.features.shape[1]

    @property
    def d(self) -> int:
        return self.features.shape[0]

    @property
    def positive(self) -> np.ndarray:
        """Boolean mask of the +1 samples."""
        return self._positive

    @property
    def negative(self) -> np.ndarray:
        return ~self._positive

    @property
    def samples(self) -> np.ndarray:
        """Row-per-sample view (n x d), as expected by scikit-learn and scipy."""
        return self.features.T

    def with_weights(self, weights: np.ndarray) -> "Dataset":
        return Dataset(self.features, self.labels, weights, self.has_intercept, self.names)

    def subset(self, indices: Sequence[int]) -> "Dataset":
        """Dataset restricted to ``indices``; weights are renormalized to keep their total."""
        indices = np.asarray(indices, dtype=np.intp)
        weights = self.weights[indices]
        total = weights.sum()
        if total > 0:
            weights = weights * (self.weights.sum() / total)
        names = tuple(self.names[i] for i in indices) if self.names else None
        return Dataset(self.features[:, indices], self.labels[indices], weights, self.has_intercept, names)


def uniform_weights(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def class_weights(ds: Dataset) -> np.ndarray:
    """
    Class-balanced sample weights.

    Each positive sample gets 1/|Y+| and each negative sample 1/|Y-|, so
    the weights of each class sum to 1.

    Args:
        ds: dataset with both classes present

    Returns:
        weight vector of length n

    Raises:
        ValidationError: when the dataset holds a single class
    """
    n_pos = int(ds.positive.sum())
    n_neg = ds.n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("cannot balance one class")
    weights = np.where(ds.positive, 1.0 / n_pos, 1.0 / n_neg)
    logger.debug(f"Class weights: {n_pos} positive at {1.0 / n_pos:.3g}, {n_neg} negative at {1.0 / n_neg:.3g}")
    return weights


def append_intercept(samples: np.ndarray) -> np.ndarray:
    """(n x d) samples -> (d+1 x n) feature matrix with a constant-1 last row."""
    n = samples.shape[0]
    return np.vstack([samples.T, np.ones((1, n))])


def unit_normalize(samples: np.ndarray) -> np.ndarray:
    """Scale each (n x d) row to unit Euclidean norm; zero rows stay zero."""
    norms = np.linalg.norm(samples, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return samples / norms


def train_test_split_dataset(ds: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified train/test split (labels kept in the same proportion)."""
    indices = np.arange(ds.n)
    train_idx, test_idx = train_test_split(
        indices, test_size=test_fraction, random_state=seed, stratify=ds.labels
    )
    train_idx.sort()
    test_idx.sort()
    return ds.subset(train_idx), ds.subset(test_idx)
