"""Mini-batch proximal SGD with batches drawn according to the sample weights."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.data.dataset import Dataset
from src.diagnostics.trace import Trace
from src.exceptions import ValidationError
from src.models.loss import LossModel, atomic_derivative
from src.models.prox import Regularizer
from src.optim.base import Optimizer, RunConfig
from src.optim.gradients import GradientEstimator, full_gradient


@dataclass(frozen=True)
class WeightedSampler:
    """Inverse-CDF sampler over the sample weights; a draw of p indices costs O(p log n)."""

    cdf: np.ndarray
    total: float

    @classmethod
    def from_weights(cls, weights: np.ndarray) -> "WeightedSampler":
        total = float(weights.sum())
        if total <= 0:
            raise ValidationError("sample weights sum to zero")
        cdf = np.cumsum(weights) / total
        cdf.flags.writeable = False
        return cls(cdf, total)

    def draw(self, p: int, rng: np.random.Generator) -> np.ndarray:
        """p indices with replacement, P(i) = weight_i / total."""
        idx = np.searchsorted(self.cdf, rng.random(p), side="right")
        # rounding can leave cdf[-1] a hair below 1
        return np.minimum(idx, self.cdf.shape[0] - 1)


def weighted_sgd_gradient(
    w: np.ndarray, batch: np.ndarray, ds: Dataset, loss: LossModel, total: Optional[float] = None
) -> np.ndarray:
    """(sum(weights) / p) * sum_{i in batch} grad psi_i(w); unbiased under weighted sampling."""
    if total is None:
        total = ds.weights.sum()
    x = ds.features[:, batch]
    scale = total / len(batch)
    return x @ (scale * atomic_derivative(loss, x.T @ w, ds.labels[batch]))


def weighted_sgd_estimator(ds: Dataset, loss: LossModel, p: int) -> GradientEstimator:
    sampler = WeightedSampler.from_weights(ds.weights)

    def draw(w, rng):
        return weighted_sgd_gradient(w, sampler.draw(p, rng), ds, loss, sampler.total)

    return GradientEstimator("sgd", draw, lambda w: full_gradient(w, ds, loss))


class SGD(Optimizer):
    name = "sgd"

    def setup(self):
        self.sampler = WeightedSampler.from_weights(self.ds.weights)

    def direction(self, w, rng):
        batch = self.sampler.draw(self.cfg.p, rng)
        return weighted_sgd_gradient(w, batch, self.ds, self.loss, self.sampler.total)

    def estimator(self) -> GradientEstimator:
        return weighted_sgd_estimator(self.ds, self.loss, self.cfg.p)


def run_sgd(
    cfg: RunConfig,
    ds: Dataset,
    loss: LossModel,
    reg: Regularizer,
    test: Optional[Dataset] = None,
    w0: Optional[np.ndarray] = None,
) -> Trace:
    return SGD(cfg, ds, loss, reg, test).run(w0)
