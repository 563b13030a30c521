"""
Stratified SGD.

The samples are clustered into p strata with k-means at setup. Every
mini-batch takes one uniform sample from each stratum and scales its
weighted gradient by the stratum size, which keeps the estimator unbiased:

    g = sum_s n_s * weight_{i_s} * grad psi_{i_s}(w)
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.anchors.kmeans import kmeans
from src.data.dataset import Dataset
from src.diagnostics.trace import Trace
from src.exceptions import ValidationError
from src.models.loss import LossModel, atomic_derivative
from src.models.prox import Regularizer
from src.optim.base import Optimizer, RunConfig
from src.optim.gradients import GradientEstimator, full_gradient

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Strata:
    order: np.ndarray  # sample indices grouped by stratum
    starts: np.ndarray  # offset of each stratum in ``order``
    sizes: np.ndarray

    @property
    def count(self) -> int:
        return self.sizes.shape[0]

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        """One uniform index per stratum, in stratum order."""
        return self.order[self.starts + rng.integers(0, self.sizes)]


def build_strata(ds: Dataset, p: int, seed: int = 0, max_iter: int = 100) -> Strata:
    if p > ds.n:
        raise ValidationError(f"cannot form {p} strata from {ds.n} samples")
    labels = kmeans(ds, p, seed=seed, max_iter=max_iter).labels
    sizes = np.bincount(labels, minlength=p)
    # k-means re-seeds empty clusters, so every stratum is populated
    order = np.argsort(labels, kind="stable")
    starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    logger.debug(f"SSGD strata: sizes min={sizes.min()} max={sizes.max()}")
    return Strata(order=order, starts=starts, sizes=sizes)


def stratified_gradient(w: np.ndarray, batch: np.ndarray, strata: Strata, ds: Dataset, loss: LossModel) -> np.ndarray:
    x = ds.features[:, batch]
    scale = strata.sizes * ds.weights[batch]
    return x @ (scale * atomic_derivative(loss, x.T @ w, ds.labels[batch]))


def stratified_estimator(ds: Dataset, loss: LossModel, strata: Strata) -> GradientEstimator:
    def draw(w, rng):
        return stratified_gradient(w, strata.draw(rng), strata, ds, loss)

    return GradientEstimator("ssgd", draw, lambda w: full_gradient(w, ds, loss))


class SSGD(Optimizer):
    name = "ssgd"

    def setup(self):
        cfg = self.cfg
        self.strata = build_strata(self.ds, cfg.p, seed=cfg.seed, max_iter=cfg.kmeans_iter)

    def direction(self, w, rng):
        return stratified_gradient(w, self.strata.draw(rng), self.strata, self.ds, self.loss)

    def estimator(self) -> GradientEstimator:
        return stratified_estimator(self.ds, self.loss, self.strata)


def run_ssgd(
    cfg: RunConfig,
    ds: Dataset,
    loss: LossModel,
    reg: Regularizer,
    test: Optional[Dataset] = None,
    w0: Optional[np.ndarray] = None,
) -> Trace:
    return SSGD(cfg, ds, loss, reg, test).run(w0)
