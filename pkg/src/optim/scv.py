"""
Stochastic control variates built from per-class moments.

For sample i of class c the control variate is the Taylor surrogate of its
gradient around the weighted class mean xbar_c (a_c = w^T xbar_c):

    c_i(w) = [psi'(a_c) + order * psi''(a_c) * w^T (x_i - xbar_c)] * x_i

Its weighted expectation needs only the class statistics
S_c = sum_{i in c} weight_i x_i and, for order 1,
C_c = sum_{i in c} weight_i x_i (x_i - xbar_c)^T:

    E[c(w)] = sum_c psi'(a_c) S_c + order * psi''(a_c) C_c w

Order 0 costs O(d) per iteration beyond the mini-batch; order 1 costs O(d^2).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.data.dataset import Dataset
from src.diagnostics.trace import Trace
from src.models.loss import LossModel, atomic_curvature, atomic_derivative
from src.models.prox import Regularizer
from src.optim.base import Optimizer, RunConfig
from src.optim.gradients import GradientEstimator, full_gradient, minibatch_gradient, sample_minibatch

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ClassMoments:
    label: float
    mean: np.ndarray  # xbar_c
    weighted_sum: np.ndarray  # S_c
    second_moment: Optional[np.ndarray]  # C_c, order 1 only


def class_moments(ds: Dataset, order: int = 0) -> list[ClassMoments]:
    """Moments of every class with positive total weight."""
    moments = []
    for label, mask in ((1.0, ds.positive), (-1.0, ds.negative)):
        weights = ds.weights[mask]
        total = weights.sum()
        if total <= 0:
            continue
        x = ds.features[:, mask]
        weighted_sum = x @ weights
        mean = weighted_sum / total
        second = (x * weights) @ (x - mean[:, None]).T if order else None
        moments.append(ClassMoments(label, mean, weighted_sum, second))
    return moments


class ControlVariate:
    def __init__(self, ds: Dataset, loss: LossModel, order: int = 0):
        self.ds = ds
        self.loss = loss
        self.order = order
        self.moments = class_moments(ds, order)
        self._means = {cm.label: cm.mean for cm in self.moments}

    def expectation(self, w: np.ndarray) -> np.ndarray:
        total = np.zeros(self.ds.d)
        for cm in self.moments:
            a = cm.mean @ w
            total += atomic_derivative(self.loss, a, cm.label) * cm.weighted_sum
            if self.order:
                total += atomic_curvature(self.loss, a, cm.label) * (cm.second_moment @ w)
        return total

    def batch(self, w: np.ndarray, batch: np.ndarray) -> np.ndarray:
        """(n/p) * sum_{i in batch} weight_i * c_i(w), the control variate on the batch's measure."""
        ds = self.ds
        labels = ds.labels[batch]
        x = ds.features[:, batch]
        scalars = np.zeros(len(batch))
        for label, mean in self._means.items():
            rows = labels == label
            a = mean @ w
            scalars[rows] = atomic_derivative(self.loss, a, label)
            if self.order:
                shift = (x[:, rows] - mean[:, None]).T @ w
                scalars[rows] += atomic_curvature(self.loss, a, label) * shift
        return x @ (ds.weights[batch] * (ds.n / len(batch)) * scalars)

    def gradient(self, w: np.ndarray, batch: np.ndarray) -> np.ndarray:
        """grad psi_I(w) - [c_I(w) - E c(w)]."""
        return minibatch_gradient(w, batch, self.ds, self.loss) - (self.batch(w, batch) - self.expectation(w))


def control_variate_estimator(cv: ControlVariate, p: int) -> GradientEstimator:
    def draw(w, rng):
        return cv.gradient(w, sample_minibatch(cv.ds.n, p, rng))

    return GradientEstimator("scv", draw, lambda w: full_gradient(w, cv.ds, cv.loss))


class SCV(Optimizer):
    name = "scv"

    def setup(self):
        self.cv = ControlVariate(self.ds, self.loss, self.cfg.scv_order)
        logger.debug(f"SCV: {len(self.cv.moments)} class moments, order {self.cfg.scv_order}")

    def direction(self, w, rng):
        return self.cv.gradient(w, sample_minibatch(self.ds.n, self.cfg.p, rng))

    def estimator(self) -> GradientEstimator:
        return control_variate_estimator(self.cv, self.cfg.p)


def run_scv(
    cfg: RunConfig,
    ds: Dataset,
    loss: LossModel,
    reg: Regularizer,
    test: Optional[Dataset] = None,
    w0: Optional[np.ndarray] = None,
) -> Trace:
    return SCV(cfg, ds, loss, reg, test).run(w0)
