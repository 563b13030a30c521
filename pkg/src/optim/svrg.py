"""Proximal SVRG: exact grad P at the snapshot, mini-batch corrections inside the inner loop."""
from __future__ import annotations

from typing import Optional

import numpy as np

from src.data.dataset import Dataset
from src.diagnostics.trace import Trace
from src.models.loss import LossModel
from src.models.prox import Regularizer
from src.optim.base import RunConfig, SnapshotOptimizer
from src.optim.gradients import GradientEstimator, full_gradient, sample_minibatch, svrg_estimator, svrg_gradient


class ProxSVRG(SnapshotOptimizer):
    name = "svrg"

    def take_snapshot(self, w_tilde):
        self.w_tilde = w_tilde.copy()
        self.full_tilde = full_gradient(self.w_tilde, self.ds, self.loss)

    def direction(self, w, rng):
        batch = sample_minibatch(self.ds.n, self.cfg.p, rng)
        return svrg_gradient(w, self.w_tilde, self.full_tilde, batch, self.ds, self.loss)

    def estimator(self) -> GradientEstimator:
        return svrg_estimator(self.ds, self.loss, self.w_tilde, self.cfg.p, full_grad_tilde=self.full_tilde)


def run_svrg(
    cfg: RunConfig,
    ds: Dataset,
    loss: LossModel,
    reg: Regularizer,
    test: Optional[Dataset] = None,
    w0: Optional[np.ndarray] = None,
) -> Trace:
    return ProxSVRG(cfg, ds, loss, reg, test).run(w0)
