"""
S3GD: SVRG's nested loop with the snapshot's exact full gradient replaced by
the anchor surrogate grad H, computed from the propagation cache in O(d m).
"""
from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from src.anchors.graph import AnchorSampleGraph
from src.anchors.propagation import AnchorModel, PropagationCache, build_anchor_model
from src.data.dataset import Dataset
from src.diagnostics.trace import Trace
from src.exceptions import StaleCacheError, ValidationError
from src.models.loss import LossModel
from src.models.prox import Regularizer
from src.optim.base import RunConfig, SnapshotOptimizer
from src.optim.gradients import (
    GradientEstimator,
    make_snapshot,
    s3gd_estimator,
    sample_minibatch,
    semi_stochastic_gradient,
)

logger = logging.getLogger(__name__)


class S3GD(SnapshotOptimizer):
    name = "s3gd"

    def __init__(
        self,
        cfg: RunConfig,
        ds: Dataset,
        loss: LossModel,
        reg: Regularizer,
        test: Optional[Dataset] = None,
        anchor_model: Optional[AnchorModel] = None,
    ):
        super().__init__(cfg, ds, loss, reg, test)
        self.anchor_model = anchor_model
        if anchor_model is not None:
            _check_consistent(ds, anchor_model.asg, anchor_model.cache)
            self.preprocessing_seconds = anchor_model.preprocessing_seconds

    def setup(self):
        if self.anchor_model is None:
            cfg = self.cfg
            self.anchor_model = build_anchor_model(
                self.ds,
                m=cfg.anchor_m,
                k=cfg.anchor_k,
                seed=cfg.seed,
                max_iter=cfg.kmeans_iter,
                sigma_rule=cfg.sigma_rule,
            )
        self.asg = self.anchor_model.asg
        self.cache = self.anchor_model.cache

    def take_snapshot(self, w_tilde):
        self.snapshot = make_snapshot(w_tilde, self.asg, self.cache, self.loss)

    def direction(self, w, rng):
        batch = sample_minibatch(self.ds.n, self.cfg.p, rng)
        return semi_stochastic_gradient(w, self.snapshot, batch, self.ds, self.loss, self.asg, self.cache)

    def estimator(self) -> GradientEstimator:
        return s3gd_estimator(
            self.ds, self.loss, self.asg, self.cache, self.snapshot.w_tilde, self.cfg.p, snapshot=self.snapshot
        )


def _check_consistent(ds: Dataset, asg: AnchorSampleGraph, cache: PropagationCache) -> None:
    if asg.n != ds.n or asg.anchors.vectors.shape[0] != ds.d:
        raise ValidationError(f"anchor graph ({asg.n} samples) was not built for this dataset ({ds.n} samples)")
    if cache.m != asg.m:
        raise StaleCacheError(f"propagation cache covers {cache.m} anchors, graph has {asg.m}")
    if not np.array_equal(cache.weights_used, ds.weights):
        raise StaleCacheError("propagation cache was built with different sample weights")


def run_s3gd(
    cfg: RunConfig,
    ds: Dataset,
    loss: LossModel,
    reg: Regularizer,
    asg: AnchorSampleGraph,
    cache: PropagationCache,
    test: Optional[Dataset] = None,
    w0: Optional[np.ndarray] = None,
    preprocessing_seconds: float = 0.0,
) -> Trace:
    """Run S3GD on a prebuilt anchor graph and cache (anchors travel with ``asg.anchors``)."""
    model = AnchorModel(asg.anchors, asg, cache, preprocessing_seconds)
    return S3GD(cfg, ds, loss, reg, test, anchor_model=model).run(w0)
