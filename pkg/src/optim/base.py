"""
Shared proximal run loop.

Every algorithm factors its update as

    w <- prox(reg, w - eta * direction(w), eta)

and differs only in ``setup`` (preprocessing, timed separately) and in how
``direction`` estimates grad P. Nested algorithms refresh a snapshot every
``k_in`` iterations through ``SnapshotOptimizer``.

Wall time covers the update loop only; checkpoint diagnostics run with the
clock paused.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

from src.data.dataset import Dataset
from src.diagnostics.metrics import estimator_variance, pearson_correlation
from src.diagnostics.trace import Trace, TraceRecord
from src.exceptions import ValidationError
from src.models.loss import LossModel, objective
from src.models.prox import Regularizer, prox
from src.optim.gradients import GradientEstimator, full_gradient

logger = logging.getLogger(__name__)

ALGORITHMS = ("sgd", "ssgd", "svrg", "scv", "s3gd")
NESTED_ALGORITHMS = ("svrg", "s3gd")
DEFAULT_K_IN = {"s3gd": 20, "svrg": 50}
SNAPSHOT_POLICIES = ("last", "best")
DIVERGENCE_FACTOR = 1e3


@dataclass(frozen=True)
class RunConfig:
    algorithm: str = "s3gd"
    eta: float = 0.1
    p: int = 10
    k_in: Optional[int] = None
    max_iters: int = 1000
    seed: int = 0
    checkpoint_every: int = 10
    snapshot: str = "last"
    # anchors (s3gd)
    anchor_m: int = 100
    anchor_k: int = 3
    sigma_rule: str = "as-printed"
    kmeans_iter: int = 100
    # scv
    scv_order: int = 0
    # checkpoint diagnostics
    track_correlation: bool = False
    variance_trials: int = 0
    record_iterates: bool = False
    divergence_factor: float = DIVERGENCE_FACTOR

    @property
    def inner_length(self) -> int:
        if self.k_in is not None:
            return self.k_in
        return DEFAULT_K_IN.get(self.algorithm, 1)

    def validate(self) -> "RunConfig":
        """Check field ranges; returns self so calls chain."""
        if self.algorithm not in ALGORITHMS:
            raise ValidationError(f"unknown algorithm {self.algorithm!r}, expected one of {ALGORITHMS}")
        if not (math.isfinite(self.eta) and self.eta >= 0):
            raise ValidationError(f"eta must be a finite nonnegative number, got {self.eta}")
        if self.p < 1:
            raise ValidationError(f"batch size p must be >= 1, got {self.p}")
        if self.algorithm in NESTED_ALGORITHMS and self.inner_length < 1:
            raise ValidationError(f"k_in must be >= 1 for {self.algorithm}, got {self.inner_length}")
        if self.max_iters < 0:
            raise ValidationError(f"max_iters must be >= 0, got {self.max_iters}")
        if self.checkpoint_every < 1:
            raise ValidationError(f"checkpoint_every must be >= 1, got {self.checkpoint_every}")
        if self.snapshot not in SNAPSHOT_POLICIES:
            raise ValidationError(f"snapshot policy must be one of {SNAPSHOT_POLICIES}, got {self.snapshot!r}")
        if self.scv_order not in (0, 1):
            raise ValidationError(f"scv_order must be 0 or 1, got {self.scv_order}")
        if self.variance_trials == 1 or self.variance_trials < 0:
            raise ValidationError(f"variance_trials must be 0 (off) or >= 2, got {self.variance_trials}")
        if self.divergence_factor <= 1:
            raise ValidationError(f"divergence_factor must exceed 1, got {self.divergence_factor}")
        return self

    def with_algorithm(self, algorithm: str) -> "RunConfig":
        return replace(self, algorithm=algorithm)


class Optimizer:
    """Base class: subclasses implement ``direction`` and optionally ``setup``."""

    name = "base"

    def __init__(
        self,
        cfg: RunConfig,
        ds: Dataset,
        loss: LossModel,
        reg: Regularizer,
        test: Optional[Dataset] = None,
    ):
        if cfg.algorithm != self.name:
            cfg = cfg.with_algorithm(self.name)
        self.cfg = cfg.validate()
        self.ds = ds
        self.loss = loss
        self.reg = reg
        self.test = test
        self.preprocessing_seconds = 0.0

    # ── hooks ───────────────────────────────────────────────────────────────

    def setup(self) -> None:
        """One-off preprocessing before the first iteration."""

    def begin_iteration(self, w: np.ndarray, iteration: int) -> np.ndarray:
        """Called before ``direction`` at every iteration (1-based); returns the point to step from."""
        return w

    def end_iteration(self, w: np.ndarray, iteration: int) -> None:
        """Called with the new iterate after the prox step."""

    def direction(self, w: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def estimator(self) -> GradientEstimator:
        """The estimator ``direction`` draws from, in its current state."""
        raise NotImplementedError

    # ── loop ────────────────────────────────────────────────────────────────

    def objective(self, w: np.ndarray, ds: Optional[Dataset] = None) -> float:
        return objective(w, self.ds if ds is None else ds, self.loss, self.reg)

    def _checkpoint(self, trace: Trace, iteration: int, wall: float, w: np.ndarray, f: float,
                    w_prev: np.ndarray, g: Optional[np.ndarray]) -> None:
        cfg = self.cfg
        test_obj = self.objective(w, self.test) if self.test is not None else None
        grad_corr = est_var = None
        if g is not None and cfg.track_correlation:
            grad_corr = pearson_correlation(g, full_gradient(w_prev, self.ds, self.loss)).value
        if g is not None and cfg.variance_trials:
            # separate stream so the diagnostic never shifts the run's batches
            rng = np.random.default_rng([cfg.seed, iteration])
            est_var = estimator_variance(self.estimator(), w_prev, cfg.variance_trials, rng).value
        trace.append(TraceRecord(iteration, wall, f, test_obj, grad_corr, est_var))
        logger.debug(f"{self.name} it={iteration} F={f:.10g} corr={grad_corr} var={est_var}")

    def run(self, w0: Optional[np.ndarray] = None) -> Trace:
        cfg = self.cfg
        rng = np.random.default_rng(cfg.seed)
        w = np.zeros(self.ds.d) if w0 is None else np.array(w0, dtype=np.float64)
        if w.shape != (self.ds.d,):
            raise ValidationError(f"initial point has shape {w.shape}, expected ({self.ds.d},)")

        start = time.perf_counter()
        self.setup()
        self.preprocessing_seconds += time.perf_counter() - start

        trace = Trace(
            algorithm=self.name,
            eta=cfg.eta,
            seed=cfg.seed,
            config=asdict(cfg),
            preprocessing_seconds=self.preprocessing_seconds,
            iterates=[] if cfg.record_iterates else None,
        )
        f0 = self.objective(w)
        ceiling = cfg.divergence_factor * max(f0, np.finfo(float).tiny)
        self._checkpoint(trace, 0, 0.0, w, f0, w, None)
        logger.info(f"{self.name}: eta={cfg.eta:g} p={cfg.p} seed={cfg.seed} iters={cfg.max_iters} F(w0)={f0:.6g}")

        wall = 0.0
        iteration = 0
        for iteration in range(1, cfg.max_iters + 1):
            tick = time.perf_counter()
            w = self.begin_iteration(w, iteration)
            g = self.direction(w, rng)
            w_prev, w = w, prox(self.reg, w - cfg.eta * g, cfg.eta)
            self.end_iteration(w, iteration)
            wall += time.perf_counter() - tick

            if trace.iterates is not None:
                trace.iterates.append(w.copy())
            if not np.all(np.isfinite(w)):
                trace.mark_diverged(f"non-finite iterate at iteration {iteration}")
                break
            if iteration % cfg.checkpoint_every == 0 or iteration == cfg.max_iters:
                f = self.objective(w)
                self._checkpoint(trace, iteration, wall, w, f, w_prev, g)
                if not f <= ceiling:
                    trace.mark_diverged(
                        f"objective {f:.4g} exceeded {cfg.divergence_factor:g}x the initial {f0:.4g} at iteration {iteration}"
                    )
                    break

        trace.total_iterations = iteration
        trace.final_w = w
        logger.info(
            f"{self.name}: finished {iteration} iterations in {wall:.2f}s, F={trace.final_objective:.6g}"
            + (" (diverged)" if trace.diverged else "")
        )
        return trace


class SnapshotOptimizer(Optimizer):
    """
    Outer/inner loop: a snapshot w_tilde is taken at iterations 1, k_in + 1, ...

    The first snapshot is the initial point. Later ones are the last inner
    iterate, or with ``snapshot = best`` the inner iterate of lowest F.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._best_w: Optional[np.ndarray] = None
        self._best_f = math.inf

    def take_snapshot(self, w_tilde: np.ndarray) -> None:
        raise NotImplementedError

    def begin_iteration(self, w: np.ndarray, iteration: int) -> np.ndarray:
        if (iteration - 1) % self.cfg.inner_length:
            return w
        if iteration > 1 and self.cfg.snapshot == "best" and self._best_w is not None:
            # the next inner loop restarts from the selected snapshot
            w = self._best_w
        self.take_snapshot(w)
        self._best_w, self._best_f = None, math.inf
        return w

    def end_iteration(self, w: np.ndarray, iteration: int) -> None:
        if self.cfg.snapshot != "best":
            return
        f = self.objective(w)
        if f < self._best_f:
            self._best_w, self._best_f = w.copy(), f
