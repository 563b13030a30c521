"""
Gradient estimators for the smooth part P(w) = sum_i weight_i * psi_i(w).

Mini-batches are drawn uniformly without replacement and every per-sample
term is scaled by n * weight_i / p, so the expectation over batches equals
the weighted full gradient for any weighting. The anchor-based surrogate
grad h_i shares that measure, which keeps grad H = sum_i weight_i grad h_i
exact and the semi-stochastic estimator unbiased.

Anchor derivatives come in two shapes:
  (m,)   label-free sigma(-w^T z_j) for logistic loss; negatives use
         sigma(u) = 1 - sigma(-u), i.e. the interpolated scalar plus a constant
  (2, m) label-folded psi'(w^T z_j, +1) and psi'(w^T z_j, -1) for losses
         without that decoupling
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from src.anchors.graph import AnchorSampleGraph, AnchorSet
from src.anchors.propagation import PropagationCache
from src.data.dataset import Dataset
from src.exceptions import StaleCacheError, ValidationError
from src.models.loss import LossModel, atomic_derivative, decoupled_derivative, margins


def _check_dim(w: np.ndarray, d: int) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (d,):
        raise ValidationError(f"parameter dimension {w.shape} does not match d={d}")
    return w


def full_gradient(w: np.ndarray, ds: Dataset, loss: LossModel) -> np.ndarray:
    """Exact weighted gradient of P (the regularizer is not included)."""
    scalars = ds.weights * atomic_derivative(loss, margins(w, ds), ds.labels)
    return ds.features @ scalars


def sample_minibatch(n: int, p: int, rng: np.random.Generator) -> np.ndarray:
    """p distinct indices drawn uniformly from range(n)."""
    if not 1 <= p <= n:
        raise ValidationError(f"batch size must satisfy 1 <= p <= n={n}, got {p}")
    return rng.choice(n, size=p, replace=False)


def _batch_scale(ds: Dataset, batch: np.ndarray) -> np.ndarray:
    if len(batch) == 0:
        raise ValidationError("empty mini-batch")
    return ds.weights[batch] * (ds.n / len(batch))


def minibatch_gradient(w: np.ndarray, batch: np.ndarray, ds: Dataset, loss: LossModel) -> np.ndarray:
    """(n/p) * sum_{i in batch} weight_i * grad psi_i(w)."""
    scale = _batch_scale(ds, batch)
    x = ds.features[:, batch]
    w = _check_dim(w, ds.d)
    return x @ (scale * atomic_derivative(loss, x.T @ w, ds.labels[batch]))


def anchor_derivatives(w: np.ndarray, anchors: AnchorSet, loss: LossModel) -> np.ndarray:
    """
    Derivative values at the anchors for parameter w.

    Returns:
        (m,) label-free sigma(-w^T z) when the loss decouples labels (logistic),
        otherwise (2, m) with rows psi'(w^T z, +1) and psi'(w^T z, -1)
    """
    if anchors.m < 1:
        raise ValidationError("anchor set is empty")
    u = anchors.vectors.T @ _check_dim(w, anchors.vectors.shape[0])
    if loss.decouples_labels:
        return decoupled_derivative(loss, u)
    return np.vstack([atomic_derivative(loss, u, 1.0), atomic_derivative(loss, u, -1.0)])


def _surrogate_scalars(rows: np.ndarray, ds: Dataset, asg: AnchorSampleGraph, anchor_derivs: np.ndarray) -> np.ndarray:
    """Scalar c_i with grad h_i = c_i * x_i."""
    if anchor_derivs.shape[-1] != asg.m:
        raise StaleCacheError(f"anchor derivatives cover {anchor_derivs.shape[-1]} anchors, graph has {asg.m}")
    negative = ds.labels[rows] < 0
    if anchor_derivs.ndim == 1:
        interpolated = asg.interpolate(rows, anchor_derivs)
        # Case y=+1: -s * x;  case y=-1: (1 - s) * x = -s * x + x
        return negative - interpolated
    per_class = asg.interpolate(rows, anchor_derivs)
    return np.where(negative, per_class[1], per_class[0])


def approx_sample_gradient(i: int, ds: Dataset, asg: AnchorSampleGraph, anchor_derivs: np.ndarray) -> np.ndarray:
    """grad h_i: the sample's own derivative replaced by its anchor interpolation."""
    if not 0 <= i < ds.n:
        raise ValidationError(f"sample index {i} out of range for n={ds.n}")
    rows = np.array([i])
    return _surrogate_scalars(rows, ds, asg, anchor_derivs)[0] * ds.features[:, i]


def approx_batch_gradient(batch: np.ndarray, ds: Dataset, asg: AnchorSampleGraph, anchor_derivs: np.ndarray) -> np.ndarray:
    """grad h_I with the same n * weight_i / p scaling as minibatch_gradient."""
    scale = _batch_scale(ds, batch)
    return ds.features[:, batch] @ (scale * _surrogate_scalars(batch, ds, asg, anchor_derivs))


def approx_full_gradient(cache: PropagationCache, anchor_derivs: np.ndarray) -> np.ndarray:
    """
    grad H(w) from the propagation cache in O(d m).

    Label-free derivatives: the ascent-form sum xm_pos.d + xm_neg.d + neg_correction,
    negated for the minimization convention. Class-conditional derivatives:
    xm_pos.d_+ + xm_neg.d_-.
    """
    if anchor_derivs.shape[-1] != cache.m:
        raise StaleCacheError(f"anchor derivatives cover {anchor_derivs.shape[-1]} anchors, cache has {cache.m}")
    if anchor_derivs.ndim == 1:
        return -(cache.xm_pos @ anchor_derivs + cache.xm_neg @ anchor_derivs + cache.neg_correction)
    return cache.xm_pos @ anchor_derivs[0] + cache.xm_neg @ anchor_derivs[1]


@dataclass(frozen=True, eq=False)
class GradientSnapshot:
    w_tilde: np.ndarray
    H_grad: np.ndarray
    anchor_derivs: np.ndarray

    @property
    def anchor_count(self) -> int:
        return self.anchor_derivs.shape[-1]


def make_snapshot(w_tilde: np.ndarray, asg: AnchorSampleGraph, cache: PropagationCache, loss: LossModel) -> GradientSnapshot:
    """Anchor derivatives and grad H at the outer-loop point w_tilde, computed once per outer loop."""
    w_tilde = np.array(w_tilde, dtype=np.float64)
    derivs = anchor_derivatives(w_tilde, asg.anchors, loss)
    return GradientSnapshot(w_tilde=w_tilde, H_grad=approx_full_gradient(cache, derivs), anchor_derivs=derivs)


def semi_stochastic_gradient(
    w_k: np.ndarray,
    snapshot: GradientSnapshot,
    batch: np.ndarray,
    ds: Dataset,
    loss: LossModel,
    asg: AnchorSampleGraph,
    cache: PropagationCache,
) -> np.ndarray:
    """g_I = grad psi_I(w_k) - [grad h_I(w_tilde) - grad H(w_tilde)]."""
    if snapshot.anchor_count != asg.m or cache.m != asg.m:
        raise StaleCacheError(
            f"snapshot ({snapshot.anchor_count}), graph ({asg.m}) and cache ({cache.m}) anchor counts differ"
        )
    if snapshot.w_tilde.shape != np.shape(w_k):
        raise StaleCacheError("snapshot was taken for a different parameter dimension")
    correction = approx_batch_gradient(batch, ds, asg, snapshot.anchor_derivs) - snapshot.H_grad
    return minibatch_gradient(w_k, batch, ds, loss) - correction


def svrg_gradient(
    w_k: np.ndarray,
    w_tilde: np.ndarray,
    full_grad_tilde: np.ndarray,
    batch: np.ndarray,
    ds: Dataset,
    loss: LossModel,
) -> np.ndarray:
    """Prox-SVRG estimator grad psi_I(w_k) - [grad psi_I(w_tilde) - grad P(w_tilde)]."""
    correction = minibatch_gradient(w_tilde, batch, ds, loss) - full_grad_tilde
    return minibatch_gradient(w_k, batch, ds, loss) - correction


# ── Estimator handles ───────────────────────────────────────────────────────


@dataclass(frozen=True)
class GradientEstimator:
    """
    A stochastic gradient estimator bundled with the exact gradient it targets.

    ``draw(w, rng)`` samples one estimate at w; ``exact(w)`` is grad P(w).
    """

    name: str
    draw: Callable[[np.ndarray, np.random.Generator], np.ndarray]
    exact: Callable[[np.ndarray], np.ndarray]


def exact_estimator(ds: Dataset, loss: LossModel) -> GradientEstimator:
    exact = lambda w: full_gradient(w, ds, loss)  # noqa: E731
    return GradientEstimator("full", lambda w, rng: exact(w), exact)


def minibatch_estimator(ds: Dataset, loss: LossModel, p: int) -> GradientEstimator:
    """Plain uniform mini-batch gradient grad psi_I."""

    def draw(w, rng):
        return minibatch_gradient(w, sample_minibatch(ds.n, p, rng), ds, loss)

    return GradientEstimator("minibatch", draw, lambda w: full_gradient(w, ds, loss))


def svrg_estimator(
    ds: Dataset,
    loss: LossModel,
    w_tilde: np.ndarray,
    p: int,
    full_grad_tilde: Optional[np.ndarray] = None,
) -> GradientEstimator:
    w_tilde = np.array(w_tilde, dtype=np.float64)
    full_tilde = full_gradient(w_tilde, ds, loss) if full_grad_tilde is None else full_grad_tilde

    def draw(w, rng):
        return svrg_gradient(w, w_tilde, full_tilde, sample_minibatch(ds.n, p, rng), ds, loss)

    return GradientEstimator("svrg", draw, lambda w: full_gradient(w, ds, loss))


def s3gd_estimator(
    ds: Dataset,
    loss: LossModel,
    asg: AnchorSampleGraph,
    cache: PropagationCache,
    w_tilde: np.ndarray,
    p: int,
    snapshot: Optional[GradientSnapshot] = None,
) -> GradientEstimator:
    if snapshot is None:
        snapshot = make_snapshot(w_tilde, asg, cache, loss)

    def draw(w, rng):
        return semi_stochastic_gradient(w, snapshot, sample_minibatch(ds.n, p, rng), ds, loss, asg, cache)

    return GradientEstimator("s3gd", draw, lambda w: full_gradient(w, ds, loss))
