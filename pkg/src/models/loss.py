"""
Atomic smooth losses psi(u, y) on the margin u = w^T x.

The library minimizes, so derivatives are gradients of the minimized loss:
    logistic        psi = log(1 + exp(-y u))                 psi' = -sigma(-y u) y
    squared hinge   psi = 1/2 ((1 - y u)_+)^2                 psi' = -(1 - y u)_+ y
    smoothed hinge  psi = (1/b) log(1 + exp(-b (y u - 1)))    psi' = -sigma(-b (y u - 1)) y
All functions are vectorized over u and y.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from src.data.dataset import Dataset
from src.exceptions import ValidationError
from src.models.prox import Regularizer, reg_value

logger = logging.getLogger(__name__)

LOSS_KINDS = ("logistic", "smoothed_hinge", "squared_hinge")

# sup psi'' / ||x||^2 for each loss (beta multiplies the smoothed hinge factor)
_CURVATURE_BOUND = {
    "logistic": 0.25,
    "squared_hinge": 1.0,
    "smoothed_hinge": 0.25,
}


@dataclass(frozen=True)
class LossModel:
    kind: str = "logistic"
    beta: float = 10.0

    def __post_init__(self):
        kind = self.kind.replace("-", "_")
        if kind not in LOSS_KINDS:
            raise ValidationError(f"unknown loss {self.kind!r}, expected one of {LOSS_KINDS}")
        if kind == "smoothed_hinge" and not self.beta > 0:
            raise ValidationError(f"smoothed hinge needs beta > 0, got {self.beta}")
        object.__setattr__(self, "kind", kind)

    @property
    def decouples_labels(self) -> bool:
        """True when psi'(u, -1) is an affine function of psi'(u, +1) (logistic only)."""
        return self.kind == "logistic"

    @property
    def curvature_bound(self) -> float:
        bound = _CURVATURE_BOUND[self.kind]
        return bound * self.beta if self.kind == "smoothed_hinge" else bound


@dataclass(frozen=True)
class SmoothnessReport:
    L_max: float
    L_avg: float
    mu_P: float = 0.0
    # max_i n * w_i * L_i: smoothness of the n-scaled weighted atoms used by the estimators
    L_weighted_max: float = 0.0


def atomic_value(loss: LossModel, u, y):
    t = np.asarray(y) * np.asarray(u)
    if loss.kind == "logistic":
        return np.logaddexp(0.0, -t)
    if loss.kind == "squared_hinge":
        return 0.5 * np.maximum(0.0, 1.0 - t) ** 2
    return np.logaddexp(0.0, -loss.beta * (t - 1.0)) / loss.beta


def atomic_derivative(loss: LossModel, u, y):
    """Scalar psi'(u) with the label folded in, so grad psi_i = atomic_derivative(...) * x_i."""
    y = np.asarray(y)
    t = y * np.asarray(u)
    if loss.kind == "logistic":
        return -expit(-t) * y
    if loss.kind == "squared_hinge":
        return -np.maximum(0.0, 1.0 - t) * y
    return -expit(-loss.beta * (t - 1.0)) * y


def atomic_curvature(loss: LossModel, u, y):
    """Second derivative psi''(u); the label enters only through y*u since y^2 = 1."""
    t = np.asarray(y) * np.asarray(u)
    if loss.kind == "logistic":
        s = expit(t)
        return s * (1.0 - s)
    if loss.kind == "squared_hinge":
        return (1.0 - t > 0).astype(np.float64)
    s = expit(loss.beta * (t - 1.0))
    return loss.beta * s * (1.0 - s)


def decoupled_derivative(loss: LossModel, u):
    """
    Label-free scalar sigma(-u) of the logistic loss.

    psi'(u, +1) = -sigma(-u) and psi'(u, -1) = 1 - sigma(-u), so one
    interpolated scalar serves both classes.
    """
    if not loss.decouples_labels:
        raise ValidationError(f"{loss.kind} has no label-free derivative")
    return expit(-np.asarray(u))


def margins(w: np.ndarray, ds: Dataset) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (ds.d,):
        raise ValidationError(f"parameter dimension {w.shape} does not match d={ds.d}")
    return ds.features.T @ w


def smoothness(loss: LossModel, ds: Dataset) -> SmoothnessReport:
    """
    Per-sample Lipschitz constants of grad psi_i.

    L_i = c * ||x_i||^2 with c = 1/4 (logistic), 1 (squared hinge),
    beta/4 (smoothed hinge). mu_P is 0 for all three losses.
    """
    sq_norms = np.einsum("ij,ij->j", ds.features, ds.features)
    per_sample = loss.curvature_bound * sq_norms
    weighted = ds.n * ds.weights * per_sample
    return SmoothnessReport(
        L_max=float(per_sample.max()),
        L_avg=float(per_sample.mean()),
        mu_P=0.0,
        L_weighted_max=float(weighted.max()),
    )


def smooth_objective(w: np.ndarray, ds: Dataset, loss: LossModel) -> float:
    """P(w) = sum_i weight_i * psi(w^T x_i, y_i)."""
    if ds.weights.sum() <= 0:
        raise ValidationError("sample weights sum to zero")
    return float(ds.weights @ atomic_value(loss, margins(w, ds), ds.labels))


def objective(w: np.ndarray, ds: Dataset, loss: LossModel, reg: Regularizer) -> float:
    """Composite F(w) = P(w) + R(w)."""
    return smooth_objective(w, ds, loss) + reg_value(reg, w)
