"""
Regularizers R(w) and their proximal operators

    prox(u; eta) = argmin_w 1/2 ||w - u||^2 + eta * R(w)

When ``intercept`` is set the last coordinate (the appended constant-1
dimension) is neither penalized nor shrunk.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.exceptions import ValidationError

REG_KINDS = ("tikhonov", "l1", "elastic_net")


@dataclass(frozen=True)
class Regularizer:
    kind: str = "tikhonov"
    lam: float = 1e-3
    alpha: float = 0.5
    intercept: bool = True

    def __post_init__(self):
        kind = self.kind.replace("-", "_")
        if kind not in REG_KINDS:
            raise ValidationError(f"unknown regularizer {self.kind!r}, expected one of {REG_KINDS}")
        if self.lam < 0:
            raise ValidationError(f"lambda must be >= 0, got {self.lam}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError(f"elastic-net alpha must lie in [0, 1], got {self.alpha}")
        object.__setattr__(self, "kind", kind)

    def penalized(self, w: np.ndarray) -> np.ndarray:
        return w[:-1] if self.intercept else w


def _soft_threshold(u: np.ndarray, threshold: float) -> np.ndarray:
    return np.sign(u) * np.maximum(np.abs(u) - threshold, 0.0)


def reg_value(reg: Regularizer, w: np.ndarray) -> float:
    """
    R(w) for the three supported penalties:
      tikhonov     lam * ||w||^2
      l1           lam * ||w||_1
      elastic net  lam * (1 - alpha) * ||w||_1 + lam * alpha * ||w||^2
    """
    v = reg.penalized(np.asarray(w, dtype=np.float64))
    if reg.kind == "tikhonov":
        return float(reg.lam * (v @ v))
    if reg.kind == "l1":
        return float(reg.lam * np.abs(v).sum())
    return float(reg.lam * (1.0 - reg.alpha) * np.abs(v).sum() + reg.lam * reg.alpha * (v @ v))


def prox(reg: Regularizer, u: np.ndarray, eta: float) -> np.ndarray:
    """
    Proximal step for eta * R at u.

    Args:
        reg: regularizer
        u: point to project (typically w - eta * g)
        eta: nonnegative step size; 0 leaves u unchanged

    Returns:
        new parameter vector; the intercept coordinate is copied through
    """
    if not eta >= 0:
        raise ValidationError(f"prox step must be nonnegative, got {eta}")
    u = np.asarray(u, dtype=np.float64)
    if eta == 0:
        return u.copy()
    out = u.copy()
    head = reg.penalized(u)

    if reg.kind == "tikhonov":
        shrunk = head / (1.0 + 2.0 * eta * reg.lam)
    elif reg.kind == "l1":
        shrunk = _soft_threshold(head, eta * reg.lam)
    else:
        shrunk = _soft_threshold(head, eta * reg.lam * (1.0 - reg.alpha))
        shrunk /= 1.0 + 2.0 * eta * reg.lam * reg.alpha

    if reg.intercept:
        out[:-1] = shrunk
    else:
        out[:] = shrunk
    return out


def strong_convexity(reg: Regularizer) -> float:
    """mu_R contributed by the penalty: 2*lam (Hessian of lam*||w||^2), 0 for l1, 2*lam*alpha for elastic net."""
    if reg.kind == "tikhonov":
        return 2.0 * reg.lam
    if reg.kind == "l1":
        return 0.0
    return 2.0 * reg.lam * reg.alpha
