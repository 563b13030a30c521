"""
Gradient-quality metrics: Pearson correlation against the exact gradient
and Monte-Carlo estimator variance.
"""
from __future__ import annotations

import logging
from typing import TYPE_CHECKING, NamedTuple

import numpy as np
from scipy import stats

from src.exceptions import ValidationError

if TYPE_CHECKING:
    from src.optim.gradients import GradientEstimator

logger = logging.getLogger(__name__)


class Correlation(NamedTuple):
    value: float
    degenerate: bool = False


class VarianceEstimate(NamedTuple):
    value: float
    stderr: float
    samples: int


def pearson_correlation(g: np.ndarray, g_exact: np.ndarray) -> Correlation:
    """
    Sample Pearson coefficient over the coordinate pairs of two gradients.

    Returns 0 with ``degenerate=True`` when either vector is constant.
    """
    g = np.asarray(g, dtype=np.float64).ravel()
    g_exact = np.asarray(g_exact, dtype=np.float64).ravel()
    if g.shape != g_exact.shape:
        raise ValidationError(f"gradient sizes differ: {g.size} vs {g_exact.size}")
    if g.size < 2:
        raise ValidationError("correlation needs at least two coordinates")
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(g_exact))):
        raise ValidationError("gradients contain non-finite entries")
    if np.ptp(g) == 0 or np.ptp(g_exact) == 0:
        return Correlation(0.0, True)

    r = stats.pearsonr(g, g_exact).statistic
    return Correlation(float(np.clip(r, -1.0, 1.0)), False)


def estimator_variance(
    estimator: "GradientEstimator",
    w: np.ndarray,
    trials: int,
    rng: np.random.Generator,
) -> VarianceEstimate:
    """
    Mean of ||g - grad P(w)||^2 over ``trials`` independent draws.

    Estimators that consume ``rng`` identically see identical batches when
    handed generators with the same seed.
    """
    if trials < 2:
        raise ValidationError(f"variance needs at least 2 trials, got {trials}")
    exact = estimator.exact(w)
    sq = np.empty(trials)
    for t in range(trials):
        diff = estimator.draw(w, rng) - exact
        sq[t] = diff @ diff
    return VarianceEstimate(
        value=float(sq.mean()),
        stderr=float(sq.std(ddof=1) / np.sqrt(trials)),
        samples=trials,
    )
