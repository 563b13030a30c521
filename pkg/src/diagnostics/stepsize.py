"""
Step-size stability selection.

eta* is the largest candidate whose tail-averaged objective F(w; eta)
satisfies F(w; eta) <= (1 + epsilon) * F*. The tail is the last
min(5000, total_iters / 4) iterations of a run; runs stopped by the
divergence guard never pass.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from src.diagnostics.trace import Trace
from src.exceptions import ValidationError

logger = logging.getLogger(__name__)

TAIL_ITERATIONS = 5000
ZERO_OPTIMUM_TOLERANCE = 1e-8


def tail_window(total_iterations: int) -> int:
    return max(1, min(TAIL_ITERATIONS, total_iterations // 4))


def tail_objective(trace: Trace, window: Optional[int] = None) -> float:
    """Mean train objective over checkpoints inside the last ``window`` iterations."""
    if not trace.records:
        return math.nan
    total = trace.total_iterations or int(trace.records[-1].iteration)
    window = tail_window(total) if window is None else window
    iterations = trace.iterations
    objectives = trace.train_objectives
    in_tail = (iterations > total - window) & (iterations > 0)
    if not in_tail.any():
        return float(objectives[-1])
    return float(objectives[in_tail].mean())


@dataclass(frozen=True)
class StepsizeSelection:
    eta: float
    fallback: bool
    tail_objectives: dict[float, float] = field(default_factory=dict)


def passes_stability(tail: float, F_star: float, epsilon: float) -> bool:
    if not np.isfinite(tail):
        return False
    if F_star == 0:
        return tail <= ZERO_OPTIMUM_TOLERANCE
    return tail <= (1.0 + epsilon) * F_star


def select_stable_stepsize(
    traces: Mapping[float, Union[Trace, Sequence[Trace]]],
    F_star: float,
    epsilon: float = 0.01,
) -> StepsizeSelection:
    """
    Pick eta* from runs over a candidate grid.

    Args:
        traces: candidate eta -> its trace, or the traces of several seeds
        F_star: reference optimum; 0 switches to an additive tolerance
        epsilon: relative tolerance

    Returns:
        StepsizeSelection; ``fallback`` is set when no candidate passed and
        the smallest eta was returned instead
    """
    if not traces:
        raise ValidationError("no step-size candidates")
    if F_star < 0:
        raise ValidationError(f"reference optimum must be nonnegative, got {F_star}")

    tails: dict[float, float] = {}
    for eta, runs in traces.items():
        runs = [runs] if isinstance(runs, Trace) else list(runs)
        if not runs or any(r.diverged for r in runs):
            tails[eta] = math.inf
            continue
        tails[eta] = float(np.mean([tail_objective(r) for r in runs]))

    passing = [eta for eta, tail in tails.items() if passes_stability(tail, F_star, epsilon)]
    if passing:
        chosen = max(passing)
        logger.info(f"Stable step size eta*={chosen:g} (tail {tails[chosen]:.6g}, F*={F_star:.6g})")
        return StepsizeSelection(eta=chosen, fallback=False, tail_objectives=tails)

    chosen = min(tails)
    logger.warning(f"No step size within (1+{epsilon:g})*F*; falling back to eta={chosen:g}")
    return StepsizeSelection(eta=chosen, fallback=True, tail_objectives=tails)
