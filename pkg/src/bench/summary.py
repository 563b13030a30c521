"""
Summary table rebuilt from an experiment directory.

One row per (algorithm, eta) aggregating that cell's seeds, with the
stability-selected eta* of every algorithm flagged. Only files on disk are
read, so re-running ``summarize`` reproduces summary.csv exactly.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from src.diagnostics.stepsize import passes_stability, select_stable_stepsize, tail_objective
from src.diagnostics.trace import Trace, read_trace
from src.exceptions import BenchError

logger = logging.getLogger(__name__)

EXPERIMENT_FILE = "experiment.json"
TRACE_DIR = "traces"
SUMMARY_FILE = "summary.csv"
TIMING_WINDOW = 50

SUMMARY_COLUMNS = [
    "algorithm",
    "eta",
    "runs",
    "diverged",
    "tail_obj_mean",
    "tail_obj_std",
    "rel_gap",
    "final_obj_mean",
    "test_obj_mean",
    "mean_grad_corr",
    "time_per_50_iters",
    "preprocessing_s",
    "stable",
    "selected",
    "fallback",
    "abort_reasons",
]


def _time_per_window(trace: Trace) -> float:
    if not trace.records or trace.total_iterations == 0:
        return np.nan
    return trace.records[-1].wall_s / trace.total_iterations * TIMING_WINDOW


def _cell_row(algorithm: str, eta: float, runs: list[Trace], F_star: float, epsilon: float) -> dict:
    tails = np.array([np.inf if r.diverged else tail_objective(r) for r in runs])
    finite = tails[np.isfinite(tails)]
    correlations = np.concatenate([r.correlations[1:] for r in runs]) if runs else np.array([])
    tests = [r.records[-1].test_obj for r in runs if r.records and r.records[-1].test_obj is not None]
    tail_mean = float(tails.mean()) if len(finite) == len(tails) else np.inf
    return {
        "algorithm": algorithm,
        "eta": eta,
        "runs": len(runs),
        "diverged": int(sum(r.diverged for r in runs)),
        "tail_obj_mean": tail_mean,
        "tail_obj_std": float(finite.std()) if len(finite) else np.nan,
        "rel_gap": (tail_mean / F_star - 1.0) if F_star > 0 else tail_mean,
        "final_obj_mean": float(np.mean([r.final_objective for r in runs])),
        "test_obj_mean": float(np.mean(tests)) if tests else np.nan,
        "mean_grad_corr": float(np.nanmean(correlations)) if np.isfinite(correlations).any() else np.nan,
        "time_per_50_iters": float(np.nanmean([_time_per_window(r) for r in runs])),
        "preprocessing_s": float(np.mean([r.preprocessing_seconds for r in runs])),
        "stable": passes_stability(tail_mean, F_star, epsilon),
        "selected": False,
        "fallback": False,
        "abort_reasons": "; ".join(sorted({r.abort_reason for r in runs if r.abort_reason})),
    }


def load_traces(directory) -> dict[tuple[str, float], list[Trace]]:
    trace_dir = Path(directory) / TRACE_DIR
    cells: dict[tuple[str, float], list[Trace]] = {}
    for csv_path in sorted(trace_dir.glob("*.csv")):
        trace = read_trace(csv_path)
        cells.setdefault((trace.algorithm, trace.eta), []).append(trace)
    for runs in cells.values():
        runs.sort(key=lambda r: r.seed)
    return cells


def summarize(directory) -> pd.DataFrame:
    """
    Aggregate the traces under ``directory`` into ``directory/summary.csv``.

    Raises:
        BenchError: missing experiment metadata or no traces
    """
    directory = Path(directory)
    meta_path = directory / EXPERIMENT_FILE
    if not meta_path.exists():
        raise BenchError(f"{directory} has no {EXPERIMENT_FILE}")
    with open(meta_path, encoding="utf-8") as f:
        meta = json.load(f)
    F_star = float(meta["F_star"])
    epsilon = float(meta.get("epsilon", 0.01))

    cells = load_traces(directory)
    if not cells:
        raise BenchError(f"no traces found under {directory / TRACE_DIR}")

    rows = [_cell_row(alg, eta, runs, F_star, epsilon) for (alg, eta), runs in sorted(cells.items())]
    frame = pd.DataFrame(rows, columns=SUMMARY_COLUMNS)

    for algorithm in sorted({alg for alg, _ in cells}):
        candidates = {eta: runs for (alg, eta), runs in cells.items() if alg == algorithm}
        selection = select_stable_stepsize(candidates, F_star, epsilon)
        chosen = (frame["algorithm"] == algorithm) & (frame["eta"] == selection.eta)
        frame.loc[chosen, "selected"] = True
        frame.loc[chosen, "fallback"] = selection.fallback
        logger.info(f"{algorithm}: eta*={selection.eta:g}" + (" (fallback)" if selection.fallback else ""))

    frame.to_csv(directory / SUMMARY_FILE, index=False, na_rep="", float_format="%.17g")
    return frame
