"""
Experiment runner: one optimizer run per (algorithm, eta, seed).

Shared preprocessing (data, reference optimum, anchor model) happens once
in the parent; the runs execute through joblib and each writes only its own
trace files. The summary is rebuilt from disk afterwards.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Optional

from joblib import Parallel, delayed

from config.settings import get_worker_count
from src.anchors.propagation import AnchorModel, build_anchor_model
from src.bench.config import ExperimentConfig
from src.bench.io import prepare_datasets
from src.bench.summary import EXPERIMENT_FILE, TRACE_DIR, summarize
from src.data.dataset import Dataset
from src.diagnostics.trace import write_trace
from src.optim import make_optimizer, minimize_composite

logger = logging.getLogger(__name__)


def _execute_run(
    cfg: ExperimentConfig,
    algorithm: str,
    eta: float,
    seed: int,
    train: Dataset,
    test: Optional[Dataset],
    anchor_model: Optional[AnchorModel],
    trace_dir: Path,
) -> Path:
    run_cfg = cfg.run_config(algorithm, eta, seed)
    optimizer = make_optimizer(run_cfg, train, cfg.loss, cfg.regularizer, test, anchor_model=anchor_model)
    trace = optimizer.run()
    return write_trace(trace, trace_dir)


def run_experiment(cfg: ExperimentConfig, output_dir=None) -> Path:
    """
    Run every configured (algorithm, eta, seed) and write traces plus summary.csv.

    Args:
        cfg: validated experiment configuration
        output_dir: overrides ``cfg.output.dir``

    Returns:
        the output directory
    """
    out = Path(output_dir or cfg.output.dir)
    trace_dir = out / TRACE_DIR
    trace_dir.mkdir(parents=True, exist_ok=True)

    train, test = prepare_datasets(cfg.data)
    loss, reg = cfg.loss, cfg.regularizer

    reference = minimize_composite(train, loss, reg)

    anchor_model = None
    if "s3gd" in cfg.run.algorithms:
        anchors = cfg.anchors
        anchor_model = build_anchor_model(
            train,
            m=anchors.m,
            k=anchors.k,
            seed=anchors.seed,
            max_iter=anchors.kmeans_iter,
            sigma_rule=anchors.sigma_rule,
        )

    metadata = {
        "F_star": reference.F,
        "solver_converged": reference.converged,
        "solver_grad_map_norm": reference.grad_map_norm,
        "epsilon": cfg.run.epsilon,
        "n": train.n,
        "d": train.d,
        "anchor_preprocessing_seconds": anchor_model.preprocessing_seconds if anchor_model else None,
        "config": cfg.echo(),
    }
    with open(out / EXPERIMENT_FILE, "w", encoding="utf-8") as f:
        json.dump(metadata, f, indent=2, sort_keys=True, default=str)

    jobs = [
        (algorithm, eta, seed)
        for algorithm in cfg.run.algorithms
        for eta in cfg.run.etas
        for seed in cfg.run.seed_list
    ]
    workers = get_worker_count(cfg.output.workers)
    logger.info(f"Running {len(jobs)} runs on {workers} worker(s) into {out}")

    Parallel(n_jobs=workers)(
        delayed(_execute_run)(cfg, algorithm, eta, seed, train, test, anchor_model, trace_dir)
        for algorithm, eta, seed in jobs
    )

    summarize(out)
    return out
