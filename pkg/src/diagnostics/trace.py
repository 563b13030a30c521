"""
Optimizer traces and their on-disk form.

A trace is a list of checkpoint records plus run metadata. On disk it is a
CSV with the fixed header ``iter,wall_s,train_obj,test_obj,grad_corr,est_var``
(missing optionals as empty fields) and a JSON sidecar holding the metadata.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import pandas as pd

from src.exceptions import BenchError, ValidationError

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["iter", "wall_s", "train_obj", "test_obj", "grad_corr", "est_var"]


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    wall_s: float
    train_obj: float
    test_obj: Optional[float] = None
    grad_corr: Optional[float] = None
    est_var: Optional[float] = None


@dataclass
class Trace:
    algorithm: str
    eta: float
    seed: int
    records: list[TraceRecord] = field(default_factory=list)
    config: dict[str, Any] = field(default_factory=dict)
    diverged: bool = False
    abort_reason: Optional[str] = None
    preprocessing_seconds: float = 0.0
    total_iterations: int = 0
    final_w: Optional[np.ndarray] = field(default=None, repr=False)
    iterates: Optional[list[np.ndarray]] = field(default=None, repr=False)

    def append(self, record: TraceRecord) -> None:
        if self.records:
            last = self.records[-1]
            if record.iteration <= last.iteration:
                raise ValidationError(f"checkpoint {record.iteration} does not follow {last.iteration}")
            if record.wall_s < last.wall_s:
                raise ValidationError("wall time went backwards")
        self.records.append(record)

    def mark_diverged(self, reason: str) -> None:
        self.diverged = True
        self.abort_reason = reason
        logger.warning(f"{self.algorithm} eta={self.eta:g} seed={self.seed}: aborted, {reason}")

    @property
    def iterations(self) -> np.ndarray:
        return np.array([r.iteration for r in self.records], dtype=np.int64)

    @property
    def train_objectives(self) -> np.ndarray:
        return np.array([r.train_obj for r in self.records], dtype=np.float64)

    @property
    def correlations(self) -> np.ndarray:
        return np.array([np.nan if r.grad_corr is None else r.grad_corr for r in self.records])

    @property
    def final_objective(self) -> float:
        return self.records[-1].train_obj if self.records else math.nan

    def to_frame(self) -> pd.DataFrame:
        rows = [
            (r.iteration, r.wall_s, r.train_obj, r.test_obj, r.grad_corr, r.est_var)
            for r in self.records
        ]
        frame = pd.DataFrame(rows, columns=TRACE_COLUMNS)
        return frame.astype({"iter": "int64"})

    def metadata(self) -> dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "eta": self.eta,
            "seed": self.seed,
            "diverged": self.diverged,
            "abort_reason": self.abort_reason,
            "preprocessing_seconds": self.preprocessing_seconds,
            "total_iterations": self.total_iterations,
            "config": self.config,
        }


def trace_stem(algorithm: str, eta: float, seed: int) -> str:
    return f"{algorithm}_eta{eta:g}_seed{seed}"


def _optional(value) -> Optional[float]:
    return None if pd.isna(value) else float(value)


def write_trace(trace: Trace, directory: Path) -> Path:
    """Write ``<stem>.csv`` and ``<stem>.json``; returns the CSV path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    stem = trace_stem(trace.algorithm, trace.eta, trace.seed)
    csv_path = directory / f"{stem}.csv"
    # repr-precision floats so re-reading reproduces every value exactly
    trace.to_frame().to_csv(csv_path, index=False, na_rep="", float_format="%.17g")
    with open(directory / f"{stem}.json", "w", encoding="utf-8") as f:
        json.dump(trace.metadata(), f, indent=2, sort_keys=True, default=str)
    logger.debug(f"Trace written: {csv_path}")
    return csv_path


def read_trace(csv_path: Path) -> Trace:
    csv_path = Path(csv_path)
    sidecar = csv_path.with_suffix(".json")
    if not sidecar.exists():
        raise BenchError(f"trace {csv_path.name} has no metadata sidecar")
    with open(sidecar, encoding="utf-8") as f:
        meta = json.load(f)

    frame = pd.read_csv(csv_path)
    if list(frame.columns) != TRACE_COLUMNS:
        raise BenchError(f"{csv_path.name}: unexpected header {list(frame.columns)}")

    trace = Trace(
        algorithm=meta["algorithm"],
        eta=float(meta["eta"]),
        seed=int(meta["seed"]),
        config=meta.get("config", {}),
        diverged=bool(meta.get("diverged", False)),
        abort_reason=meta.get("abort_reason"),
        preprocessing_seconds=float(meta.get("preprocessing_seconds", 0.0)),
        total_iterations=int(meta.get("total_iterations", 0)),
    )
    for row in frame.itertuples(index=False):
        trace.records.append(
            TraceRecord(
                iteration=int(row.iter),
                wall_s=float(row.wall_s),
                train_obj=float(row.train_obj),
                test_obj=_optional(row.test_obj),
                grad_corr=_optional(row.grad_corr),
                est_var=_optional(row.est_var),
            )
        )
    return trace

