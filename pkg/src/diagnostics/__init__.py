from src.diagnostics.metrics import Correlation, VarianceEstimate, estimator_variance, pearson_correlation
from src.diagnostics.stepsize import StepsizeSelection, select_stable_stepsize, tail_objective
from src.diagnostics.trace import TRACE_COLUMNS, Trace, TraceRecord, read_trace, write_trace

__all__ = [
    "Correlation",
    "VarianceEstimate",
    "estimator_variance",
    "pearson_correlation",
    "StepsizeSelection",
    "select_stable_stepsize",
    "tail_objective",
    "TRACE_COLUMNS",
    "Trace",
    "TraceRecord",
    "read_trace",
    "write_trace",
]
