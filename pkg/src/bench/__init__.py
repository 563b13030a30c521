from src.bench.config import ExperimentConfig, load_config
from src.bench.io import generate_dataset, prepare_datasets
from src.bench.runner import run_experiment
from src.bench.summary import summarize

__all__ = [
    "ExperimentConfig",
    "generate_dataset",
    "load_config",
    "prepare_datasets",
    "run_experiment",
    "summarize",
]
