"""
Experiment configuration files.

INI-style ``key = value`` files with the sections [data], [model],
[anchors], [run] and [output]. Every key has a default; unknown sections
or keys are rejected so typos fail loudly.

Example:

    [data]
    source = synthetic
    n = 2000
    d = 20
    clusters = 10

    [run]
    algorithms = sgd, svrg, s3gd
    etas = 0.1, 1, 5, 10
"""
from __future__ import annotations

import configparser
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

from config.settings import DEFAULT_OUTPUT_DIR
from src.exceptions import ConfigError, ValidationError
from src.models.loss import LossModel
from src.models.prox import Regularizer
from src.optim.base import ALGORITHMS, DEFAULT_K_IN, RunConfig

logger = logging.getLogger(__name__)

DATA_SOURCES = ("synthetic", "libsvm")
WEIGHTINGS = ("uniform", "class")


@dataclass(frozen=True)
class DataSpec:
    source: str = "synthetic"
    path: Optional[str] = None
    test_path: Optional[str] = None
    n: int = 2000
    d: int = 20
    clusters: int = 10
    separation: float = 4.0
    std: float = 1.0
    seed: int = 0
    test_fraction: float = 0.0
    normalize: bool = False
    weighting: str = "uniform"


@dataclass(frozen=True)
class ModelSpec:
    loss: str = "logistic"
    beta: float = 10.0
    regularizer: str = "tikhonov"
    lam: float = 1e-3
    alpha: float = 0.5


@dataclass(frozen=True)
class AnchorSpec:
    m: int = 100
    k: int = 3
    sigma_rule: str = "as-printed"
    kmeans_iter: int = 100
    seed: int = 0


@dataclass(frozen=True)
class RunSpec:
    algorithms: tuple[str, ...] = ALGORITHMS
    etas: tuple[float, ...] = (0.1, 1.0, 5.0, 10.0)
    seeds: tuple[int, ...] = ()
    trials: int = 5
    p: int = 10
    k_in_s3gd: int = DEFAULT_K_IN["s3gd"]
    k_in_svrg: int = DEFAULT_K_IN["svrg"]
    max_iters: int = 20000
    checkpoint_every: int = 50
    snapshot: str = "last"
    scv_order: int = 0
    track_correlation: bool = True
    variance_trials: int = 0
    epsilon: float = 0.01

    @property
    def seed_list(self) -> tuple[int, ...]:
        return self.seeds if self.seeds else tuple(range(self.trials))


@dataclass(frozen=True)
class OutputSpec:
    dir: str = DEFAULT_OUTPUT_DIR
    workers: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    data: DataSpec = field(default_factory=DataSpec)
    model: ModelSpec = field(default_factory=ModelSpec)
    anchors: AnchorSpec = field(default_factory=AnchorSpec)
    run: RunSpec = field(default_factory=RunSpec)
    output: OutputSpec = field(default_factory=OutputSpec)

    @property
    def loss(self) -> LossModel:
        return LossModel(self.model.loss, self.model.beta)

    @property
    def regularizer(self) -> Regularizer:
        return Regularizer(self.model.regularizer, self.model.lam, self.model.alpha)

    def run_config(self, algorithm: str, eta: float, seed: int) -> RunConfig:
        run, anchors = self.run, self.anchors
        k_in = {"s3gd": run.k_in_s3gd, "svrg": run.k_in_svrg}.get(algorithm)
        return RunConfig(
            algorithm=algorithm,
            eta=eta,
            p=run.p,
            k_in=k_in,
            max_iters=run.max_iters,
            seed=seed,
            checkpoint_every=run.checkpoint_every,
            snapshot=run.snapshot,
            anchor_m=anchors.m,
            anchor_k=anchors.k,
            sigma_rule=anchors.sigma_rule,
            kmeans_iter=anchors.kmeans_iter,
            scv_order=run.scv_order,
            track_correlation=run.track_correlation,
            variance_trials=run.variance_trials,
        )

    def validate(self) -> "ExperimentConfig":
        data, run = self.data, self.run
        if data.source not in DATA_SOURCES:
            raise ConfigError(f"[data] source must be one of {DATA_SOURCES}, got {data.source!r}")
        if data.source == "libsvm" and not data.path:
            raise ConfigError("[data] path is required for source = libsvm")
        if data.weighting not in WEIGHTINGS:
            raise ConfigError(f"[data] weighting must be one of {WEIGHTINGS}, got {data.weighting!r}")
        if not 0.0 <= data.test_fraction < 1.0:
            raise ConfigError(f"[data] test_fraction must lie in [0, 1), got {data.test_fraction}")
        if not run.algorithms:
            raise ConfigError("[run] algorithms is empty")
        unknown = [a for a in run.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ConfigError(f"[run] unknown algorithms {unknown}, expected a subset of {ALGORITHMS}")
        if not run.etas:
            raise ConfigError("[run] etas is empty")
        if not run.seed_list:
            raise ConfigError("[run] needs seeds or trials >= 1")
        if not 0 < run.epsilon:
            raise ConfigError(f"[run] epsilon must be positive, got {run.epsilon}")
        if self.anchors.m < 1 or self.anchors.k < 1:
            raise ConfigError("[anchors] m and k must be >= 1")
        if self.output.workers < 1:
            raise ConfigError("[output] workers must be >= 1")
        try:
            LossModel(self.model.loss, self.model.beta)
            Regularizer(self.model.regularizer, self.model.lam, self.model.alpha)
            for algorithm in run.algorithms:
                for eta in run.etas:
                    self.run_config(algorithm, eta, run.seed_list[0]).validate()
        except ValidationError as e:
            raise ConfigError(str(e)) from e
        return self

    def echo(self) -> dict[str, Any]:
        return asdict(self)


SECTIONS = {
    "data": DataSpec,
    "model": ModelSpec,
    "anchors": AnchorSpec,
    "run": RunSpec,
    "output": OutputSpec,
}


def _parse_bool(raw: str) -> bool:
    value = raw.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _split(raw: str) -> list[str]:
    return [item.strip() for item in raw.replace(";", ",").split(",") if item.strip()]


def _convert(spec_cls, name: str, raw: str):
    default = next(f for f in fields(spec_cls) if f.name == name).default
    if isinstance(default, bool):
        return _parse_bool(raw)
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        items = _split(raw)
        if name == "etas":
            return tuple(float(x) for x in items)
        if name == "seeds":
            return tuple(int(x) for x in items)
        return tuple(x.lower().replace("-", "_") if name == "algorithms" else x for x in items)
    value = raw.strip()
    if default is None:
        return value or None
    return value


def parse_sections(parser: configparser.ConfigParser, source: str) -> dict[str, Any]:
    specs = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"{source}: unknown section [{section}]")
    for section, spec_cls in SECTIONS.items():
        known = {f.name for f in fields(spec_cls)}
        values = {}
        if parser.has_section(section):
            for key, raw in parser.items(section):
                if key not in known:
                    raise ConfigError(f"{source}: unknown key {key!r} in [{section}]")
                try:
                    values[key] = _convert(spec_cls, key, raw)
                except ValueError as e:
                    raise ConfigError(f"{source}: [{section}] {key}: {e}") from e
        specs[section] = replace(spec_cls(), **values)
    return specs


def load_config(path) -> ExperimentConfig:
    """
    Read and validate an experiment file.

    Raises:
        ConfigError: missing file, syntax error, unknown key or invalid value
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from e

    cfg = ExperimentConfig(**parse_sections(parser, str(path))).validate()
    logger.info(
        f"Config {path.name}: algorithms={list(cfg.run.algorithms)}, etas={list(cfg.run.etas)}, "
        f"seeds={list(cfg.run.seed_list)}"
    )
    return cfg
