"""Dataset preparation for experiments and the ``gen-data`` command."""
from __future__ import annotations

import configparser
import logging
from pathlib import Path
from typing import Optional

from src.bench.config import DataSpec, parse_sections
from src.data.dataset import Dataset, class_weights, train_test_split_dataset
from src.data.libsvm import load_libsvm, write_libsvm
from src.data.synthetic import synth_gaussian
from src.exceptions import ConfigError

logger = logging.getLogger(__name__)


def _apply_weighting(ds: Optional[Dataset], weighting: str) -> Optional[Dataset]:
    if ds is None or weighting == "uniform":
        return ds
    return ds.with_weights(class_weights(ds))


def prepare_datasets(spec: DataSpec) -> tuple[Dataset, Optional[Dataset]]:
    """
    Build the training set and the optional test set described by ``spec``.

    Weighting is applied after splitting so each part is balanced on its own.
    """
    test = None
    if spec.source == "synthetic":
        ds = synth_gaussian(
            spec.n, spec.d, spec.clusters, spec.separation, spec.seed, std=spec.std, normalize=spec.normalize
        )
    else:
        ds = load_libsvm(spec.path, normalize=spec.normalize)
        if spec.test_path:
            test = load_libsvm(spec.test_path, normalize=spec.normalize, n_features=ds.d - 1)

    if spec.test_fraction > 0:
        if test is not None:
            raise ConfigError("[data] test_path and test_fraction are mutually exclusive")
        ds, test = train_test_split_dataset(ds, spec.test_fraction, spec.seed)

    train = _apply_weighting(ds, spec.weighting)
    test = _apply_weighting(test, spec.weighting)
    logger.info(
        f"Training set: n={train.n}, d={train.d}, positives={int(train.positive.sum())}"
        + (f"; test set: n={test.n}" if test is not None else "")
    )
    return train, test


def read_data_spec(path) -> DataSpec:
    """The [data] section of a generator spec file (same keys as experiment configs)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"spec file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from e
    spec = parse_sections(parser, str(path))["data"]
    if spec.source != "synthetic":
        raise ConfigError(f"{path}: gen-data needs source = synthetic, got {spec.source!r}")
    return spec


def generate_dataset(spec_path, out_path) -> Dataset:
    """
    Generate a synthetic dataset and write it in LIBSVM format.

    With ``test_fraction`` set, the held-out part goes to ``<out>.t``.
    """
    spec = read_data_spec(spec_path)
    out_path = Path(out_path)
    ds = synth_gaussian(
        spec.n, spec.d, spec.clusters, spec.separation, spec.seed, std=spec.std, normalize=spec.normalize
    )
    if spec.test_fraction > 0:
        ds, test = train_test_split_dataset(ds, spec.test_fraction, spec.seed)
        write_libsvm(test, out_path.with_name(out_path.name + ".t"))
    write_libsvm(ds, out_path)
    return ds
