"""
LIBSVM text format reader/writer.

Lines look like ``label idx:val idx:val ...`` with 1-based ascending indices.
Parsing itself is delegated to scikit-learn; when it rejects a file the
offending line is located so the error can name it.
"""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
from sklearn.datasets import dump_svmlight_file, load_svmlight_file

from src.data.dataset import Dataset, append_intercept, uniform_weights, unit_normalize
from src.exceptions import DatasetFormatError, ValidationError

logger = logging.getLogger(__name__)


def _content_lines(path: Path):
    with open(path, "r", encoding="utf-8") as f:
        for number, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield number, line


def _locate_bad_line(path: Path) -> tuple[int, str] | None:
    """First line that is not ``label idx:val ...`` with ascending 1-based indices."""
    for number, line in _content_lines(path):
        tokens = line.split()
        try:
            float(tokens[0])
        except ValueError:
            return number, f"bad label {tokens[0]!r}"
        previous = 0
        for token in tokens[1:]:
            idx, sep, val = token.partition(":")
            if not sep:
                return number, f"expected idx:val, got {token!r}"
            try:
                index = int(idx)
                float(val)
            except ValueError:
                return number, f"bad pair {token!r}"
            if index <= previous:
                return number, f"indices must be 1-based and ascending at {token!r}"
            previous = index
    return None


def load_libsvm(path, normalize: bool = False, classification: bool = True, n_features: int | None = None) -> Dataset:
    """
    Load a LIBSVM file into a Dataset.

    The feature dimension is the largest index seen; absent entries are
    zero. A constant-1 intercept dimension is appended and weights are
    uniform 1/n.

    Args:
        path: file path
        normalize: scale every sample (intercept excluded) to unit norm
        classification: require labels in {+1, -1}
        n_features: fix the feature count (intercept excluded), e.g. to match a training file

    Returns:
        Dataset with d = max index + 1 (intercept)

    Raises:
        DatasetFormatError: malformed line (the message carries the line number) or no samples
        ValidationError: non +1/-1 label in classification mode
    """
    path = Path(path)
    if not any(True for _ in _content_lines(path)):
        raise DatasetFormatError("no samples")

    try:
        X, y = load_svmlight_file(str(path), n_features=n_features, zero_based=False, dtype=np.float64)
    except ValueError as e:
        located = _locate_bad_line(path)
        if located is not None:
            line, reason = located
            raise DatasetFormatError(reason, line=line) from e
        raise DatasetFormatError(str(e)) from e

    if classification and not np.all(np.isin(y, (-1.0, 1.0))):
        bad = np.unique(y[~np.isin(y, (-1.0, 1.0))])
        raise ValidationError(f"labels must be +1/-1 in classification mode, found {bad[:5].tolist()}")

    samples = X.toarray()
    if normalize:
        samples = unit_normalize(samples)
    n = samples.shape[0]
    ds = Dataset(append_intercept(samples), y, uniform_weights(n), has_intercept=True)
    logger.info(
        f"Loaded {path.name}: n={ds.n}, d={ds.d} (with intercept), "
        f"positives={int(ds.positive.sum())}, negatives={int(ds.negative.sum())}"
    )
    return ds


def write_libsvm(ds: Dataset, path) -> None:
    """Write features and labels in LIBSVM format; the intercept row is not serialized."""
    features = ds.features[:-1] if ds.has_intercept else ds.features
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dump_svmlight_file(features.T, ds.labels.astype(np.int64), str(path), zero_based=False)
    logger.info(f"Wrote {ds.n} samples to {path}")
