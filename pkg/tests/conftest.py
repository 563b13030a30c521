import numpy as np
import pytest

from src.data.dataset import Dataset, append_intercept, class_weights, uniform_weights
from src.data.synthetic import synth_gaussian
from src.models.loss import LossModel
from src.models.prox import Regularizer

LOSSES = [LossModel("logistic"), LossModel("squared_hinge"), LossModel("smoothed_hinge", beta=10.0)]


def random_dataset(n: int, d: int, seed: int, weighted: bool = False) -> Dataset:
    """Mixed-label Gaussian samples with an intercept row (d includes it)."""
    rng = np.random.default_rng(seed)
    samples = rng.normal(size=(n, d - 1))
    labels = np.where(rng.random(n) < 0.4, 1.0, -1.0)
    labels[0], labels[1] = 1.0, -1.0
    ds = Dataset(append_intercept(samples), labels, uniform_weights(n))
    return ds.with_weights(class_weights(ds)) if weighted else ds


@pytest.fixture
def small_ds():
    return random_dataset(50, 10, seed=1)


@pytest.fixture
def weighted_ds():
    return random_dataset(500, 10, seed=2, weighted=True)


@pytest.fixture
def clustered_ds():
    return synth_gaussian(n=400, d=5, clusters=4, separation=4.0, seed=3, normalize=True)


@pytest.fixture
def logistic():
    return LossModel("logistic")


@pytest.fixture
def tikhonov():
    return Regularizer("tikhonov", lam=1e-3)
