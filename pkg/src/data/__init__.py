from .dataset import Dataset, class_weights, train_test_split_dataset, uniform_weights
from .libsvm import load_libsvm, write_libsvm
from .synthetic import synth_gaussian

__all__ = [
    "Dataset",
    "class_weights",
    "load_libsvm",
    "synth_gaussian",
    "train_test_split_dataset",
    "uniform_weights",
    "write_libsvm",
]
