import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.spatial.distance import cdist
from sklearn.datasets import make_blobs

from src.anchors.graph import AnchorSet, build_asg, kernel_width, select_anchors
from src.anchors.kmeans import kmeans
from src.anchors.propagation import build_anchor_model, exact_anchor_model, precompute_propagation
from src.data.dataset import Dataset, append_intercept, uniform_weights
from src.exceptions import ValidationError
from tests.conftest import random_dataset


def _points(coords) -> Dataset:
    """Dataset without intercept whose samples are the given rows."""
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    n = coords.shape[0]
    labels = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    return Dataset(coords.T, labels, uniform_weights(n), has_intercept=False)


# ── k-means ─────────────────────────────────────────────────────────────────


def test_kmeans_with_m_equal_n_returns_the_samples():
    ds = random_dataset(12, 4, seed=30)
    result = kmeans(ds, ds.n, seed=0)
    assert_allclose(cdist(result.centers.T, ds.samples).min(axis=1), 0.0, atol=1e-12)
    assert len(np.unique(result.labels)) == ds.n
    assert result.inertia == pytest.approx(0.0, abs=1e-20)


def test_kmeans_recovers_separated_blobs():
    samples, component = make_blobs(n_samples=300, centers=[[0, 0], [50, 0], [0, 50]], cluster_std=1.0, random_state=4)
    ds = _points(samples)
    labels = kmeans(ds, 3, seed=1).labels
    for c in range(3):
        assert len(np.unique(labels[component == c])) == 1
    assert len(np.unique(labels)) == 3


def test_kmeans_is_deterministic(clustered_ds):
    a = kmeans(clustered_ds, 8, seed=5)
    b = kmeans(clustered_ds, 8, seed=5)
    assert_array_equal(a.centers, b.centers)
    assert_array_equal(a.labels, b.labels)


def test_kmeans_inertia_never_increases(clustered_ds):
    history = np.array(kmeans(clustered_ds, 10, seed=2).inertia_history)
    assert np.all(np.diff(history) <= 1e-9 * history[0])


def test_kmeans_rejects_too_many_clusters():
    with pytest.raises(ValidationError):
        kmeans(random_dataset(5, 3, seed=0), 6)
    with pytest.raises(ValidationError):
        kmeans(random_dataset(5, 3, seed=0), 0)


# ── anchor selection ────────────────────────────────────────────────────────


def test_select_anchors_breaks_ties_by_lowest_index():
    ds = _points([[-1.0], [1.0], [4.0]])
    anchors = select_anchors(ds, np.array([[0.0]]))
    assert_array_equal(anchors.source_indices, [0])
    assert_array_equal(anchors.vectors, [[-1.0]])


def test_select_anchors_skips_used_samples():
    ds = _points([[0.0], [1.0], [5.0]])
    anchors = select_anchors(ds, np.array([[0.1, 0.2]]))
    assert_array_equal(anchors.source_indices, [0, 1])


def test_select_anchors_rejects_bad_centers():
    ds = _points([[0.0], [1.0]])
    with pytest.raises(ValidationError):
        select_anchors(ds, np.array([[np.nan]]))
    with pytest.raises(ValidationError):
        select_anchors(ds, np.zeros((1, 3)))


# ── anchor-sample graph ─────────────────────────────────────────────────────


def test_asg_with_one_neighbor_has_unit_coefficients(clustered_ds):
    model = build_anchor_model(clustered_ds, m=20, k=1, seed=0)
    assert_array_equal(model.asg.coefficients, 1.0)


def test_asg_sample_on_an_anchor():
    ds = _points([[0.0], [3.0]])
    anchors = AnchorSet(vectors=np.array([[0.0, 3.0]]), source_indices=np.array([0, 1]))
    asg = build_asg(ds, anchors, k=2)
    assert_array_equal(asg.neighbor_indices[0], [0, 1])
    assert_allclose(asg.coefficients[0], [1.0, 0.0], atol=1e-300)


def test_asg_rows_are_normalized(clustered_ds):
    model = build_anchor_model(clustered_ds, m=30, k=3, seed=0)
    M = model.asg.to_csr()
    assert M.shape == (clustered_ds.n, 30)
    assert M.nnz == clustered_ds.n * 3
    assert_allclose(np.asarray(M.sum(axis=1)).ravel(), 1.0)
    assert np.all(model.asg.coefficients >= 0)


def test_asg_rejects_bad_k(clustered_ds):
    model = build_anchor_model(clustered_ds, m=5, k=2, seed=0)
    with pytest.raises(ValidationError):
        build_asg(clustered_ds, model.anchors, k=6)
    with pytest.raises(ValidationError):
        build_asg(clustered_ds, model.anchors, k=0)


def test_kernel_width_rules():
    distances = np.array([[4.0, 9.0], [0.0, 1.0]])
    assert_allclose(kernel_width(distances, "as-printed"), [2.0, 1e-4])
    assert_allclose(kernel_width(distances, "unrooted"), [4.0, 1e-4])
    with pytest.raises(ValidationError):
        kernel_width(distances, "median")


def test_anchors_are_training_samples(clustered_ds):
    model = build_anchor_model(clustered_ds, m=25, k=3, seed=1)
    assert len(np.unique(model.anchors.source_indices)) == 25
    assert_array_equal(model.anchors.vectors, clustered_ds.features[:, model.anchors.source_indices])


# ── propagation cache ───────────────────────────────────────────────────────


def test_cache_matches_dense_products():
    ds = random_dataset(120, 6, seed=31, weighted=True)
    model = build_anchor_model(ds, m=15, k=3, seed=0)
    M = model.asg.to_csr().toarray()
    X = ds.features * ds.weights
    pos, neg = ds.positive, ds.negative

    assert_allclose(model.cache.xm_pos, X[:, pos] @ M[pos], atol=1e-12)
    assert_allclose(model.cache.xm_neg, X[:, neg] @ M[neg], atol=1e-12)
    assert_allclose(model.cache.xm, X @ M, atol=1e-12)
    assert_allclose(model.cache.neg_correction, -X[:, neg].sum(axis=1), atol=1e-12)
    assert_array_equal(model.cache.weights_used, ds.weights)


def test_cache_with_a_single_class():
    rng = np.random.default_rng(32)
    ds = Dataset(append_intercept(rng.normal(size=(40, 3))), np.ones(40), uniform_weights(40))
    model = build_anchor_model(ds, m=6, k=2, seed=0)
    assert model.cache.xm_neg.shape == (ds.d, 6)
    assert_array_equal(model.cache.xm_neg, 0.0)
    assert_array_equal(model.cache.neg_correction, 0.0)


def test_cache_rejects_foreign_graph(clustered_ds):
    model = build_anchor_model(clustered_ds, m=10, k=2, seed=0)
    with pytest.raises(ValidationError):
        precompute_propagation(clustered_ds.subset(np.arange(100)), model.asg)


def test_exact_anchor_model_is_identity(small_ds):
    model = exact_anchor_model(small_ds)
    assert model.anchors.m == small_ds.n
    assert_array_equal(model.asg.to_csr().toarray(), np.eye(small_ds.n))


def test_anchor_count_is_capped_by_n():
    ds = random_dataset(8, 3, seed=33)
    model = build_anchor_model(ds, m=50, k=3, seed=0)
    assert model.anchors.m == 8
    assert model.preprocessing_seconds >= 0
