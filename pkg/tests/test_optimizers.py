import math
import time

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from src.anchors.propagation import build_anchor_model, exact_anchor_model
from src.data.dataset import Dataset, append_intercept, uniform_weights
from src.data.synthetic import synth_gaussian
from src.diagnostics.stepsize import select_stable_stepsize, tail_objective
from src.exceptions import StaleCacheError, ValidationError
from src.models.loss import LossModel, smoothness
from src.models.prox import Regularizer
from src.optim import (
    OPTIMIZERS,
    ProxSVRG,
    RunConfig,
    S3GD,
    make_optimizer,
    minimize_composite,
    run_s3gd,
    run_scv,
    run_sgd,
    run_ssgd,
    run_svrg,
)
from src.optim.gradients import full_gradient, make_snapshot
from src.optim.scv import ControlVariate
from src.optim.sgd import WeightedSampler, weighted_sgd_gradient
from src.optim.ssgd import build_strata, stratified_estimator
from tests.conftest import random_dataset


def _cfg(algorithm, **overrides):
    base = dict(algorithm=algorithm, eta=0.2, p=5, max_iters=60, seed=3, checkpoint_every=10, anchor_m=12, anchor_k=3)
    base.update(overrides)
    return RunConfig(**base)


@pytest.mark.parametrize("algorithm", sorted(OPTIMIZERS))
def test_runs_are_deterministic(algorithm, small_ds, logistic, tikhonov):
    first = make_optimizer(_cfg(algorithm), small_ds, logistic, tikhonov).run()
    second = make_optimizer(_cfg(algorithm), small_ds, logistic, tikhonov).run()
    assert_array_equal(first.train_objectives, second.train_objectives)
    assert_array_equal(first.final_w, second.final_w)


@pytest.mark.parametrize("algorithm, runner", [
    ("sgd", run_sgd), ("ssgd", run_ssgd), ("svrg", run_svrg), ("scv", run_scv),
])
def test_run_functions_match_optimizer_classes(algorithm, runner, small_ds, logistic, tikhonov):
    w0 = np.full(small_ds.d, 0.1)
    direct = runner(_cfg(algorithm), small_ds, logistic, tikhonov, w0=w0)
    via_class = make_optimizer(_cfg(algorithm), small_ds, logistic, tikhonov).run(w0)
    assert_array_equal(direct.final_w, via_class.final_w)
    assert direct.algorithm == algorithm


@pytest.mark.parametrize("algorithm", sorted(OPTIMIZERS))
def test_zero_step_keeps_the_initial_point(algorithm, small_ds, logistic, tikhonov):
    w0 = np.linspace(-0.5, 0.5, small_ds.d)
    trace = make_optimizer(_cfg(algorithm, eta=0.0, max_iters=15), small_ds, logistic, tikhonov).run(w0)
    assert_array_equal(trace.final_w, w0)
    assert np.all(trace.train_objectives == trace.train_objectives[0])


@pytest.mark.parametrize("algorithm", sorted(OPTIMIZERS))
def test_objective_decreases(algorithm, clustered_ds, logistic, tikhonov):
    trace = make_optimizer(_cfg(algorithm, eta=0.5, max_iters=200), clustered_ds, logistic, tikhonov).run()
    assert not trace.diverged
    assert trace.final_objective < trace.train_objectives[0]


def test_l1_produces_exact_zeros(small_ds, logistic):
    reg = Regularizer("l1", lam=0.2)
    trace = make_optimizer(_cfg("svrg", eta=0.5, max_iters=200), small_ds, logistic, reg).run()
    assert np.count_nonzero(trace.final_w[:-1] == 0.0) > 0


def test_checkpoint_schedule(small_ds, logistic, tikhonov):
    trace = make_optimizer(_cfg("sgd", max_iters=25), small_ds, logistic, tikhonov).run()
    assert_array_equal(trace.iterations, [0, 10, 20, 25])
    assert trace.total_iterations == 25
    assert trace.records[0].wall_s == 0.0
    assert np.all(np.diff([r.wall_s for r in trace.records]) >= 0)


def test_test_objective_and_correlation_are_recorded(small_ds, logistic, tikhonov):
    test = random_dataset(30, small_ds.d, seed=50)
    cfg = _cfg("s3gd", track_correlation=True, variance_trials=4)
    trace = make_optimizer(cfg, small_ds, logistic, tikhonov, test=test).run()
    first, later = trace.records[0], trace.records[1:]
    assert first.grad_corr is None and first.est_var is None
    assert all(r.test_obj is not None for r in trace.records)
    assert all(-1.0 <= r.grad_corr <= 1.0 for r in later)
    assert all(r.est_var >= 0 for r in later)


def test_diagnostics_do_not_change_the_trajectory(small_ds, logistic, tikhonov):
    plain = make_optimizer(_cfg("svrg"), small_ds, logistic, tikhonov).run()
    traced = make_optimizer(_cfg("svrg", track_correlation=True, variance_trials=3), small_ds, logistic, tikhonov).run()
    assert_array_equal(plain.final_w, traced.final_w)


def test_s3gd_matches_svrg_with_exact_anchors(small_ds, logistic, tikhonov):
    cfg = dict(eta=0.3, p=4, k_in=7, max_iters=2000, seed=11, checkpoint_every=100, record_iterates=True)
    svrg = ProxSVRG(RunConfig(algorithm="svrg", **cfg), small_ds, logistic, tikhonov).run()
    s3gd = S3GD(RunConfig(algorithm="s3gd", **cfg), small_ds, logistic, tikhonov,
                anchor_model=exact_anchor_model(small_ds)).run()
    assert len(s3gd.iterates) == len(svrg.iterates) == 2000
    # equal up to summation order
    assert_allclose(np.array(s3gd.iterates), np.array(svrg.iterates), rtol=0, atol=1e-12)
    assert_allclose(s3gd.train_objectives, svrg.train_objectives, rtol=1e-12)


def test_first_snapshot_uses_the_initial_point(clustered_ds, logistic, tikhonov):
    opt = S3GD(_cfg("s3gd", max_iters=1), clustered_ds, logistic, tikhonov)
    opt.run()
    assert_array_equal(opt.snapshot.w_tilde, 0.0)
    assert_array_equal(opt.snapshot.anchor_derivs, 0.5)


def test_best_snapshot_restarts_from_lowest_objective(small_ds, logistic, tikhonov):
    opt = ProxSVRG(_cfg("svrg", k_in=2, snapshot="best"), small_ds, logistic, tikhonov)
    opt.setup()
    good, bad = np.zeros(small_ds.d), np.full(small_ds.d, 5.0)
    assert opt.begin_iteration(bad, 1) is bad
    opt.end_iteration(good, 1)
    opt.end_iteration(bad, 2)
    restart = opt.begin_iteration(bad, 3)
    assert_array_equal(restart, good)
    assert_array_equal(opt.w_tilde, good)


def test_last_snapshot_keeps_the_current_iterate(small_ds, logistic, tikhonov):
    opt = ProxSVRG(_cfg("svrg", k_in=2), small_ds, logistic, tikhonov)
    w = np.full(small_ds.d, 0.3)
    opt.begin_iteration(np.zeros(small_ds.d), 1)
    assert opt.begin_iteration(w, 2) is w
    assert_array_equal(opt.begin_iteration(w, 3), w)
    assert_array_equal(opt.w_tilde, w)


def test_divergence_is_flagged(small_ds, logistic):
    trace = make_optimizer(_cfg("sgd", eta=1e6, checkpoint_every=1), small_ds, logistic, Regularizer("l1", lam=0.0)).run()
    assert trace.diverged
    assert "exceeded" in trace.abort_reason or "non-finite" in trace.abort_reason
    assert trace.total_iterations < 60


def test_initial_point_shape_is_checked(small_ds, logistic, tikhonov):
    with pytest.raises(ValidationError):
        make_optimizer(_cfg("sgd"), small_ds, logistic, tikhonov).run(np.zeros(small_ds.d + 1))


def test_run_config_validation():
    with pytest.raises(ValidationError):
        RunConfig(algorithm="adam").validate()
    with pytest.raises(ValidationError):
        RunConfig(eta=-1.0).validate()
    with pytest.raises(ValidationError):
        RunConfig(variance_trials=1).validate()
    with pytest.raises(ValidationError):
        RunConfig(algorithm="svrg", k_in=0).validate()
    assert RunConfig(algorithm="svrg").inner_length == 50
    assert RunConfig(algorithm="s3gd").inner_length == 20


def test_make_optimizer_dispatches(small_ds, logistic, tikhonov):
    for name, cls in OPTIMIZERS.items():
        assert type(make_optimizer(_cfg(name), small_ds, logistic, tikhonov)) is cls


def test_run_s3gd_rejects_cache_with_other_weights(logistic, tikhonov):
    uniform = random_dataset(80, 4, seed=51)
    weighted = random_dataset(80, 4, seed=51, weighted=True)
    model = build_anchor_model(uniform, m=8, k=2, seed=0)
    with pytest.raises(StaleCacheError):
        run_s3gd(_cfg("s3gd"), weighted, logistic, tikhonov, model.asg, model.cache)


def test_run_s3gd_reports_preprocessing(small_ds, logistic, tikhonov):
    model = build_anchor_model(small_ds, m=8, k=2, seed=0)
    trace = run_s3gd(_cfg("s3gd", max_iters=5), small_ds, logistic, tikhonov, model.asg, model.cache,
                     preprocessing_seconds=1.25)
    assert 1.25 <= trace.preprocessing_seconds < 1.5


# ── estimator expectations ──────────────────────────────────────────────────


def test_weighted_sgd_is_unbiased(weighted_ds, logistic):
    w = np.random.default_rng(52).normal(scale=0.3, size=weighted_ds.d)
    probs = weighted_ds.weights / weighted_ds.weights.sum()
    mean = sum(probs[i] * weighted_sgd_gradient(w, np.array([i]), weighted_ds, logistic) for i in range(weighted_ds.n))
    assert_allclose(mean, full_gradient(w, weighted_ds, logistic), atol=1e-12)


def test_weighted_sampler_follows_the_weights():
    weights = np.array([0.0, 0.1, 0.0, 0.6, 0.3, 0.0])
    sampler = WeightedSampler.from_weights(weights)
    draws = sampler.draw(200_000, np.random.default_rng(58))
    assert sampler.total == pytest.approx(1.0)
    assert draws.min() >= 0 and draws.max() < len(weights)
    counts = np.bincount(draws, minlength=len(weights)) / len(draws)
    assert_array_equal(counts[weights == 0], 0.0)
    assert_allclose(counts, weights, atol=0.01)


def test_weighted_sampler_needs_positive_weights():
    with pytest.raises(ValidationError):
        WeightedSampler.from_weights(np.zeros(4))


@pytest.mark.parametrize("order", [0, 1])
def test_control_variate_is_unbiased(order, weighted_ds):
    loss = LossModel("smoothed_hinge", beta=5.0)
    cv = ControlVariate(weighted_ds, loss, order)
    w = np.random.default_rng(53).normal(scale=0.3, size=weighted_ds.d)
    mean = np.mean([cv.gradient(w, np.array([i])) for i in range(weighted_ds.n)], axis=0)
    assert_allclose(mean, full_gradient(w, weighted_ds, loss), atol=1e-12)


def test_control_variate_is_exact_on_class_means(logistic):
    samples = np.vstack([np.tile([1.0, 2.0], (6, 1)), np.tile([-1.5, 0.5], (4, 1))])
    labels = np.array([1.0] * 6 + [-1.0] * 4)
    ds = Dataset(append_intercept(samples), labels, uniform_weights(10))
    cv = ControlVariate(ds, logistic, order=0)
    w = np.array([0.4, -0.2, 0.1])
    for batch in (np.array([0, 7]), np.array([3, 4, 9])):
        assert_allclose(cv.gradient(w, batch), full_gradient(w, ds, logistic), atol=1e-14)


def test_stratified_batches_take_one_sample_per_stratum(clustered_ds):
    strata = build_strata(clustered_ds, 6, seed=0)
    assert strata.count == 6
    assert strata.sizes.sum() == clustered_ds.n
    batch = strata.draw(np.random.default_rng(54))
    for s in range(6):
        members = strata.order[strata.starts[s]:strata.starts[s] + strata.sizes[s]]
        assert batch[s] in members


def test_stratified_gradient_is_unbiased(clustered_ds, logistic):
    strata = build_strata(clustered_ds, 5, seed=0)
    estimator = stratified_estimator(clustered_ds, logistic, strata)
    w = np.random.default_rng(55).normal(size=clustered_ds.d)
    rng = np.random.default_rng(56)
    draws = np.array([estimator.draw(w, rng) for _ in range(5000)])
    stderr = draws.std(axis=0, ddof=1) / np.sqrt(len(draws))
    assert np.all(np.abs(draws.mean(axis=0) - estimator.exact(w)) <= 5 * stderr + 1e-12)


# ── convergence and cost ────────────────────────────────────────────────────


def _overlapping_classes():
    """Two overlapping classes on the unit circle; logistic + Tikhonov with lam = 1e-3."""
    ds = synth_gaussian(n=1000, d=2, clusters=2, separation=2.0, seed=4, normalize=True)
    loss, reg = LossModel("logistic"), Regularizer("tikhonov", lam=1e-3)
    return ds, loss, reg, minimize_composite(ds, loss, reg).F


@pytest.mark.slow
def test_svrg_reaches_optimum_and_s3gd_plateau_shrinks_with_anchors():
    ds, loss, reg, F_star = _overlapping_classes()
    eta = 0.2
    L = smoothness(loss, ds).L_weighted_max + 2 * reg.lam
    assert eta < 1 / (8 * L)
    cfg = dict(eta=eta, p=10, max_iters=30_000, checkpoint_every=100, anchor_k=3)

    svrg = make_optimizer(RunConfig(algorithm="svrg", seed=0, **cfg), ds, loss, reg).run()
    assert svrg.final_objective - F_star < 1e-8

    plateau, first = {}, None
    for m in (10, 50, 100, 200):
        runs = [make_optimizer(RunConfig(algorithm="s3gd", seed=seed, anchor_m=m, **cfg), ds, loss, reg).run()
                for seed in (0, 1)]
        plateau[m] = np.mean([tail_objective(t) for t in runs]) - F_star
        if m == 100:
            first = runs[0]

    gaps = first.train_objectives - F_star
    assert gaps[0] > gaps[1] > plateau[100] > 0
    assert plateau[100] < 1e-2 * gaps[0]
    assert plateau[10] > plateau[50] > plateau[200] > 0


@pytest.mark.slow
def test_stability_selection_on_real_traces():
    ds, loss, reg, F_star = _overlapping_classes()
    etas = (0.1, 1.0, 5.0, 10.0)
    for algorithm in ("svrg", "s3gd"):
        traces = {
            eta: [make_optimizer(RunConfig(algorithm=algorithm, eta=eta, p=10, max_iters=4000, seed=seed,
                                           checkpoint_every=50, anchor_m=100), ds, loss, reg).run()
                  for seed in (0, 1)]
            for eta in etas
        }
        selection = select_stable_stepsize(traces, F_star, epsilon=0.01)
        assert not selection.fallback
        chosen = np.mean([tail_objective(t) for t in traces[selection.eta]])
        assert chosen <= 1.01 * F_star
        for eta, runs in traces.items():
            if any(t.diverged for t in runs):
                assert eta != selection.eta
                assert math.isinf(selection.tail_objectives[eta])


@pytest.mark.slow
def test_s3gd_tracks_the_full_gradient_better_than_sgd():
    ds = synth_gaussian(n=2000, d=10, clusters=10, separation=4.0, seed=0, std=0.1)
    loss, reg = LossModel("logistic"), Regularizer("tikhonov", lam=1e-3)
    w_star = minimize_composite(ds, loss, reg).w
    cfg = dict(eta=0.05, p=10, max_iters=1000, seed=0, checkpoint_every=1, track_correlation=True,
               anchor_m=100, anchor_k=3)

    mean_corr = {}
    for algorithm in ("sgd", "s3gd"):
        trace = make_optimizer(RunConfig(algorithm=algorithm, **cfg), ds, loss, reg).run(w_star)
        mean_corr[algorithm] = np.mean(trace.correlations[-500:])
    assert mean_corr["s3gd"] > mean_corr["sgd"]


def _seconds_per_iteration(trace):
    return trace.records[-1].wall_s / trace.total_iterations


@pytest.mark.slow
def test_sgd_iteration_cost_does_not_grow_with_n(logistic, tikhonov):
    cost = {}
    for n in (2000, 200_000):
        ds = random_dataset(n, 6, seed=57, weighted=True)
        trace = make_optimizer(_cfg("sgd", eta=0.01, p=10, max_iters=3000, checkpoint_every=3000), ds,
                               logistic, tikhonov).run()
        cost[n] = _seconds_per_iteration(trace)
    assert cost[200_000] < 3 * cost[2000]


@pytest.mark.slow
def test_per_iteration_cost_ordering(logistic):
    ds = synth_gaussian(n=50_000, d=199, clusters=10, separation=4.0, seed=0)
    reg = Regularizer("tikhonov", lam=1e-3)
    model = build_anchor_model(ds, m=100, k=3, seed=0, max_iter=10)
    cfg = dict(eta=0.01, p=10, max_iters=2000, seed=0, checkpoint_every=2000, kmeans_iter=10)

    cost = {}
    for algorithm in ("sgd", "ssgd", "s3gd", "svrg"):
        opt = make_optimizer(RunConfig(algorithm=algorithm, **cfg), ds, logistic, reg, anchor_model=model)
        cost[algorithm] = _seconds_per_iteration(opt.run())

    assert cost["sgd"] <= 1.5 * cost["ssgd"]
    assert cost["ssgd"] / 3 < cost["s3gd"] < 3 * cost["ssgd"]
    assert cost["s3gd"] < 0.25 * cost["svrg"]


@pytest.mark.slow
def test_anchor_snapshot_is_cheaper_than_full_gradient(logistic):
    ds = synth_gaussian(n=20000, d=50, clusters=10, separation=4.0, seed=0)
    model = build_anchor_model(ds, m=50, k=3, seed=0, max_iter=10)
    w = np.full(ds.d, 0.01)

    def best_of(fn, repeats=7):
        times = []
        for _ in range(repeats):
            start = time.perf_counter()
            fn()
            times.append(time.perf_counter() - start)
        return min(times)

    snapshot = best_of(lambda: make_snapshot(w, model.asg, model.cache, logistic))
    exact = best_of(lambda: full_gradient(w, ds, logistic))
    assert snapshot < exact
