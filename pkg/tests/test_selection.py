import csv
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arxthermal import (
    ArxModel,
    ArxOrders,
    DegenerateError,
    IdentDataset,
    ParameterError,
    SearchSpace,
    SelectionError,
    Signal,
    aic,
    fit_metric,
    generate_arx,
    grid_search,
    simulate_free_run,
)
from arxthermal.selection import threshold_search, validate_model, write_candidate_table
from arxthermal.synth import random_input


class TestFitMetric:
    def test_hand_example(self):
        assert fit_metric([0, 4], [1, 3]) == 50.0

    def test_perfect(self):
        y = np.random.default_rng(0).standard_normal(30)
        assert fit_metric(y, y) == 100.0

    def test_mean_prediction(self):
        y = np.array([1.0, 2.0, 6.0])
        assert abs(fit_metric(y, np.full(3, 3.0))) < 1e-12

    def test_worse_than_mean_is_negative(self):
        assert fit_metric([0, 1], [5, -5]) < 0

    def test_constant_measurement(self):
        with pytest.raises(DegenerateError):
            fit_metric([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])

    @pytest.mark.parametrize("alpha", [2.0, 0.5, -1.0, 1024.0])
    def test_scale_invariance_exact(self, alpha):
        rng = np.random.default_rng(1)
        y, yhat = rng.standard_normal(50), rng.standard_normal(50)
        assert fit_metric(alpha * y, alpha * yhat) == fit_metric(y, yhat)

    @settings(max_examples=50)
    @given(st.floats(1e-3, 1e3).map(lambda x: x if x else 1.0), st.integers(0, 2**31))
    def test_scale_invariance_general(self, alpha, seed):
        rng = np.random.default_rng(seed)
        y, yhat = rng.standard_normal(40), rng.standard_normal(40)
        assert abs(fit_metric(alpha * y, alpha * yhat) - fit_metric(y, yhat)) <= 1e-10


class TestAic:
    def test_formula(self):
        assert aic(10.0, 100, 3) == pytest.approx(100 * math.log(0.1) + 6, rel=1e-15)

    def test_zero_sse_is_finite(self):
        assert math.isfinite(aic(0.0, 50, 2))

    def test_penalizes_parameters(self):
        assert aic(1.0, 100, 5) - aic(1.0, 100, 3) == 4.0


class TestSearchSpace:
    def test_bounded(self):
        s = SearchSpace.bounded(2, 3, 1)
        assert len(s.orders(1)) == 2 * 3 * 2
        assert s.orders(1)[0] == ArxOrders.shared(1, 1, 0)

    def test_empty(self):
        with pytest.raises(ParameterError):
            SearchSpace.bounded(0, 1, 0)
        with pytest.raises(ParameterError):
            SearchSpace((), (1,), (0,))

    def test_per_input_orders(self):
        s = SearchSpace((1,), (1, 2), (0, 1), shared_orders_across_inputs=False)
        assert len(s.orders(2)) == 4 * 4


class TestGridSearch:
    def test_recovers_truth_with_aic(self, true_model, arx_train, arx_validate):
        res = grid_search(arx_train, arx_validate, SearchSpace.bounded(4, 4, 3))
        assert res.model.orders == ArxOrders.shared(2, 2, 1)
        np.testing.assert_allclose(res.model.a, true_model.a, rtol=1e-6)
        assert res.validation_report.fit_percent > 99.99
        assert len(res.candidates) == 4 * 4 * 4

    def test_fit_criterion_is_at_least_as_good(self, arx_train, arx_validate):
        res = grid_search(arx_train, arx_validate, SearchSpace.bounded(4, 4, 3), "fit")
        assert res.train_report.fit_percent > 99.99

    def test_smallest_space_completes(self, arx_train, arx_validate):
        res = grid_search(arx_train, arx_validate, SearchSpace.bounded(1, 1, 0))
        assert len(res.candidates) == 1
        assert res.model.orders == ArxOrders.shared(1, 1, 0)

    def test_unknown_criterion(self, arx_train, arx_validate):
        with pytest.raises(ParameterError):
            grid_search(arx_train, arx_validate, SearchSpace.bounded(1, 1, 0), "bic")

    def test_validate_on_train_matches_train_report(self, arx_train):
        res = grid_search(arx_train, arx_train, SearchSpace.bounded(2, 2, 1))
        assert res.validation_report.fit_percent == res.train_report.fit_percent

    def test_other_system_scores_lower(self, arx_train):
        other = ArxModel([-0.9], ([0.3],), (0,), 1.0, ("P",))
        val = generate_arx(other, random_input(400, 1.0, seed=5, levels=(0, 10)))
        res = grid_search(arx_train, val, SearchSpace.bounded(2, 2, 1))
        assert res.validation_report.fit_percent < res.train_report.fit_percent

    def test_never_returns_unstable(self, arx_train, arx_validate):
        res = grid_search(arx_train, arx_validate, SearchSpace.bounded(3, 3, 2))
        assert res.model.orders and res.train_report.stability.spectral_radius < 1

    def test_all_unstable(self):
        n = 60
        u = Signal(np.zeros(n), 1.0)
        y = Signal(1.1 ** np.arange(n), 1.0)
        ds = IdentDataset({"P": u}, y)
        with pytest.raises(SelectionError, match="widen"):
            grid_search(ds, ds, SearchSpace.bounded(1, 1, 0))

    def test_executor_gives_identical_table(self, arx_train, arx_validate):
        space = SearchSpace.bounded(3, 3, 1)
        serial = grid_search(arx_train, arx_validate, space)
        with ThreadPoolExecutor(4) as pool:
            parallel = grid_search(arx_train, arx_validate, space, executor=pool)
        assert serial.candidates == parallel.candidates
        assert serial.model == parallel.model

    def test_two_inputs(self):
        truth = ArxModel([-0.8], ([0.5], [0.2, 0.1]), (1, 0), 1.0, ("P", "Tb"))
        def data(seed):
            u = {"P": random_input(500, 1.0, seed=seed, levels=(0, 10)),
                 "Tb": random_input(500, 1.0, seed=seed + 100, levels=(-5, 5))}
            return generate_arx(truth, u)
        space = SearchSpace((1, 2), (1, 2), (0, 1), shared_orders_across_inputs=False)
        res = grid_search(data(1), data(2), space)
        assert res.model.orders == ArxOrders(1, (1, 2), (1, 0))
        np.testing.assert_allclose(res.model.b[1], [0.2, 0.1], rtol=1e-6)

    def test_candidate_table(self, tmp_path, arx_train, arx_validate):
        res = grid_search(arx_train, arx_validate, SearchSpace.bounded(2, 2, 1))
        path = tmp_path / "c.csv"
        write_candidate_table(res.candidates, path)
        rows = list(csv.DictReader(path.open()))
        assert len(rows) == 8
        assert list(rows[0]) == ["na", "nb", "nk", "theta", "rank", "train_fit", "val_fit",
                                 "aic", "spectral_radius", "stable"]
        assert {r["stable"] for r in rows} <= {"true", "false"}


class TestThresholdSearch:
    def test_zero_threshold_always_tried(self, arx_train):
        s = threshold_search(arx_train, ArxOrders.shared(2, 2, 1))
        assert s.trials[0].threshold == 0.0
        best_at_zero = s.trials[0].train_fit
        assert s.train_fit >= best_at_zero - 1e-9

    def test_noise_free_keeps_full_rank(self, arx_train):
        s = threshold_search(arx_train, ArxOrders.shared(2, 2, 1))
        assert s.model.threshold == 0.0 and s.model.rank == 4

    def test_aic_winner_has_lowest_stable_aic(self, true_model):
        u = random_input(600, 1.0, seed=1, levels=(0, 10))
        train = generate_arx(true_model, u, noise_std=0.05, seed=3)
        val = generate_arx(true_model, random_input(400, 1.0, seed=2, levels=(0, 10)),
                           noise_std=0.05, seed=4)
        res = grid_search(train, val, SearchSpace.bounded(6, 6, 1))
        stable = [c.aic for c in res.candidates if c.stable]
        assert res.train_report.aic == min(stable)
        assert res.validation_report.fit_percent > 95


def test_regularization_never_hurts_training_fit(true_model):
    # ill-conditioned problem: heavily oversampled slow input plus equation noise
    gaps = []
    for seed in range(5):
        u = random_input(800, 1.0, seed=seed, levels=(0, 10), min_hold=60, max_hold=120)
        ds = generate_arx(true_model, u, noise_std=0.5, seed=seed)
        reg = threshold_search(ds, ArxOrders.shared(4, 4, 1))
        plain = threshold_search(ds, ArxOrders.shared(4, 4, 1), grid=(0.0,))
        gaps.append(reg.train_fit - plain.train_fit)
    assert min(gaps) >= -1e-9


def test_validate_model_uses_free_run(true_model, arx_validate):
    rep = validate_model(true_model, arx_validate)
    assert rep.prediction_mode == "free-run"
    expected = fit_metric(arx_validate.output, simulate_free_run(true_model, arx_validate))
    assert rep.fit_percent == expected
