import json
import math

import numpy as np
import pandas as pd
import pytest

import src.benchmarks as benchmarks
from src.benchmarks import (ExperimentConfig, ExperimentReport, box_stats, derive_seeds, rmse, run_experiment,
                            write_report)
from src.data_io import write_samples_csv
from src.errors import InfeasibleError, InputError, UndefinedResultError
from src.function_factory import FUNCTION_NAMES, FunctionFactory
from src.sampling import from_unit, lhs


def central_differences(fn, X, h=1e-6):
    G = np.zeros_like(X)
    for k in range(X.shape[1]):
        step = np.zeros(X.shape[1])
        step[k] = h
        G[:, k] = (fn.evaluate(X + step)[0] - fn.evaluate(X - step)[0]) / (2 * h)
    return G


class TestFunctions:
    def test_oscillator_at_origin(self):
        value, grad = FunctionFactory.create_function("oscillator1d").evaluate([[0.0]])
        assert value[0] == pytest.approx(6.0)
        assert grad[0, 0] == pytest.approx(4.2)

    def test_camelback_origin(self):
        value, grad = FunctionFactory.create_function("camelback").evaluate([[0.0, 0.0]])
        assert value[0] == 0.0
        np.testing.assert_array_equal(grad, [[0.0, 0.0]])

    def test_rosenbrock_minimum(self):
        value, grad = FunctionFactory.create_function("rosenbrock", 6).evaluate(np.ones((1, 6)))
        assert value[0] == 0.0
        np.testing.assert_array_equal(grad, 0.0)

    def test_dixon_price_minimum(self):
        value, grad = FunctionFactory.create_function("dixon-price", 2).evaluate([[1.0, 1 / math.sqrt(2)]])
        assert value[0] == pytest.approx(0.0, abs=1e-15)
        np.testing.assert_allclose(grad, 0.0, atol=1e-12)

    @pytest.mark.parametrize("name,n", [("oscillator1d", None), ("camelback", None), ("rosenbrock", 5),
                                        ("dixon-price", 5)])
    def test_gradients_match_finite_differences(self, name, n):
        fn = FunctionFactory.create_function(name, n)
        # keep the stencil inside the box
        X = from_unit(0.01 + 0.98 * lhs(fn.dimension, 100, seed=8), fn.box)
        _, G = fn.evaluate(X)
        np.testing.assert_allclose(G, central_differences(fn, X), rtol=1e-5, atol=1e-5)

    def test_unknown_function(self):
        with pytest.raises(InputError, match="Available"):
            FunctionFactory.create_function("ackley")

    @pytest.mark.parametrize("name,n", [("camelback", 3), ("oscillator1d", 2), ("rosenbrock", None),
                                        ("dixon-price", 1)])
    def test_dimension_checks(self, name, n):
        with pytest.raises(InputError):
            FunctionFactory.create_function(name, n)

    def test_wrong_point_dimension(self):
        with pytest.raises(InputError):
            FunctionFactory.create_function("camelback").evaluate([[0.0, 0.0, 0.0]])

    def test_names_are_exposed(self):
        assert set(FUNCTION_NAMES) == {"oscillator1d", "camelback", "rosenbrock", "dixon-price"}


class TestMetrics:
    def test_perfect_prediction(self):
        assert rmse([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0

    def test_mean_predictor_scores_one(self):
        assert rmse([2.0, 2.0, 2.0], [1.0, 2.0, 3.0]) == pytest.approx(1.0)

    def test_three_point_case(self):
        assert rmse([0.0, 1.0, 1.0], [0.0, 1.0, 2.0]) == pytest.approx(0.5)

    def test_constant_truth_is_undefined(self):
        with pytest.raises(UndefinedResultError):
            rmse([1.0, 2.0], [3.0, 3.0])

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            rmse([1.0, 2.0], [1.0, 2.0, 3.0])

    def test_box_stats(self):
        stats = box_stats([1.0, 2.0, 3.0, 4.0, 100.0, float("nan")])
        assert stats["median"] == 3.0
        assert stats["q25"] == 2.0
        assert stats["q75"] == 4.0
        assert stats["outliers"] == [100.0]

    def test_box_stats_without_values(self):
        assert math.isnan(box_stats([float("nan")])["median"])


class TestExperimentConfig:
    def test_unknown_key_is_named(self):
        with pytest.raises(InputError, match="repetition"):
            ExperimentConfig.from_dict({"function": "camelback", "repetition": 3})

    @pytest.mark.parametrize("data", [{}, {"function": "camelback", "dataset": "samples.csv"}])
    def test_needs_exactly_one_source(self, data):
        with pytest.raises(InputError):
            ExperimentConfig.from_dict(data)

    def test_scalars_are_promoted(self):
        config = ExperimentConfig(function="camelback", N=16, variants="sgek-2")
        assert config.N == [16]
        assert config.variants == ["SGEK-2"]

    def test_yaml_overrides_defaults(self, tmp_path):
        path = tmp_path / "experiment.yaml"
        path.write_text("function: camelback\nN: [10, 20]\nrepetitions: 2\n")
        config = ExperimentConfig.from_yaml(str(path), {"repetitions": 10, "test_size": 500})
        assert config.repetitions == 2
        assert config.test_size == 500
        assert config.N == [10, 20]


def test_seeds_are_distinct_and_reproducible():
    assert derive_seeds(0, 1) == derive_seeds(0, 1)
    train_seed, test_seed = derive_seeds(0, 1)
    assert train_seed != test_seed
    assert derive_seeds(0, 1) != derive_seeds(0, 2)


def small_config(**overrides):
    settings = dict(function="camelback", variants=["Kriging", "GEK"], N=[8], repetitions=2, test_size=50,
                    starts=2, evaluation_factor=30, timing=False)
    settings.update(overrides)
    return ExperimentConfig(**settings)


class TestRunExperiment:
    def test_records_every_cell(self):
        report = run_experiment(small_config())
        assert len(report.records) == 4
        assert all(r.status == "ok" for r in report.records)
        assert all(r.train_seconds == 0.0 for r in report.records)
        assert all(np.isfinite(r.rmse) and r.rmse >= 0 for r in report.records)
        summary = report.summary()
        assert list(summary["variant"]) == ["Kriging", "GEK"]

    def test_reproducible_across_thread_counts(self):
        serial = run_experiment(small_config(threads=1))
        pooled = run_experiment(small_config(threads=2))
        assert [vars(r) for r in serial.records] == [vars(r) for r in pooled.records]

    def test_failed_cell_is_recorded(self, monkeypatch):
        def fail(*args, **kwargs):
            raise InfeasibleError("forced")
        monkeypatch.setattr(benchmarks, "train", fail)
        report = run_experiment(small_config(variants=["GEK"], repetitions=1))
        record = report.records[0]
        assert record.status == "failed"
        assert math.isnan(record.rmse)
        assert "forced" in record.message
        assert report.to_dict()["stats"][0]["failures"] == 1

    def test_dataset_mode(self, tmp_path):
        fn = FunctionFactory.create_function("camelback")
        X = from_unit(lhs(2, 30, seed=2), fn.box)
        y, G = fn.evaluate(X)
        path = tmp_path / "dataset.csv"
        write_samples_csv(str(path), X, y, G)
        report = run_experiment(ExperimentConfig(dataset=str(path), variants=["GEK"], N=[10], repetitions=1,
                                                 starts=2, evaluation_factor=30))
        assert report.records[0].status == "ok"

    def test_dataset_too_small(self, tmp_path):
        path = tmp_path / "dataset.csv"
        write_samples_csv(str(path), np.array([[0.1], [0.5], [0.9]]), np.array([1.0, 2.0, 0.0]),
                          np.array([[1.0], [0.0], [2.0]]))
        with pytest.raises(InputError):
            run_experiment(ExperimentConfig(dataset=str(path), variants=["GEK"], N=[2], repetitions=1))


def test_write_report(tmp_path):
    report = run_experiment(small_config(variants=["Kriging"], repetitions=1))
    report_path, summary_path = write_report(report, str(tmp_path / "out"))
    with open(report_path) as f:
        saved = json.load(f)
    restored = ExperimentReport.from_dict(saved)
    assert [vars(r) for r in restored.records] == [vars(r) for r in report.records]
    summary = pd.read_csv(summary_path)
    assert list(summary.columns) == ["variant", "N", "median_rmse", "q25", "q75", "median_train_s"]
    assert summary["median_rmse"][0] == pytest.approx(report.records[0].rmse)
