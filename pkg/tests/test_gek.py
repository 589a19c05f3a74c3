import logging

import numpy as np
import pytest

import src.gek as gek
from src.data_io import read_samples_csv, write_samples_csv
from src.errors import InfeasibleError, InputError
from src.function_factory import FunctionFactory
from src.gek import (SampleSet, Variant, assemble_R, assemble_r, cholesky_with_nugget, concentrated_likelihood,
                     fit_surrogate, full_log_likelihood, load_model, profile_beta_sigma, regression_vector,
                     save_model, train)
from src.kernels import KernelParams, corr_nd, corr_nd_d1, corr_nd_d2
from src.sampling import from_unit, lhs

SITES = np.array([[0.1, 0.2], [0.5, 0.9], [0.8, 0.4]])


def _assert_reproduces_training_values(model, data):
    # a nugget trades exact interpolation for a factorizable system
    tol = 1e-6 if model.nugget_used == 0.0 else 1e-3
    mu, _ = model.predict(data.X)
    np.testing.assert_allclose(mu, data.y0, atol=tol * np.max(np.abs(data.y0)))


def _three_site_data():
    return SampleSet(SITES, np.array([1.0, -0.5, 2.0]), np.array([[0.3, -1.0], [2.0, 0.5], [-0.7, 0.1]]))


def _dense_profile(R, y, F):
    Rinv_F = np.linalg.solve(R, F)
    beta0 = (Rinv_F @ y) / (F @ Rinv_F)
    resid = y - beta0 * F
    return beta0, resid @ np.linalg.solve(R, resid) / y.size


class TestAssembly:
    def test_single_site_matrix(self):
        data = SampleSet([[0.3]], [1.0], [[2.0]])
        R = assemble_R(data, KernelParams([2.0]), with_gradients=True)
        np.testing.assert_allclose(R, [[1.0, 0.0], [0.0, 120.0]], atol=1e-14)

    def test_without_gradients_is_value_block(self):
        data = _three_site_data()
        params = KernelParams([2.0, 1.5])
        full = assemble_R(data, params, with_gradients=True)
        np.testing.assert_array_equal(assemble_R(data, params, with_gradients=False), full[:3, :3])

    def test_symmetric(self):
        R = assemble_R(_three_site_data(), KernelParams([2.0, 1.5]), with_gradients=True)
        np.testing.assert_allclose(R, R.T, atol=1e-14)

    def test_matches_entrywise_kernel_derivatives(self):
        params = KernelParams([2.0, 1.5])
        R = assemble_R(_three_site_data(), params, with_gradients=True)
        N, n = SITES.shape
        expected = np.empty_like(R)
        for i, xi in enumerate(SITES):
            for j, xj in enumerate(SITES):
                expected[i, j] = corr_nd(xi, xj, params)
                for k in range(n):
                    expected[i, (k + 1) * N + j] = -corr_nd_d1(xi, xj, params, k)
                    expected[(k + 1) * N + i, j] = corr_nd_d1(xi, xj, params, k)
                    for l in range(n):
                        expected[(k + 1) * N + i, (l + 1) * N + j] = corr_nd_d2(xi, xj, params, k, l)
        np.testing.assert_allclose(R, expected, rtol=1e-12, atol=1e-12)

    def test_vector_at_site_is_matrix_column(self):
        data = _three_site_data()
        params = KernelParams([2.0, 1.5])
        R = assemble_R(data, params, with_gradients=True)
        for i in range(data.N):
            np.testing.assert_allclose(assemble_r(SITES[i], data, params, True), R[:, i], atol=1e-14)

    def test_vector_vanishes_outside_support(self):
        data = _three_site_data()
        r = assemble_r(np.array([1.9, 1.9]), data, KernelParams([1.0, 1.0]), True)
        np.testing.assert_array_equal(r, 0.0)

    def test_vector_matches_finite_difference(self):
        data = _three_site_data()
        params = KernelParams([2.0, 1.5])
        x = np.array([0.45, 0.6])
        r = assemble_r(x, data, params, True)
        h = 1e-6
        for i, xi in enumerate(SITES):
            for k in range(2):
                step = np.zeros(2)
                step[k] = h
                fd = (corr_nd(xi + step, x, params) - corr_nd(xi - step, x, params)) / (2 * h)
                assert r[(k + 1) * 3 + i] == pytest.approx(fd, rel=1e-4, abs=1e-6)

    def test_regression_vector(self):
        np.testing.assert_array_equal(regression_vector(2, 2, True), [1, 1, 0, 0, 0, 0])
        np.testing.assert_array_equal(regression_vector(2, 2, False), [1, 1])


class TestCholeskyWithNugget:
    def test_identity(self):
        L, tau = cholesky_with_nugget(np.eye(4))
        np.testing.assert_array_equal(L, np.eye(4))
        assert tau == 0.0

    def test_singular_needs_nugget(self):
        L, tau = cholesky_with_nugget(np.ones((2, 2)))
        assert tau > 0

    def test_reconstructs_spd(self, rng):
        A = rng.normal(size=(6, 6))
        M = A @ A.T + 6 * np.eye(6)
        L, tau = cholesky_with_nugget(M)
        assert tau == 0.0
        assert np.linalg.norm(L @ L.T - M) / np.linalg.norm(M) < 1e-10

    def test_indefinite_is_infeasible(self):
        with pytest.raises(InfeasibleError):
            cholesky_with_nugget(np.diag([1.0, -1.0]))


class TestProfile:
    def test_constant_data(self):
        F = regression_vector(1, 0, False)
        profile = profile_beta_sigma(np.eye(1), np.array([5.0]), F)
        assert profile.beta0 == 5.0
        assert profile.sigma2 == 0.0

    def test_proportional_to_regression(self):
        data = SampleSet(SITES, np.full(3, 2.5), np.zeros((3, 2)))
        R = assemble_R(data, KernelParams([2.0, 2.0]), True)
        L, _ = cholesky_with_nugget(R)
        profile = profile_beta_sigma(L, data.response_vector(True), regression_vector(3, 2, True))
        assert profile.beta0 == pytest.approx(2.5, rel=1e-12)
        assert profile.sigma2 == pytest.approx(0.0, abs=1e-20)

    def test_matches_dense_solver(self):
        data = _three_site_data()
        R = assemble_R(data, KernelParams([2.0, 2.0]), True)
        y, F = data.response_vector(True), regression_vector(3, 2, True)
        L, _ = cholesky_with_nugget(R)
        profile = profile_beta_sigma(L, y, F)
        beta0, sigma2 = _dense_profile(R, y, F)
        assert profile.beta0 == pytest.approx(beta0, rel=1e-10)
        assert profile.sigma2 == pytest.approx(sigma2, rel=1e-10)


class TestLikelihood:
    def test_unit_variance_identity_is_zero(self):
        assert concentrated_likelihood(1.0, 10, 0.0) == 0.0

    def test_infeasible_theta_gives_infinity(self, monkeypatch):
        def fail(M):
            raise InfeasibleError("forced")
        monkeypatch.setattr(gek, "cholesky_with_nugget", fail)
        assert full_log_likelihood([2.0, 2.0], _three_site_data(), True) == np.inf

    def test_permutation_invariant(self, camelback_data):
        theta = KernelParams([3.0, 2.0])
        perm = np.random.default_rng(0).permutation(camelback_data.N)
        original = full_log_likelihood(theta, camelback_data, True)
        permuted = full_log_likelihood(theta, camelback_data.subset(perm), True)
        assert permuted == pytest.approx(original, rel=1e-10)


class TestPredictor:
    def test_interpolates_values_and_gradients(self, camelback_data):
        model = fit_surrogate(camelback_data, KernelParams([3.0, 3.0]), Variant.GEK)
        assert model.nugget_used == 0.0
        mu, s2 = model.predict(camelback_data.X)
        scale = np.max(np.abs(camelback_data.y0))
        np.testing.assert_allclose(mu, camelback_data.y0, atol=1e-6 * scale)
        assert np.all(s2 <= 1e-8 * model.sigma2)

        h = 1e-7
        for i, x in enumerate(camelback_data.X):
            for k in range(2):
                step = np.zeros(2)
                step[k] = h
                fd = (model.predict_mean(x + step) - model.predict_mean(x - step)) / (2 * h)
                assert fd == pytest.approx(camelback_data.G[i, k], rel=1e-3, abs=1e-5 * scale)

    def test_single_site(self):
        data = SampleSet([[0.4, 0.6]], [2.0], [[1.0, -3.0]])
        model = fit_surrogate(data, KernelParams([1.0, 1.0]), Variant.GEK)
        assert model.predict_mean([0.4, 0.6]) == pytest.approx(2.0, abs=1e-12)
        h = 1e-6
        slope = (model.predict_mean([0.4 + h, 0.6]) - model.predict_mean([0.4 - h, 0.6])) / (2 * h)
        assert slope == pytest.approx(1.0, rel=1e-4)

    def test_outside_support_reverts_to_trend(self, camelback_data):
        model = fit_surrogate(camelback_data, KernelParams([10.0, 10.0]), Variant.GEK)
        mu, s2 = model.predict([[1.5, 1.5]])
        assert mu[0] == pytest.approx(model.beta0, rel=1e-12)
        assert s2[0] == pytest.approx(model.sigma2 * (1.0 + 1.0 / model.F_Rinv_F), rel=1e-10)

    def test_kriging_ignores_gradients(self, camelback_data):
        model = fit_surrogate(camelback_data, KernelParams([3.0, 3.0]), Variant.KRIGING)
        assert model.chol_R.shape == (camelback_data.N, camelback_data.N)
        np.testing.assert_allclose(model.predict(camelback_data.X)[0], camelback_data.y0,
                                   atol=1e-6 * np.max(np.abs(camelback_data.y0)))

    def test_permutation_invariant(self, camelback_data, rng):
        params = KernelParams([3.0, 2.0])
        points = rng.uniform(size=(25, 2))
        perm = np.random.default_rng(1).permutation(camelback_data.N)
        mu, s2 = fit_surrogate(camelback_data, params, Variant.GEK).predict(points)
        mu_perm, s2_perm = fit_surrogate(camelback_data.subset(perm), params, Variant.GEK).predict(points)
        scale = np.max(np.abs(camelback_data.y0))
        np.testing.assert_allclose(mu_perm, mu, rtol=1e-9, atol=1e-10 * scale)
        np.testing.assert_allclose(s2_perm, s2, rtol=1e-7, atol=1e-12)

    def test_variance_non_negative(self, camelback_data, rng):
        model = fit_surrogate(camelback_data, KernelParams([2.0, 2.0]), Variant.GEK)
        _, s2 = model.predict(rng.uniform(size=(50, 2)))
        assert np.all(s2 >= 0.0)

    def test_dimension_mismatch(self, camelback_data):
        model = fit_surrogate(camelback_data, KernelParams([2.0, 2.0]), Variant.GEK)
        with pytest.raises(InputError):
            model.predict([[0.1, 0.2, 0.3]])


class TestModelFile:
    def test_save_and_load_predict_identically(self, camelback_data, tmp_path, rng):
        model = fit_surrogate(camelback_data, KernelParams([2.5, 1.5]), Variant.GEK, {"method": "fixed"})
        path = str(tmp_path / "model.json")
        save_model(model, path)
        restored = load_model(path)
        points = rng.uniform(size=(20, 2))
        np.testing.assert_allclose(restored.predict(points)[0], model.predict(points)[0], rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(restored.predict(points)[1], model.predict(points)[1], rtol=1e-10, atol=1e-14)
        assert restored.variant is Variant.GEK
        assert restored.tuning == {"method": "fixed"}

    def test_rejects_foreign_document(self, tmp_path):
        path = tmp_path / "other.json"
        path.write_text('{"schema": "something-else", "version": 1}')
        with pytest.raises(InputError):
            load_model(str(path))


class TestSampleSet:
    def test_rejects_duplicate_sites(self):
        with pytest.raises(InputError):
            SampleSet([[0.1, 0.2], [0.1, 0.2]], [1.0, 2.0])

    def test_rejects_non_finite(self):
        with pytest.raises(InputError):
            SampleSet([[0.1], [0.2]], [1.0, np.nan])

    def test_physical_gradients_rescaled(self):
        from src.sampling import DomainBox
        data = SampleSet.from_physical([[0.0, 0.0]], [1.0], [[1.0, 1.0]], DomainBox([-2, -1], [2, 1]))
        np.testing.assert_allclose(data.X, [[0.5, 0.5]])
        np.testing.assert_allclose(data.G, [[4.0, 2.0]])

    def test_data_range_box_is_reported(self, caplog):
        with caplog.at_level(logging.WARNING):
            data = SampleSet.from_physical([[0.0, 4.0], [2.0, 8.0]], [1.0, 2.0])
        assert "data range" in caplog.text
        np.testing.assert_array_equal(data.box.lower, [0.0, 4.0])
        np.testing.assert_array_equal(data.box.upper, [2.0, 8.0])

    def test_explicit_box_is_silent(self, caplog):
        from src.sampling import DomainBox
        with caplog.at_level(logging.WARNING):
            SampleSet.from_physical([[0.0, 4.0], [2.0, 8.0]], [1.0, 2.0], box=DomainBox([0, 0], [4, 8]))
        assert "data range" not in caplog.text

    def test_response_vector_order(self):
        data = _three_site_data()
        np.testing.assert_array_equal(data.response_vector(True),
                                      [1.0, -0.5, 2.0, 0.3, 2.0, -0.7, -1.0, 0.5, 0.1])


class TestVariant:
    def test_parse_is_case_insensitive(self):
        assert Variant.parse("sgek-2") is Variant.SGEK2

    def test_parse_rejects_unknown(self):
        with pytest.raises(InputError):
            Variant.parse("cokriging")


class TestTrain:
    def test_gek_end_to_end(self, camelback_data, fast_tuner):
        model = train(camelback_data, "GEK", fast_tuner)
        assert np.all(model.params.theta >= fast_tuner.theta_lower)
        assert np.all(model.params.theta <= fast_tuner.theta_upper)
        assert 0 < model.outcome.evaluations <= fast_tuner.starts * fast_tuner.evaluation_factor * 2
        assert model.outcome.value == pytest.approx(full_log_likelihood(model.params, camelback_data, True))
        assert model.tuning["method"] == "full"

    def test_sliced_end_to_end(self, camelback_data, fast_tuner):
        from src.sliced import SliceConfig
        model = train(camelback_data, Variant.SGEK2, fast_tuner, SliceConfig(m=3))
        assert model.tuning["details"]["layout"]["m"] == 3
        assert len(model.tuning["details"]["alpha"]) == 3

    def test_sliced_model_interpolates_rosenbrock(self, sample_factory, fast_tuner):
        from src.sliced import SliceConfig
        data = sample_factory("rosenbrock", 30, seed=2, n=5)
        model = train(data, Variant.SGEK1, fast_tuner, SliceConfig(m=5))
        _assert_reproduces_training_values(model, data)

    def test_model_from_csv_interpolates(self, tmp_path, fast_tuner):
        fn = FunctionFactory.create_function("camelback")
        X = from_unit(lhs(2, 15, seed=6), fn.box)
        y, G = fn.evaluate(X)
        path = str(tmp_path / "samples.csv")
        write_samples_csv(path, X, y, G)
        X_read, y_read, G_read = read_samples_csv(path, require_gradients=True)
        model = train(SampleSet.from_physical(X_read, y_read, G_read, fn.box), Variant.GEK, fast_tuner)
        mu, _ = model.predict_physical(X)
        tol = 1e-6 if model.nugget_used == 0.0 else 1e-3
        np.testing.assert_allclose(mu, y, atol=tol * np.max(np.abs(y)))

    def test_gradient_variant_needs_gradients(self, fast_tuner):
        data = SampleSet(SITES, [1.0, 2.0, 3.0])
        with pytest.raises(InputError):
            train(data, Variant.GEK, fast_tuner)
