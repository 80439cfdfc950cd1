import numpy as np
import pytest

from granger_lab.core import LagSpec, TopologyKind
from granger_lab.datagen import GeneratorConfig, generate_fixed
from granger_lab.regress import (InsufficientData, ModelSpec, RankDeficient,
                                 build_design, lag_columns, nested_rss, ols_fit)


def _spec(target, predictors, target_lags, predictor_lags):
    return ModelSpec(target=target, predictors=tuple(predictors),
                     lags=LagSpec(target_lags=target_lags,
                                  predictor_lags=tuple(predictor_lags)))


class TestBuildDesign:
    def test_shapes_and_alignment(self):
        v = np.arange(10.0)
        series = {"y": v, "x": v * 10}
        spec = _spec("y", ["x"], 2, [2])
        matrix, response = build_design(series, spec)
        assert matrix.shape == (8, 4)
        np.testing.assert_array_equal(response, v[2:])
        # row t holds [y_{t-1}, y_{t-2}, x_{t-1}, x_{t-2}]
        np.testing.assert_array_equal(matrix[0], [1.0, 0.0, 10.0, 0.0])
        np.testing.assert_array_equal(matrix[-1], [8.0, 7.0, 80.0, 70.0])

    def test_common_window_override(self):
        v = np.arange(20.0)
        spec = _spec("y", [], 2, [])
        matrix, response = build_design({"y": v}, spec, window_lag=5)
        assert matrix.shape == (15, 2)
        np.testing.assert_array_equal(response, v[5:])

    def test_insufficient_data(self):
        v = np.arange(6.0)
        spec = _spec("y", ["x"], 2, [2])
        with pytest.raises(InsufficientData):
            build_design({"y": v, "x": v}, spec)

    def test_lag_columns(self):
        v = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
        cols = lag_columns(v, 2, 2)
        np.testing.assert_array_equal(cols, [[1.0, 0.0], [2.0, 1.0], [3.0, 2.0]])


class TestOlsFit:
    def test_exact_fit_has_zero_rss(self):
        rng = np.random.default_rng(0)
        matrix = rng.normal(size=(40, 3))
        beta = np.array([1.5, -2.0, 0.25])
        fit = ols_fit(matrix, matrix @ beta)
        np.testing.assert_allclose(fit.coefficients, beta, rtol=1e-10)
        assert fit.rss == pytest.approx(0.0, abs=1e-18)

    def test_matches_normal_equations(self):
        rng = np.random.default_rng(1)
        matrix = rng.normal(size=(60, 4))
        response = rng.normal(size=60)
        fit = ols_fit(matrix, response)
        beta = np.linalg.solve(matrix.T @ matrix, matrix.T @ response)
        np.testing.assert_allclose(fit.coefficients, beta, rtol=1e-9)
        resid = response - matrix @ beta
        assert fit.rss == pytest.approx(float(resid @ resid), rel=1e-10)
        assert fit.n_obs == 60 and fit.n_params == 4

    def test_residuals_orthogonal_to_design(self):
        rng = np.random.default_rng(2)
        matrix = rng.normal(size=(50, 5))
        response = rng.normal(size=50)
        fit = ols_fit(matrix, response)
        resid = response - matrix @ fit.coefficients
        np.testing.assert_allclose(matrix.T @ resid, np.zeros(5), atol=1e-9)

    def test_scale_equivariance(self):
        rng = np.random.default_rng(3)
        matrix = rng.normal(size=(30, 3))
        response = rng.normal(size=30)
        a = ols_fit(matrix, response)
        b = ols_fit(matrix, 7.0 * response)
        np.testing.assert_allclose(b.coefficients, 7.0 * a.coefficients, rtol=1e-10)
        assert b.rss == pytest.approx(49.0 * a.rss, rel=1e-10)

    def test_rank_deficient_raises(self):
        rng = np.random.default_rng(4)
        col = rng.normal(size=30)
        matrix = np.column_stack([col, 2.0 * col, rng.normal(size=30)])
        with pytest.raises(RankDeficient):
            ols_fit(matrix, rng.normal(size=30))

    def test_insufficient_rows(self):
        with pytest.raises(InsufficientData):
            ols_fit(np.eye(3), np.ones(3))

    def test_recovers_generator_coefficients(self):
        # driver topology: z_t = 0.3 z_{t-1} + x_{t-2} with tiny gamma noise
        cfg = GeneratorConfig(topology=TopologyKind.DRIVER, length=5000,
                              sigmas_or_snrs=(0.0, 0.1, 0.01), seed=11)
        s = generate_fixed(cfg)
        series = {"z": s.z.values, "x": s.x.values}
        spec = _spec("z", ["x"], 2, [2])
        fit = ols_fit(*build_design(series, spec))
        np.testing.assert_allclose(fit.coefficients, [0.3, 0.0, 0.0, 1.0], atol=0.01)


class TestNestedRss:
    def test_matches_separate_fits(self):
        rng = np.random.default_rng(5)
        matrix = rng.normal(size=(80, 6))
        response = rng.normal(size=80)
        rss = nested_rss(matrix, response, (2, 4, 6))
        for k, value in zip((2, 4, 6), rss):
            assert value == pytest.approx(ols_fit(matrix[:, :k], response).rss,
                                          rel=1e-9)

    def test_monotone_nonincreasing(self):
        rng = np.random.default_rng(6)
        for _ in range(25):
            matrix = rng.normal(size=(40, 6))
            response = rng.normal(size=40)
            rss = nested_rss(matrix, response, (1, 2, 3, 4, 5, 6))
            assert all(a >= b - 1e-12 for a, b in zip(rss, rss[1:]))
            assert all(v >= 0.0 for v in rss)

    def test_rank_deficient_raises(self):
        col = np.linspace(0, 1, 30)
        matrix = np.column_stack([col, col])
        with pytest.raises(RankDeficient):
            nested_rss(matrix, col, (1, 2))


class TestModelSpec:
    def test_duplicate_predictor_rejected(self):
        with pytest.raises(ValueError):
            _spec("y", ["x", "x"], 2, [2, 2])

    def test_target_as_predictor_rejected(self):
        with pytest.raises(ValueError):
            _spec("y", ["y"], 2, [2])

    def test_lag_count_mismatch_rejected(self):
        with pytest.raises(ValueError):
            _spec("y", ["x"], 2, [2, 2])
