import numpy as np
import pytest

from dpsdr import (
    MODELS,
    ModelSpec,
    gen_model,
    noise_free_response,
    sample_predictors,
    true_basis,
    true_dimension,
)

DECLARED_D = {"I": 1, "II": 2, "III": 1, "IV": 2, "V": 2, "VI": 2}
GRID = (-1.0, -0.5, 0.0, 0.5, 1.0)


class TestModelSpec:
    def test_model_iv_needs_three_predictors(self):
        with pytest.raises(ValueError, match="p >= 3"):
            ModelSpec("IV", n=100, p=2)

    def test_unknown_model(self):
        with pytest.raises(ValueError, match="unknown model"):
            ModelSpec("VII", n=10, p=3)

    def test_q(self):
        assert ModelSpec("I", n=10, p=3).q == 1
        assert ModelSpec("VI", n=10, p=3).q == 2


class TestPredictorLaw:
    def test_identity_covariance_at_zero(self):
        rng = np.random.default_rng(0)
        spec = ModelSpec("I", n=2, p=4)
        draws = np.array([sample_predictors(spec, [0.0], rng) for _ in range(10000)])
        np.testing.assert_allclose(np.cov(draws.T), np.eye(4), atol=0.05)
        np.testing.assert_allclose(draws.mean(axis=0), np.zeros(4), atol=0.05)

    def test_model_vi_level_at_origin(self):
        # off-diagonal covariance (sin 0 + cos 0) / 2 = 0.5
        rng = np.random.default_rng(1)
        spec = ModelSpec("VI", n=2, p=3)
        draws = np.array(
            [sample_predictors(spec, [0.0, 0.0], rng) for _ in range(20000)]
        )
        cov = np.cov(draws.T)
        np.testing.assert_allclose(np.diag(cov), np.ones(3), atol=0.05)
        np.testing.assert_allclose(cov[0, 1], 0.5, atol=0.05)
        np.testing.assert_allclose(draws.mean(), 0.5, atol=0.05)

    def test_equicorrelation_stays_positive(self):
        # largest level in model VI: rho ~ 0.92 < 1 keeps 1 - rho > 0
        rho = 0.5 * (np.sin(1.0) + np.cos(1.0))
        assert rho < 1.0
        assert 1.0 - rho > 0.0

    def test_indefinite_region_uses_absolute_eigenvalue(self):
        # at w = -1, 1 + (p-1) rho < 0; draws use |1 + (p-1) rho| along 1
        rng = np.random.default_rng(2)
        spec = ModelSpec("I", n=2, p=5)
        rho = 0.5 * np.sin(-1.0)
        draws = np.array([sample_predictors(spec, [-1.0], rng) for _ in range(20000)])
        ones = np.ones(5) / np.sqrt(5)
        var_along_ones = np.var(draws @ ones)
        np.testing.assert_allclose(var_along_ones, abs(1 + 4 * rho), atol=0.05)


class TestGenModel:
    def test_seed_reproducibility(self):
        a = gen_model(ModelSpec("III", n=50, p=4), 123)
        b = gen_model(ModelSpec("III", n=50, p=4), 123)
        np.testing.assert_array_equal(a.y, b.y)
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.w, b.w)

    def test_model_i_formula(self):
        x = np.zeros((1, 5))
        x[0, :2] = 1.0
        y = noise_free_response("I", x, [[0.5]])
        np.testing.assert_allclose(y, [0.5 + 3.0 * np.cos(0.5)], rtol=1e-12)

    def test_model_iii_formula(self):
        x = np.zeros((1, 4))
        x[0, 0], x[0, 1] = 1.0, 2.0
        y = noise_free_response("III", x, [[0.0]])
        np.testing.assert_allclose(y, [100.0], rtol=1e-12)

    def test_shapes(self):
        data = gen_model(ModelSpec("VI", n=37, p=6), 5)
        assert (data.n, data.p, data.q) == (37, 6, 2)


class TestTrueBasis:
    def test_model_i_direction(self):
        spec = ModelSpec("I", n=10, p=5)
        truth = true_basis(spec, [1.0])
        v = np.zeros(5)
        v[:2] = [1.0, 3.0 * np.cos(1.0)]
        v /= np.linalg.norm(v)
        np.testing.assert_allclose(np.abs(truth.basis[:, 0]), np.abs(v), atol=1e-12)

    def test_model_v_collapses_at_zero(self):
        spec = ModelSpec("V", n=10, p=5)
        assert true_basis(spec, [0.0]).d == 1
        v = np.zeros(5)
        v[:2] = [1.0, -1.0]
        v /= np.linalg.norm(v)
        np.testing.assert_allclose(np.abs(true_basis(spec, [0.0]).basis[:, 0]),
                                   np.abs(v), atol=1e-12)
        assert true_basis(spec, [0.3]).d == 2

    @pytest.mark.parametrize("model", MODELS)
    def test_declared_dimensions_on_grid(self, model):
        spec = ModelSpec(model, n=10, p=5)
        for w in GRID:
            point = [w, w] if spec.q == 2 else [w]
            expected = DECLARED_D[model]
            if model == "V" and w == 0.0:
                expected = 1
            assert true_dimension(spec, point) == expected

    @pytest.mark.parametrize("model", MODELS)
    def test_orthonormal(self, model):
        spec = ModelSpec(model, n=10, p=5)
        point = [0.4, -0.3] if spec.q == 2 else [0.4]
        B = true_basis(spec, point).basis
        np.testing.assert_allclose(B.T @ B, np.eye(B.shape[1]), atol=1e-12)

    def test_off_support(self):
        with pytest.raises(ValueError, match="outside the model support"):
            true_basis(ModelSpec("I", n=10, p=5), [1.5])


class TestResponseDependsOnlyOnProjection:
    @pytest.mark.parametrize("model", MODELS)
    def test_orthogonal_complement_invisible(self, model):
        rng = np.random.default_rng(8)
        spec = ModelSpec(model, n=10, p=6)
        point = np.array([0.6, -0.2])[: spec.q]
        B = true_basis(spec, point).basis
        P = B @ B.T
        x = rng.standard_normal((100, 6))
        z = rng.standard_normal((100, 6)) @ (np.eye(6) - P)
        w = np.tile(point, (100, 1))
        np.testing.assert_allclose(
            noise_free_response(model, x, w),
            noise_free_response(model, x + z, w),
            rtol=1e-9,
        )


class TestConditionalMomentsConverge:
    def test_window_moments_match_analytic_fields(self):
        # sample moments conditional on |W - w| < 0.05 approach the analytic
        # mean level and equicorrelation at w
        spec = ModelSpec("I", n=100000, p=4)
        data = gen_model(spec, 99)
        for w0 in (0.3, -0.6):
            mask = np.abs(data.w[:, 0] - w0) < 0.05
            sub = data.x[mask]
            rho = 0.5 * np.sin(w0)
            np.testing.assert_allclose(sub.mean(axis=0), np.full(4, rho), atol=0.1)
            expected = (1 - rho) * np.eye(4) + rho * np.ones((4, 4))
            np.testing.assert_allclose(np.cov(sub.T), expected, atol=0.1)
