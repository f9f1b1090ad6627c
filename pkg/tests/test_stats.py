import numpy as np
import pytest
from scipy import stats as scipy_stats

from pvqa import (
    DataValidationError,
    NumericalError,
    distance_correlation,
    fit_logistic,
    linreg_fit,
    pca_fit,
    pca_transform,
    plcc,
    rmse,
    srocc,
    welch_t_test,
)
from pvqa.stats import _logistic4

from reference import (
    naive_distance_correlation,
    naive_pearson,
    naive_rmse,
    naive_spearman,
    t_pvalue_by_quadrature,
    welch_stat,
)


class TestPca:
    def test_axis_aligned_symmetry(self):
        x = np.array([[1.0, 0.0], [-1.0, 0.0]])
        model = pca_fit(x, 1)
        assert np.allclose(model.mean, [0.0, 0.0])
        assert np.allclose(np.abs(model.basis[:, 0]), [1.0, 0.0])
        assert model.basis[0, 0] > 0  # sign convention

    def test_rank_clamp_on_line(self):
        t = np.linspace(-1, 1, 9)
        x = np.stack([t, t], axis=1)  # all points on y = x
        with pytest.warns(UserWarning, match="clamped"):
            model = pca_fit(x, 2)
        assert model.k_prime == 1

    def test_gram_route_matches_dense_svd(self, rng):
        # d >> n triggers the Gram decomposition; check against plain SVD
        x = rng.standard_normal((60, 500))
        model = pca_fit(x, 20)
        xc = x - x.mean(axis=0)
        _, s, vt = np.linalg.svd(xc, full_matrices=False)
        # same subspace: projections agree up to the fixed sign convention
        for j in range(20):
            ref = vt[j]
            i = np.argmax(np.abs(ref))
            if ref[i] < 0:
                ref = -ref
            assert np.allclose(model.basis[:, j], ref, atol=1e-8)
        assert np.allclose(model.explained_variance, s[:20] ** 2 / 59, rtol=1e-10)

    def test_rank_clamp_at_n_samples(self, rng):
        x = rng.standard_normal((240, 1000))
        with pytest.warns(UserWarning, match="clamped"):
            model = pca_fit(x, 240)
        assert model.k_prime == 239

    def test_orthonormal_basis(self, rng):
        x = rng.standard_normal((50, 300))
        model = pca_fit(x, 30)
        gram = model.basis.T @ model.basis
        assert np.allclose(gram, np.eye(30), atol=1e-6)

    def test_reconstruction_close(self, rng):
        x = rng.standard_normal((40, 200))
        model = pca_fit(x, 39)
        z = pca_transform(model, x)
        recon = z @ model.basis.T + model.mean
        assert np.allclose(recon, x, atol=1e-5)

    def test_degenerate_input(self):
        with pytest.raises(DataValidationError):
            pca_fit(np.zeros((1, 4)), 1)


class TestPcaTransform:
    def test_mean_rows_project_to_zero(self, rng):
        x = rng.standard_normal((10, 6))
        model = pca_fit(x, 3)
        repeated = np.tile(model.mean, (4, 1))
        assert np.allclose(pca_transform(model, repeated), 0.0, atol=1e-12)

    def test_training_projections_centered(self, rng):
        x = rng.standard_normal((25, 12))
        model = pca_fit(x, 5)
        z = pca_transform(model, x)
        assert np.max(np.abs(z.mean(axis=0))) <= 1e-9

    def test_projection_variance_equals_explained(self, rng):
        x = rng.standard_normal((30, 10))
        model = pca_fit(x, 6)
        z = pca_transform(model, x)
        assert np.allclose(np.var(z, axis=0, ddof=1), model.explained_variance,
                           rtol=1e-6)

    def test_basis_column_maps_to_unit_vector(self, rng):
        x = rng.standard_normal((20, 8))
        model = pca_fit(x, 4)
        row = model.mean + model.basis[:, 2]
        z = pca_transform(model, row)
        assert np.allclose(z, np.eye(4)[2], atol=1e-9)

    def test_dimension_mismatch(self, rng):
        model = pca_fit(rng.standard_normal((5, 4)), 2)
        with pytest.raises(DataValidationError):
            pca_transform(model, np.zeros((3, 7)))


class TestLinreg:
    def test_exact_recovery(self, rng):
        z = rng.standard_normal((30, 1))
        y = 3.0 * z[:, 0] + 2.0
        model = linreg_fit(z, y)
        assert model.weights[0] == pytest.approx(3.0, abs=1e-9)
        assert model.intercept == pytest.approx(2.0, abs=1e-9)

    def test_constant_target(self, rng):
        z = rng.standard_normal((20, 3))
        y = np.full(20, 7.5)
        model = linreg_fit(z, y)
        assert np.allclose(model.weights, 0.0, atol=1e-9)
        assert model.intercept == pytest.approx(7.5)

    def test_planted_consistent_system(self, rng):
        z = rng.standard_normal((240, 239))
        w = rng.standard_normal(239)
        y = z @ w + 1.5
        model = linreg_fit(z, y)
        residual = model.predict(z) - y
        assert np.max(np.abs(residual)) <= 1e-6

    def test_non_finite_rejected(self):
        with pytest.raises(DataValidationError):
            linreg_fit(np.array([[np.inf]]), np.array([1.0]))


class TestCorrelations:
    def test_srocc_monotone(self, rng):
        x = rng.standard_normal(50)
        assert srocc(x, np.exp(x)) == pytest.approx(1.0)
        assert srocc(x, -np.exp(x)) == pytest.approx(-1.0)

    def test_srocc_tied_example(self):
        # average ranks [1, 2.5, 2.5, 4] against [1, 2, 3, 4]
        assert srocc([1, 2, 2, 3], [1, 2, 3, 4]) == pytest.approx(0.9487, abs=1e-4)

    def test_srocc_monotone_transform_invariance(self, rng):
        x = rng.standard_normal(40)
        y = rng.standard_normal(40)
        base = srocc(x, y)
        assert srocc(np.exp(x), y) == pytest.approx(base, abs=1e-12)
        assert srocc(x, y ** 3) == pytest.approx(base, abs=1e-12)

    def test_plcc_affine(self, rng):
        x = rng.standard_normal(30)
        assert plcc(x, 2.0 * x + 1.0) == pytest.approx(1.0)
        assert plcc(x, -x) == pytest.approx(-1.0)
        y = rng.standard_normal(30)
        assert plcc(3.0 * x + 5.0, y) == pytest.approx(plcc(x, y), abs=1e-12)
        assert plcc(-2.0 * x, y) == pytest.approx(-plcc(x, y), abs=1e-12)

    def test_undefined_marker_on_constant(self):
        assert np.isnan(srocc([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]))
        assert np.isnan(plcc([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]))

    def test_rmse_values(self):
        assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0
        assert rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(np.sqrt(12.5))

    def test_against_naive_and_scipy(self, rng):
        for _ in range(200):
            n = int(rng.integers(5, 40))
            x = rng.standard_normal(n)
            y = rng.standard_normal(n)
            if rng.random() < 0.3:  # inject ties
                x = np.round(x, 1)
            assert srocc(x, y) == pytest.approx(naive_spearman(x, y), abs=1e-9)
            assert plcc(x, y) == pytest.approx(naive_pearson(x, y), abs=1e-9)
            assert rmse(x, y) == pytest.approx(naive_rmse(x, y), abs=1e-9)
            assert srocc(x, y) == pytest.approx(
                scipy_stats.spearmanr(x, y).statistic, abs=1e-9)
            assert plcc(x, y) == pytest.approx(
                scipy_stats.pearsonr(x, y).statistic, abs=1e-9)


class TestFitLogistic:
    def test_planted_logistic_recovered(self, rng):
        s = np.linspace(-3, 3, 60)
        beta = np.array([90.0, 20.0, 0.5, 0.8])
        mos = _logistic4(beta, s)
        fit = fit_logistic(s, mos)
        assert not fit.fallback
        assert rmse(fit(s), mos) <= 1e-6

    def test_affine_data_not_worse_than_affine(self, rng):
        s = rng.standard_normal(50)
        mos = 4.0 * s + 50.0 + 0.5 * rng.standard_normal(50)
        fit = fit_logistic(s, mos)
        affine = linreg_fit(s[:, None], mos)
        sse_affine = float(np.sum((affine.predict(s[:, None]) - mos) ** 2))
        sse_fit = float(np.sum((fit(s) - mos) ** 2))
        assert sse_fit <= sse_affine + 1e-9

    def test_constant_mos(self, rng):
        s = rng.standard_normal(20)
        mos = np.full(20, 42.0)
        fit = fit_logistic(s, mos)
        assert rmse(fit(s), mos) <= 1e-9

    def test_monotone_over_input_hull(self, rng):
        s = rng.standard_normal(40) * 10
        mos = 80.0 - 3.0 * s + rng.standard_normal(40)
        fit = fit_logistic(s, mos)
        grid = np.linspace(s.min(), s.max(), 500)
        diffs = np.diff(fit(grid))
        assert np.all(diffs <= 1e-9) or np.all(diffs >= -1e-9)

    def test_decreasing_relationship(self, rng):
        s = np.linspace(0, 10, 50)
        mos = 90.0 - 7.0 * s
        fit = fit_logistic(s, mos)
        assert plcc(fit(s), mos) == pytest.approx(1.0, abs=1e-6)


class TestDistanceCorrelation:
    def test_similarity_transform_gives_one(self, rng):
        x = rng.standard_normal((40, 3))
        theta = 0.7
        rot = np.array([[np.cos(theta), -np.sin(theta), 0],
                        [np.sin(theta), np.cos(theta), 0],
                        [0, 0, 1.0]])
        y = 2.5 * x @ rot.T + np.array([1.0, -2.0, 0.5])
        assert distance_correlation(x, y) == pytest.approx(1.0, abs=1e-9)

    def test_scalar_affine_gives_one(self, rng):
        x = rng.standard_normal(30)
        assert distance_correlation(x, -4.0 * x + 2.0) == pytest.approx(1.0, abs=1e-9)

    def test_self_correlation_is_one(self, rng):
        x = rng.standard_normal((25, 4))
        assert distance_correlation(x, x) == pytest.approx(1.0, abs=1e-12)

    def test_constant_input_gives_zero(self, rng):
        x = np.ones((10, 2))
        y = rng.standard_normal((10, 2))
        assert distance_correlation(x, y) == 0.0

    def test_independent_samples_small(self, rng):
        x = rng.standard_normal((500, 2))
        y = rng.standard_normal((500, 2))
        assert distance_correlation(x, y) < 0.15

    def test_matches_naive_oracle(self, rng):
        x = rng.standard_normal((15, 2))
        y = rng.standard_normal((15, 3))
        assert distance_correlation(x, y) == pytest.approx(
            naive_distance_correlation(x, y), abs=1e-10)

    def test_needs_four_samples(self, rng):
        with pytest.raises(DataValidationError):
            distance_correlation(np.zeros((3, 2)), np.zeros((3, 2)))


class TestWelch:
    def test_identical_samples(self):
        a = np.array([1.0, 2.0, 3.0, 4.0])
        assert welch_t_test(a, a.copy()) == pytest.approx(1.0)

    def test_strong_separation(self, rng):
        a = rng.standard_normal(50)
        b = rng.standard_normal(50) + 5.0
        assert welch_t_test(a, b) < 1e-6
        assert welch_t_test(b, a, tail="greater") < 1e-6
        assert welch_t_test(a, b, tail="greater") > 0.999

    def test_matches_quadrature_oracle(self, rng):
        for _ in range(20):
            a = rng.standard_normal(int(rng.integers(5, 30))) * 2 + 1
            b = rng.standard_normal(int(rng.integers(5, 30)))
            t, dof = welch_stat(a, b)
            assert welch_t_test(a, b) == pytest.approx(
                t_pvalue_by_quadrature(t, dof, "two"), abs=1e-6)
            assert welch_t_test(a, b, tail="greater") == pytest.approx(
                t_pvalue_by_quadrature(t, dof, "greater"), abs=1e-6)

    def test_matches_scipy(self, rng):
        a = rng.standard_normal(16) + 0.5
        b = rng.standard_normal(14)
        expected = scipy_stats.ttest_ind(a, b, equal_var=False).pvalue
        assert welch_t_test(a, b) == pytest.approx(expected, abs=1e-12)

    def test_degenerate_variance(self):
        with pytest.raises(NumericalError):
            welch_t_test([1.0, 1.0], [1.0, 1.0])
