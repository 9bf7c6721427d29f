import math

import numpy as np
import pytest
import scipy.linalg

from panelmort.design import ModelSpec, build_design
from panelmort.errors import (
    DegenerateFitError,
    NumericalError,
    RankDeficiencyError,
    SpecError,
)
from panelmort.estim import (
    aic,
    compare_models,
    cov_clustered,
    cov_ols,
    fit_model,
    fit_single_state,
    gls_fit,
    stars,
    wls_fit,
)

from conftest import make_dataset, make_design


class TestStars:
    @pytest.mark.parametrize(
        "p,mark",
        [(0.0005, "***"), (0.005, "**"), (0.03, "*"), (0.07, "†"), (0.2, ""), (0.1, "")],
    )
    def test_thresholds(self, p, mark):
        assert stars(p) == mark


class TestWlsFit:
    def test_weighted_mean(self):
        # intercept-only: beta is the weighted mean (0 + 3 + 1) / 5
        d = make_design([0.0, 1.0, 1.0], np.ones((3, 1)), w=[1.0, 3.0, 1.0])
        fit = wls_fit(d)
        assert fit.beta[0] == pytest.approx(4.0 / 5.0)

    def test_underdetermined(self):
        with pytest.raises(NumericalError):
            wls_fit(make_design([0.0, 1.0], np.column_stack([np.ones(2), [0.0, 1.0]])))

    def test_simple_regression(self):
        t = np.arange(6.0)
        y = 2.0 + 0.5 * t
        y[0] += 0.3
        y[5] -= 0.3
        fit = wls_fit(make_design(y, np.column_stack([np.ones(6), t])))
        expected = np.linalg.lstsq(np.column_stack([np.ones(6), t]), y, rcond=None)[0]
        np.testing.assert_allclose(fit.beta, expected, atol=1e-12)

    def test_exact_fit_has_no_aic(self):
        t = np.arange(5.0)
        fit = wls_fit(make_design(1.0 + 2.0 * t, np.column_stack([np.ones(5), t])))
        assert fit.aic is None and fit.loglik is None
        np.testing.assert_allclose(fit.residuals, 0.0, atol=1e-12)
        with pytest.raises(DegenerateFitError):
            aic(fit)

    def test_rank_deficient(self):
        X = np.column_stack([np.ones(6), np.arange(6.0), 2.0 * np.arange(6.0)])
        with pytest.raises(RankDeficiencyError):
            wls_fit(make_design(np.random.default_rng(0).standard_normal(6), X))

    def test_normal_equations(self):
        rng = np.random.default_rng(11)
        X = rng.standard_normal((30, 4))
        y = rng.standard_normal(30)
        w = rng.uniform(0.5, 5.0, 30)
        fit = wls_fit(make_design(y, X, w=w))
        # X' W (y - X beta) = 0
        np.testing.assert_allclose(X.T @ (w * fit.residuals), 0.0, atol=1e-9)

    def test_weight_scale_invariance(self):
        """Multiplying all weights by a constant leaves beta and the
        OLS covariance unchanged (sigma2 absorbs the factor)."""
        rng = np.random.default_rng(12)
        X = rng.standard_normal((25, 3))
        y = rng.standard_normal(25)
        w = rng.uniform(1.0, 4.0, 25)
        a = wls_fit(make_design(y, X, w=w))
        b = wls_fit(make_design(y, X, w=7.0 * w))
        np.testing.assert_allclose(a.beta, b.beta, atol=1e-10)
        np.testing.assert_allclose(a.cov_ols, b.cov_ols, atol=1e-10)


class TestCovariances:
    def _random_design(self, seed, n=40, k=3, g=5):
        rng = np.random.default_rng(seed)
        X = np.column_stack([np.ones(n), rng.standard_normal((n, k - 1))])
        y = rng.standard_normal(n)
        w = rng.uniform(0.5, 3.0, n)
        clusters = np.array([f"c{i % g}" for i in range(n)])
        return make_design(y, X, w=w, clusters=clusters)

    def test_cov_ols_dense_oracle(self):
        d = self._random_design(21)
        fit = wls_fit(d)
        W = np.diag(d.weights)
        expected = fit.sigma2 * np.linalg.inv(d.columns.T @ W @ d.columns)
        np.testing.assert_allclose(cov_ols(fit.sigma2, d), expected, atol=1e-10)

    def test_cov_clustered_brute_force(self):
        d = self._random_design(22)
        fit = wls_fit(d)
        n, k = d.columns.shape
        W = np.diag(d.weights)
        bread = np.linalg.inv(d.columns.T @ W @ d.columns)
        meat = np.zeros((k, k))
        for code in dict.fromkeys(d.clusters.tolist()):
            m = d.clusters == code
            s = d.columns[m].T @ W[np.ix_(m, m)] @ fit.residuals[m]
            meat += np.outer(s, s)
        g = 5
        expected = (g / (g - 1)) * ((n - 1) / (n - k)) * bread @ meat @ bread
        np.testing.assert_allclose(cov_clustered(fit.residuals, d), expected, atol=1e-10)

    def test_one_observation_per_cluster(self):
        """With G = n the sandwich reduces to an HC-style estimator."""
        d = self._random_design(23, n=20, g=20)
        fit = wls_fit(d)
        got = cov_clustered(fit.residuals, d)
        n, k = 20, 3
        W = np.diag(d.weights)
        bread = np.linalg.inv(d.columns.T @ W @ d.columns)
        meat = d.columns.T @ np.diag((d.weights * fit.residuals) ** 2) @ d.columns
        expected = (n / (n - 1)) * ((n - 1) / (n - k)) * bread @ meat @ bread
        np.testing.assert_allclose(got, expected, atol=1e-10)

    def test_single_cluster_rejected(self):
        d = make_design(np.arange(5.0), np.ones((5, 1)))
        with pytest.raises(NumericalError):
            cov_clustered(np.zeros(5), d)

    def test_zero_residuals_give_zero_sandwich(self):
        d = self._random_design(24)
        np.testing.assert_allclose(cov_clustered(np.zeros(40), d), 0.0, atol=1e-15)


class TestAic:
    def test_frozen_value(self):
        """n=10, k=2, unit weights, RSS exactly 10."""
        t = np.arange(10.0)
        X = np.column_stack([np.ones(10), t])
        # residual direction orthogonal to the column space, scaled to RSS 10
        r = t**2 - np.linalg.lstsq(X, t**2, rcond=None)[0] @ X.T
        r *= math.sqrt(10.0) / np.linalg.norm(r)
        fit = wls_fit(make_design(1.0 + 2.0 * t + r, X))
        assert float(fit.residuals @ fit.residuals) == pytest.approx(10.0)
        expected = 10.0 * (math.log(2.0 * math.pi * 1.0) + 1.0) + 2.0 * (2 + 1)
        assert fit.aic == pytest.approx(expected, abs=1e-9)
        assert fit.aic == pytest.approx(34.378770664093453, abs=1e-9)

    def test_weights_enter_loglik(self):
        """Scaling weights by c shifts loglik by (n/2) log c once sigma2
        rescales; the frozen identity below checks the sum-log-w term."""
        rng = np.random.default_rng(31)
        X = np.column_stack([np.ones(12), rng.standard_normal(12)])
        y = rng.standard_normal(12)
        w = rng.uniform(0.5, 2.0, 12)
        base = wls_fit(make_design(y, X, w=w))
        scaled = wls_fit(make_design(y, X, w=4.0 * w))
        # RSS_w scales by 4, sigma2_ML by 4: the two log terms cancel to
        # + (n/2) log 4 net from the sum-log-w half
        assert scaled.loglik - base.loglik == pytest.approx(0.0, abs=1e-9)

    def test_nested_model_likelihood(self):
        """Adding a column never lowers the maximized likelihood."""
        rng = np.random.default_rng(32)
        X = rng.standard_normal((30, 3))
        y = rng.standard_normal(30)
        small = wls_fit(make_design(y, X[:, :2]))
        big = wls_fit(make_design(y, X))
        assert big.loglik >= small.loglik - 1e-10


class TestGlsFit:
    def _design(self, seed=41, n=24, k=3):
        rng = np.random.default_rng(seed)
        X = np.column_stack([np.ones(n), rng.standard_normal((n, k - 1))])
        y = rng.standard_normal(n)
        return make_design(y, X)

    def test_identity_sigma_is_ols(self):
        d = self._design()
        a = gls_fit(d, np.eye(24))
        b = wls_fit(d)
        np.testing.assert_allclose(a.beta, b.beta, atol=1e-10)
        np.testing.assert_allclose(a.cov_ols, b.cov_ols, atol=1e-10)

    def test_diagonal_sigma_reproduces_wls(self):
        rng = np.random.default_rng(42)
        X = np.column_stack([np.ones(20), rng.standard_normal((20, 2))])
        y = rng.standard_normal(20)
        w = rng.uniform(0.5, 4.0, 20)
        wls = wls_fit(make_design(y, X, w=w))
        gls = gls_fit(make_design(y, X), np.diag(1.0 / w))
        np.testing.assert_allclose(gls.beta, wls.beta, atol=1e-10)

    def test_ar1_prewhitening_oracle(self):
        """GLS under AR(1) covariance equals OLS on Sigma^(-1/2)-rotated
        rows, with the root built from an eigendecomposition."""
        d = self._design(43)
        rho = 0.6
        idx = np.arange(24)
        sigma = rho ** np.abs(idx[:, None] - idx[None, :])
        vals, vecs = np.linalg.eigh(sigma)
        root_inv = vecs @ np.diag(vals**-0.5) @ vecs.T
        Xt, yt = root_inv @ d.columns, root_inv @ d.response
        expected = np.linalg.lstsq(Xt, yt, rcond=None)[0]
        np.testing.assert_allclose(gls_fit(d, sigma).beta, expected, atol=1e-9)

    def test_bad_sigma(self):
        d = self._design(44)
        with pytest.raises(SpecError):
            gls_fit(d, np.eye(5))
        bad = np.eye(24)
        bad[0, 1] = 0.5  # asymmetric
        with pytest.raises(NumericalError):
            gls_fit(d, bad)
        with pytest.raises(NumericalError):
            gls_fit(d, -np.eye(24))


class TestFitModel:
    def test_recovers_planted_slope(self):
        data = make_dataset(n_states=8, n_years=20, seed=50, beta_u=-0.005, noise=0.001)
        mf = fit_model(data, ModelSpec("B", 2))
        eff = mf.effects["state_unemployment"]
        assert eff.effect_100beta == pytest.approx(-0.5, abs=0.05)
        assert mf.fit.n_clusters == 8
        assert mf.fit.dof_clustered == 7

    def test_effect_terms_follow_subtype(self):
        data = make_dataset(n_states=5, n_years=10, seed=51)
        assert set(fit_model(data, ModelSpec("B", 3)).effects) == {"national_unemployment"}
        assert set(fit_model(data, ModelSpec("B", 4)).effects) == {
            "state_unemployment",
            "national_unemployment",
        }

    def test_residuals_natural_scale(self):
        data = make_dataset(n_states=5, n_years=10, seed=52, noise=0.05)
        mf = fit_model(data, ModelSpec("B", 2))
        d = build_design(data, ModelSpec("B", 2))
        np.testing.assert_allclose(
            mf.fit.residuals, d.response - d.columns @ mf.fit.beta, atol=1e-12
        )
        series = mf.fit.residual_series()
        assert set(series) == set(data.state_codes)
        assert all(len(v) == 10 for v in series.values())


class TestFitSingleState:
    def test_subtype1_rejected(self):
        data = make_dataset(n_states=3, n_years=8)
        with pytest.raises(SpecError):
            fit_single_state(data, ModelSpec("B", 1), "S00")

    def test_exact_relation_recovery(self):
        data = make_dataset(n_states=3, n_years=12, seed=60, beta_u=-0.007, noise=0.0)
        got = fit_single_state(data, ModelSpec("B", 2), "S01")
        assert got == pytest.approx(-0.7, abs=1e-6)


class TestCompareModels:
    def test_groups_and_delta(self):
        data = make_dataset(n_states=6, n_years=15, seed=70, beta_u=-0.004, noise=0.03)
        rows = compare_models(
            data, [ModelSpec("B", 1), ModelSpec("L", 1), ModelSpec("D", 1), ModelSpec("HP", 1)]
        )
        groups = {r.label: r.aic_group for r in rows}
        assert groups == {
            "B1": "levels",
            "L1": "levels",
            "D1": "differences",
            "HP1": "hp(lambda=100)",
        }
        # one zero delta per group
        levels = [r for r in rows if r.aic_group == "levels"]
        assert min(r.delta_aic for r in levels) == 0.0
        assert all(r.delta_aic >= 0.0 for r in rows)
        singletons = [r for r in rows if r.aic_group != "levels"]
        assert all(r.delta_aic == 0.0 for r in singletons)

    def test_single_row(self):
        data = make_dataset(n_states=4, n_years=10, seed=71, noise=0.03)
        (row,) = compare_models(data, [ModelSpec("B", 2)])
        assert row.delta_aic == 0.0 and not row.year_effects

    def test_errors(self):
        data = make_dataset(n_states=4, n_years=10, series=("total", "cancer"))
        with pytest.raises(SpecError):
            compare_models(data, [])
        with pytest.raises(SpecError):
            compare_models(data, [ModelSpec("B", 2), ModelSpec("B", 2, series="cancer")])
