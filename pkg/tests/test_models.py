import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gammaln

import pdikit as pk
from pdikit import datasets, models


def gamma_logpdf(x, shape, rate):
    return shape * np.log(rate) - gammaln(shape) + (shape - 1) * np.log(x) - rate * x


class TestNB2:
    def test_hand_values(self):
        assert models.nb2_log_pmf(0, 1.0, 1.0) == pytest.approx(math.log(0.5), abs=1e-12)
        assert models.nb2_log_pmf(1, 1.0, 1.0) == pytest.approx(math.log(0.25), abs=1e-12)

    def test_normalization_brute_force(self):
        xs = np.arange(0, 2001)
        total = np.exp(models.nb2_log_pmf(xs, 5.0, 2.0)).sum()
        assert total == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("mu,phi", [(0.5, 0.3), (5.0, 2.0), (50.0, 1.0), (20.0, 400.0)])
    def test_normalization_grid(self, mu, phi):
        cutoff = int(mu + 60.0 * math.sqrt(mu + mu * mu / phi)) + 100
        xs = np.arange(0, cutoff)
        total = np.exp(models.nb2_log_pmf(xs, mu, phi)).sum()
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_moments_match_parameterization(self):
        # Gamma-Poisson mixture representation of the same distribution.
        mu, phi, n = 7.0, 1.5, 400000
        rng = np.random.default_rng(10)
        x = rng.poisson(rng.gamma(phi, mu / phi, size=n))
        se_mean = x.std(ddof=1) / math.sqrt(n)
        assert abs(x.mean() - mu) < 3 * se_mean
        dev2 = (x - x.mean()) ** 2
        se_var = dev2.std(ddof=1) / math.sqrt(n)
        assert abs(x.var(ddof=1) - (mu + mu * mu / phi)) < 3 * se_var

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            models.nb2_log_pmf(0, -1.0, 1.0)
        with pytest.raises(ValueError):
            models.nb2_log_pmf(0.5, 1.0, 1.0)
        with pytest.raises(ValueError):
            models.nb2_log_pmf(0, np.inf, 1.0)


class TestMixture:
    def test_degenerate_weight(self):
        v = models.mixture_pointwise_log_lik(3, (1.0, 0.0, 0.0), (2.0, 9.0, 30.0), (1.0, 1.0, 1.0))
        assert v == pytest.approx(models.nb2_log_pmf(3, 2.0, 1.0), rel=1e-12)

    def test_equal_components_collapse(self):
        v = models.mixture_pointwise_log_lik(4, (0.3, 0.3, 0.4), (6.0, 6.0, 6.0), (2.0, 2.0, 2.0))
        assert v == pytest.approx(models.nb2_log_pmf(4, 6.0, 2.0), rel=1e-12)

    def test_hand_value_two_component(self):
        # 0.5 * NB2(0;1,1) + 0.5 * NB2(0;10,1) = 0.5*0.5 + 0.5/11
        v = models.mixture_pointwise_log_lik(0, (0.5, 0.5, 0.0), (1.0, 10.0, 1.0), (1.0, 1.0, 1.0))
        assert v == pytest.approx(math.log(0.25 + 0.5 / 11.0), abs=1e-12)
        assert v == pytest.approx(-1.219240, abs=1e-6)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(4)
        pi = rng.dirichlet(np.ones(3))
        mu = rng.gamma(5, 2, size=3)
        phi = rng.gamma(2, 1, size=3)
        base = models.mixture_pointwise_log_lik(6, pi, mu, phi)
        perm = [2, 0, 1]
        assert models.mixture_pointwise_log_lik(
            6, pi[perm], mu[perm], phi[perm]
        ) == pytest.approx(base, rel=1e-12)


class TestMomentMatch:
    def test_fixture(self):
        data = np.array([2.0, 6.0])  # mean 4, sample variance 8
        assert models.moment_match_mu_prior(data) == (2.0, 0.5)

    def test_poisson_boundary(self):
        # mean == variance == m gives shape m, rate 1
        data = np.array([3.0, 5.0, 4.0])  # mean 4, var 1 -> scale to var 4
        data = (data - 4.0) * 2.0 + 4.0  # mean 4, var 4
        shape, rate = models.moment_match_mu_prior(data)
        assert shape == pytest.approx(4.0)
        assert rate == pytest.approx(1.0)

    def test_presidents_round_trip(self):
        days = datasets.presidents_days()
        shape, rate = models.moment_match_mu_prior(days)
        assert shape / rate == pytest.approx(days.mean(), rel=1e-12)
        assert shape / rate**2 == pytest.approx(days.var(ddof=1), rel=1e-12)

    def test_zero_variance_rejected(self):
        with pytest.raises(ValueError):
            models.moment_match_mu_prior(np.full(5, 3.0))


class TestDatasets:
    def test_shape_and_ids(self):
        days = datasets.presidents_days()
        ids = datasets.presidents_ids()
        assert days.size == 43
        assert len(ids) == 43
        assert len(set(ids)) == 43
        assert ids[8] == "Harrison-09" and days[8] == 31
        assert ids[31] == "Roosevelt-32" and days[31] == 4452
        assert ids[19] == "Garfield-20" and days[19] == 199


class TestNB2MixtureModel:
    def test_factorization_identity(self):
        days = datasets.presidents_days()
        model = models.nb2_mixture_model(days)
        rng = np.random.default_rng(1)
        for _ in range(5):
            z = rng.normal(scale=0.5, size=model.dim)
            theta = model.transform.constrain(
                model.transform.unconstrain(model.prior_mean) + z
            )
            total = model.pointwise_row(theta).sum()
            assert model.log_joint(theta) == pytest.approx(
                model.log_prior(theta) + total, rel=1e-10
            )

    def test_prior_mean_layout(self):
        days = datasets.presidents_days()
        model = models.nb2_mixture_model(days)
        assert model.dim == 8
        assert np.allclose(model.prior_mean[:3], 1 / 3)
        assert model.prior_mean[3] == pytest.approx(days.mean())
        assert model.prior_mean[6] == pytest.approx(100.0)

    def test_relabel_by_dispersion(self):
        # two draws with swapped labels; key mu + mu^2/phi
        draw_a = [0.2, 0.3, 0.5, 1461.0, 2896.0, 1578.0, 470.0, 509.0, 1.3]
        draw_b = [0.5, 0.3, 0.2, 1578.0, 2896.0, 1461.0, 1.3, 509.0, 470.0]
        out = models.relabel_by_dispersion(np.array([draw_a, draw_b]))
        assert np.allclose(out[0], out[1])
        assert np.allclose(out[0][3:6], [1461.0, 2896.0, 1578.0])
        assert np.allclose(out[0][:3], [0.2, 0.3, 0.5])

    def test_rejects_non_counts(self):
        with pytest.raises(ValueError):
            models.nb2_mixture_model(np.array([1.5, 2.0]))


class TestGammaToy:
    def test_posterior_predictive_matches_quadrature(self):
        data = models.simulate_toy_data(10, seed=123)
        a_post, b_post = pk.conjugate_gamma_posterior(data, 1.0, 1.0, 5.0)
        for x in (0.5, 5.0, 15.0):
            closed = models.toy_posterior_predictive_logpdf(x, data)
            val, _ = quad(
                lambda b: np.exp(gamma_logpdf(x, 5.0, b) + gamma_logpdf(b, a_post, b_post)),
                0,
                np.inf,
            )
            assert closed == pytest.approx(math.log(val), abs=1e-8)

    def test_posterior_predictive_normalizes(self):
        data = models.simulate_toy_data(10, seed=123)
        total, _ = quad(
            lambda x: np.exp(models.toy_posterior_predictive_logpdf(x, data)),
            0,
            np.inf,
        )
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_posterior_predictive_matches_monte_carlo(self):
        data = models.simulate_toy_data(10, seed=123)
        draws = pk.conjugate_gamma_draws(data, 1.0, 1.0, 5.0, 20000, seed=77)
        beta = draws.draws[:, 0]
        for x in (0.5, 5.0, 15.0):
            col = gamma_logpdf(x, 5.0, beta)
            mc = pk.log_posterior_predictive(col)
            se = pk.log_posterior_predictive_mcse(col)
            closed = models.toy_posterior_predictive_logpdf(x, data)
            assert abs(mc - closed) < 3 * se

    def test_eval_points_swap_columns_not_posterior(self):
        data = models.simulate_toy_data(6, seed=0)
        grid = np.array([1.0, 2.0, 3.0])
        model = models.gamma_toy_model(data, eval_points=grid)
        assert model.data_count == 3
        theta = np.array([0.9])
        assert model.pointwise_row(theta) == pytest.approx(
            gamma_logpdf(grid, 5.0, 0.9), rel=1e-12
        )
        # log_joint still conditions on the original 6 observations
        base = models.gamma_toy_model(data)
        assert model.log_joint(theta) == pytest.approx(base.log_joint(theta), rel=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            models.gamma_toy_model(np.array([1.0, -1.0]))
        with pytest.raises(ValueError):
            models.toy_posterior_predictive_logpdf(0.0, np.array([1.0]))

    def test_factorization_identity(self):
        data = models.simulate_toy_data(7, seed=3)
        model = models.gamma_toy_model(data)
        for beta in (0.3, 1.0, 2.7):
            theta = np.array([beta])
            assert model.log_joint(theta) == pytest.approx(
                model.log_prior(theta) + model.pointwise_row(theta).sum(), rel=1e-10
            )


class TestLogSigmoid:
    def test_zero(self):
        assert models.log_sigmoid(0.0) == pytest.approx(math.log(0.5), abs=1e-15)

    def test_large_positive_stable_form(self):
        assert models.log_sigmoid(35.0) == -math.log1p(math.exp(-35.0))
        assert models.log_sigmoid(35.0) != 0.0

    def test_large_negative_linear_tail(self):
        v = models.log_sigmoid(-35.0)
        assert np.isfinite(v)
        assert v == pytest.approx(-35.0, abs=1e-12)


class TestHierLogReg:
    def _table(self, n=60, variant="base", seed=0):
        return models.simulate_votes(n, seed=seed, variant=variant)

    def test_pointwise_values(self):
        table, _ = self._table()
        model = models.hier_logreg_model(table, "base")
        theta = model.prior_mean.copy()
        theta[3] = 1.0  # sigma_state irrelevant to the likelihood path
        row = model.pointwise_row(theta)
        # all latents zero: every observation has probability 1/2
        assert np.allclose(row, math.log(0.5))

    def test_factorization_identity(self):
        for variant in models.HIER_VARIANTS:
            table, _ = self._table(variant=variant, seed=2)
            model = models.hier_logreg_model(table, variant)
            rng = np.random.default_rng(5)
            z = model.transform.unconstrain(model.prior_mean) + 0.3 * rng.standard_normal(
                model.dim
            )
            theta = model.transform.constrain(z)
            assert model.log_joint(theta) == pytest.approx(
                model.log_prior(theta) + model.pointwise_row(theta).sum(), rel=1e-10
            )

    def test_variant_needs_extra_column(self):
        table, _ = self._table(variant="base")
        with pytest.raises(ValueError):
            models.hier_logreg_model(table, "with_age")

    def test_vote_table_validation(self):
        with pytest.raises(ValueError):
            models.VoteTable(
                vote=np.array([0, 2]),
                female=np.array([0, 1]),
                black=np.array([0, 0]),
                state=np.array([0, 0]),
                state_codes=("aa",),
            )

    def test_synthetic_generator_truth_and_shapes(self):
        table, truth = models.simulate_votes(500, seed=1, variant="with_age")
        assert table.n == 500
        assert table.extra is not None
        assert truth["beta_black"] == -2.0
        assert len(truth["alpha_age"]) == len(table.extra_codes)

    def test_sign_recovery_smallish(self):
        # quick version of the acceptance check: N=1200, short chain
        table, truth = models.simulate_votes(1200, seed=11)
        model = models.hier_logreg_model(table, "base")
        d = pk.adaptive_rw_metropolis(
            model, pk.SamplerConfig(warmup_steps=800, kept_draws=400, seed=5)
        )
        assert d.posterior_mean[0] < 0  # beta_female
        assert d.posterior_mean[1] < 0  # beta_black
