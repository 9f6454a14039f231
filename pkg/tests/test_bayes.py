import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from betageom.bayes import BetaPrior, empirical_prior, posterior, shrinkage_check
from betageom.errors import DomainError, EstimationError
from betageom.estimate import Diagnostics, WaitSample, fit_mle, fit_mme
from betageom.model import BetaGeometricLaw
from betageom.sampling import SeedSpec, sample_bg

SUMMARY = WaitSample.from_summary(3767, 78112)


def test_moment_prior_posterior_mean():
    post = posterior(BetaPrior(20.4669, 403.663), SUMMARY)
    assert post.mean == pytest.approx(0.0460185, abs=5e-8)
    assert (post.a_post, post.b_post) == (3767 + 20.4669, 78112 + 403.663)


def test_ml_prior_posterior_mean():
    # reference value 0.04601841; the conjugate update gives 0.04601851
    post = posterior(BetaPrior(20.94735, 413.6093), SUMMARY)
    assert post.mean == pytest.approx(0.046018511, abs=1e-9)


def test_uniform_prior_one_immediate_conception():
    post = posterior(BetaPrior(1, 1), WaitSample.from_delays([0]))
    assert (post.a_post, post.b_post) == (2, 1)
    assert post.mean == pytest.approx(2 / 3, rel=1e-15)


def test_beta_2_1_credible_interval():
    # CDF of Beta(2, 1) is t^2
    lo, hi = posterior(BetaPrior(1, 1), WaitSample.from_delays([0])).credible_interval
    assert lo**2 == pytest.approx(0.025, abs=1e-6)
    assert hi**2 == pytest.approx(0.975, abs=1e-6)
    assert lo == pytest.approx(math.sqrt(0.025), abs=1e-12)


def test_report_is_posterior_mean():
    post = posterior(BetaPrior(3.5, 7.25), WaitSample.from_delays([0, 4, 9, 2]), gamma=0.1)
    assert post.mean == post.a_post / (post.a_post + post.b_post)
    assert post.to_dict()["theta_hat"] == post.mean
    assert post.gamma == 0.1


def test_conjugacy_split_sample():
    delays = sample_bg(BetaGeometricLaw(4, 12), SeedSpec(1, 1), 400)
    prior = BetaPrior(2.0, 5.0)
    first = posterior(prior, WaitSample.from_delays(delays[:150]))
    second = posterior(BetaPrior(first.a_post, first.b_post), WaitSample.from_delays(delays[150:]))
    whole = posterior(prior, WaitSample.from_delays(delays))
    assert (second.a_post, second.b_post) == (whole.a_post, whole.b_post)


def test_shrinkage_on_summary():
    w = shrinkage_check(BetaPrior(20.4669, 403.663), SUMMARY)
    assert w.prior_mean == pytest.approx(0.04826, abs=5e-6)
    assert w.data_mean == pytest.approx(0.04601, abs=5e-6)
    assert w.posterior_mean == pytest.approx(0.046019, abs=5e-7)
    assert w.data_mean <= w.posterior_mean <= w.prior_mean


def test_shrinkage_equal_means():
    w = shrinkage_check(BetaPrior(1, 4), WaitSample.from_summary(10, 40))
    assert w.prior_mean == pytest.approx(w.posterior_mean) == pytest.approx(w.data_mean)


def test_weak_data_returns_prior():
    w = shrinkage_check(BetaPrior(1e9, 3e9), WaitSample.from_summary(1, 0))
    assert w.posterior_mean == pytest.approx(w.prior_mean, rel=1e-8)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(1e-3, 1e4),
    st.floats(1e-3, 1e4),
    st.integers(1, 10**6),
    st.integers(0, 10**8),
)
def test_shrinkage_property(mu, nu, n, sum_x):
    w = shrinkage_check(BetaPrior(mu, nu), WaitSample.from_summary(n, sum_x))
    lo, hi = sorted((w.prior_mean, w.data_mean))
    assert lo - 1e-14 <= w.posterior_mean <= hi + 1e-14


@pytest.mark.parametrize("mu, nu", [(0, 1), (1, -2), (math.nan, 1), (1, math.inf)])
def test_invalid_prior(mu, nu):
    with pytest.raises(DomainError):
        BetaPrior(mu, nu)


def test_invalid_gamma():
    with pytest.raises(DomainError):
        posterior(BetaPrior(1, 1), SUMMARY, gamma=0)


def test_empirical_prior_from_fits(caplog):
    s = WaitSample.from_delays(sample_bg(BetaGeometricLaw(4, 36), SeedSpec(2, 0), 1000))
    with caplog.at_level(logging.INFO, logger="betageom.bayes"):
        p1 = empirical_prior(fit_mme(s, n_boot=0))
        p2 = empirical_prior(fit_mle(s))
    assert p1.source == "MME" and p2.source == "MLE"
    assert "empirical prior" in caplog.text
    assert p2.mu == fit_mle(s).alpha_hat


def test_empirical_prior_reproduces_reference_pipeline():
    mme = fit_mme(WaitSample.from_delays(sample_bg(BetaGeometricLaw(4, 36), SeedSpec(), 500)), n_boot=0)
    reference = mme.__class__(**{**mme.__dict__, "alpha_hat": 20.4669, "beta_hat": 403.663})
    prior = empirical_prior(reference)
    assert (prior.mu, prior.nu) == (20.4669, 403.663)
    assert posterior(prior, SUMMARY).mean == pytest.approx(0.0460185, abs=5e-8)


def test_empirical_prior_rejects_unconverged():
    fit = fit_mme(WaitSample.from_delays(sample_bg(BetaGeometricLaw(4, 12), SeedSpec(), 300)), n_boot=0)
    bad = fit.__class__(**{**fit.__dict__, "diagnostics": Diagnostics(10, 1.0, False)})
    with pytest.raises(EstimationError):
        empirical_prior(bad)
