"""Conjugate beta-prior inference for a single fecundability.

Treating every couple as sharing one ``theta``, the geometric likelihood is
``theta**n * (1 - theta)**sum_x``. A Beta(mu, nu) prior therefore updates to

    Beta(mu + n, nu + sum_x),

whose mean ``(n + mu) / (n + mu + sum_x + nu)`` is the Bayes estimate under
squared-error loss. Only ``n`` and ``sum_x`` enter, so summary-only samples
are accepted.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

from scipy.special import betaincinv

from .errors import DomainError, EstimationError

__all__ = ["BetaPrior", "PosteriorSpec", "ShrinkageWitness", "posterior", "empirical_prior", "shrinkage_check"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BetaPrior:
    mu: float
    nu: float
    source: str = "explicit"

    def __post_init__(self):
        for name in ("mu", "nu"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"prior {name} must be finite and > 0, got {value!r}")

    @property
    def mean(self):
        return self.mu / (self.mu + self.nu)


@dataclass(frozen=True)
class PosteriorSpec:
    a_post: float
    b_post: float
    mean: float
    credible_interval: tuple
    gamma: float
    prior: BetaPrior

    def to_dict(self):
        return {
            "prior": {"mu": self.prior.mu, "nu": self.prior.nu, "source": self.prior.source},
            "a_post": self.a_post,
            "b_post": self.b_post,
            "theta_hat": self.mean,
            "credible_interval": list(self.credible_interval),
            "gamma": self.gamma,
        }


class ShrinkageWitness(NamedTuple):
    prior_mean: float
    posterior_mean: float
    data_mean: float


def posterior(prior, sample, gamma=0.05):
    """Beta posterior with its mean and equal-tailed ``1 - gamma`` credible interval."""
    if not 0 < gamma < 1:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma!r}")
    a = prior.mu + sample.n
    b = prior.nu + sample.sum_x
    lo, hi = betaincinv(a, b, [gamma / 2, 1 - gamma / 2])
    return PosteriorSpec(
        a_post=a,
        b_post=b,
        mean=a / (a + b),
        credible_interval=(float(lo), float(hi)),
        gamma=gamma,
        prior=prior,
    )


def empirical_prior(fit):
    """Beta(alpha_hat, beta_hat) taken from a fit of the same data.

    The data are used twice (once for the prior, once in the likelihood); the
    step is logged so that this is never silent.
    """
    if not fit.diagnostics.converged:
        raise EstimationError(f"{fit.method} fit did not converge; refusing to build a prior from it")
    log.info("empirical prior from %s fit: mu=%.6g, nu=%.6g", fit.method, fit.alpha_hat, fit.beta_hat)
    return BetaPrior(fit.alpha_hat, fit.beta_hat, source=fit.method)


def shrinkage_check(prior, sample):
    """Return (prior mean, posterior mean, n / (n + sum_x)) after checking betweenness."""
    post = posterior(prior, sample).mean
    data = sample.n / (sample.n + sample.sum_x)
    lo, hi = sorted((prior.mean, data))
    slack = 1e-14 * max(1.0, hi)
    if not lo - slack <= post <= hi + slack:
        raise AssertionError(f"posterior mean {post} outside [{lo}, {hi}]")
    return ShrinkageWitness(prior.mean, post, data)
