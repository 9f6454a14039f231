"""Moment and maximum-likelihood estimation for beta-geometric delays.

The log-likelihood of delays x_1..x_N is

    log L(alpha, beta) = sum_i log B(alpha + 1, x_i + beta) - N log B(alpha, beta)

and its score is

    U_alpha = N psi(alpha+1) + N psi(alpha+beta) - sum_i psi(x_i+alpha+beta+1) - N psi(alpha)
    U_beta  = sum_i psi(x_i+beta) + N psi(alpha+beta) - sum_i psi(x_i+alpha+beta+1) - N psi(beta)

(``psi(alpha+1) - psi(alpha)`` is evaluated as ``1/alpha``). Sums over
observations run over distinct delay values weighted by their counts.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import ndtri

from .errors import (
    ConvergenceError,
    DegenerateDataError,
    DivergenceError,
    DomainError,
    EstimationError,
    InvalidMomentRegion,
    MissingMomentsError,
)
from .model import BetaGeometricLaw, GeometricLaw
from .sampling import SeedSpec, generator
from .specfn import digamma, log_beta, trigamma

__all__ = [
    "WaitSample",
    "Diagnostics",
    "FitResult",
    "Score",
    "normal_quantile",
    "mme_point",
    "fit_mme",
    "log_likelihood",
    "score",
    "observed_information",
    "fit_mle",
    "fit_geometric",
]

log = logging.getLogger(__name__)

DEFAULT_GAMMA = 0.05
DEFAULT_BOOTSTRAP = 500
# iterates beyond these bounds (in alpha or beta) count as divergence
_LOG_BOUND = math.log(1e8)


@dataclass(frozen=True, eq=False)
class WaitSample:
    """Observed conception delays, or just their count and total.

    Build with :meth:`from_delays` or :meth:`from_summary`. Summary-only
    samples expose ``n``, ``sum_x`` and ``m1``; anything needing the second
    moment or the raw data raises :class:`MissingMomentsError`.
    """

    n: int
    sum_x: int
    delays: Optional[np.ndarray] = None
    sum_x2: Optional[int] = None

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("a sample needs n >= 1")
        if self.sum_x < 0:
            raise DomainError("sum_x must be nonnegative")

    @classmethod
    def from_delays(cls, delays):
        arr = np.asarray(delays)
        if arr.ndim != 1 or arr.size == 0:
            raise DomainError("delays must be a nonempty 1-d sequence")
        if arr.dtype.kind == "f":
            if not np.all(np.isfinite(arr)) or np.any(arr != np.floor(arr)):
                raise DomainError("delays must be integers")
        elif arr.dtype.kind not in "iu":
            raise DomainError("delays must be integers")
        arr = arr.astype(np.int64)
        if np.any(arr < 0):
            raise DomainError("delays must be nonnegative")
        arr.setflags(write=False)
        return cls(n=int(arr.size), sum_x=int(arr.sum()), delays=arr, sum_x2=int((arr * arr).sum()))

    @classmethod
    def from_summary(cls, n, sum_x):
        return cls(n=int(n), sum_x=int(sum_x))

    @property
    def has_data(self):
        return self.delays is not None

    @property
    def m1(self):
        return self.sum_x / self.n

    @property
    def m2(self):
        if self.sum_x2 is None:
            raise MissingMomentsError("summary-only sample has no second moment")
        return self.sum_x2 / self.n

    def require_data(self):
        if not self.has_data:
            raise MissingMomentsError("operation needs the individual delays, not just (n, sum_x)")

    @cached_property
    def tally(self):
        """Distinct delay values (as floats) and their counts."""
        self.require_data()
        values, counts = np.unique(self.delays, return_counts=True)
        return values.astype(float), counts.astype(float)


class Diagnostics(NamedTuple):
    iterations: int
    score_norm: float
    converged: bool
    bootstrap_resamples: int = 0
    bootstrap_failures: int = 0


@dataclass(frozen=True, eq=False)
class FitResult:
    """Point estimates, covariance and Wald intervals for one estimator.

    ``covariance`` is ``None`` when it was not requested (e.g. an MME fit with
    the bootstrap switched off); the standard errors and intervals are then NaN.
    """

    method: str
    alpha_hat: float
    beta_hat: float
    theta_hat: float
    covariance: Optional[np.ndarray]
    theta_se: float
    ci_alpha: tuple
    ci_beta: tuple
    ci_theta: tuple
    gamma: float
    log_likelihood: float
    diagnostics: Diagnostics = field(default_factory=lambda: Diagnostics(0, math.nan, True))

    @property
    def law(self):
        return BetaGeometricLaw(self.alpha_hat, self.beta_hat)

    @property
    def alpha_se(self):
        return math.nan if self.covariance is None else math.sqrt(self.covariance[0, 0])

    @property
    def beta_se(self):
        return math.nan if self.covariance is None else math.sqrt(self.covariance[1, 1])

    def to_dict(self):
        cov = None if self.covariance is None else self.covariance.tolist()
        return {
            "method": self.method,
            "alpha_hat": self.alpha_hat,
            "beta_hat": self.beta_hat,
            "theta_hat": self.theta_hat,
            "alpha_se": _json_float(self.alpha_se),
            "beta_se": _json_float(self.beta_se),
            "theta_se": _json_float(self.theta_se),
            "ci_alpha": [_json_float(v) for v in self.ci_alpha],
            "ci_beta": [_json_float(v) for v in self.ci_beta],
            "ci_theta": [_json_float(v) for v in self.ci_theta],
            "covariance": cov,
            "gamma": self.gamma,
            "log_likelihood": self.log_likelihood,
            "diagnostics": self.diagnostics._asdict(),
        }


class Score(NamedTuple):
    u_alpha: float
    u_beta: float


def _json_float(x):
    return None if x is None or not math.isfinite(x) else x


def normal_quantile(gamma):
    """Upper gamma/2 point of the standard normal."""
    if not 0 < gamma < 1:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma!r}")
    return float(ndtri(1 - gamma / 2))


def _wald(estimate, se, z):
    return (estimate - z * se, estimate + z * se)


def _theta_gradient(a, b):
    s = a + b
    return np.array([b / s**2, -a / s**2])


def mme_point(m1, m2):
    """Invert the first two raw moments to (alpha, beta).

    Raises :class:`InvalidMomentRegion` unless ``m2 - m1 - 2 m1**2 > 0`` and the
    resulting alpha exceeds 2 (otherwise the moments being matched do not exist).
    """
    denom = m2 - m1 - 2 * m1 * m1
    if not denom > 0:
        raise InvalidMomentRegion(
            f"no overdispersion relative to the geometric law (m2 - m1 - 2 m1^2 = {denom:.6g})"
        )
    alpha = 2 * (m2 - m1 * m1) / denom
    if not alpha > 2:
        raise InvalidMomentRegion(f"moment estimate alpha={alpha:.6g} <= 2, second moment would not exist")
    beta = m1 * (alpha - 1)
    if not beta > 0:
        raise InvalidMomentRegion("moment estimate of beta is not positive")
    return alpha, beta


def _bootstrap_mme(delays, n_boot, seed):
    rng = generator(seed)
    n = delays.size
    # keep each resample block around 4M entries
    block = max(1, min(n_boot, 4_000_000 // n))
    draws = []
    for start in range(0, n_boot, block):
        size = min(block, n_boot - start)
        resampled = delays[rng.integers(0, n, size=(size, n))].astype(float)
        m1 = resampled.mean(axis=1)
        m2 = (resampled * resampled).mean(axis=1)
        denom = m2 - m1 - 2 * m1 * m1
        with np.errstate(divide="ignore", invalid="ignore"):
            alpha = 2 * (m2 - m1 * m1) / denom
        ok = (denom > 0) & (alpha > 2) & (m1 > 0)
        draws.append(np.column_stack([alpha[ok], m1[ok] * (alpha[ok] - 1)]))
    return np.concatenate(draws)


def fit_mme(sample, gamma=DEFAULT_GAMMA, n_boot=DEFAULT_BOOTSTRAP, seed=None):
    """Method-of-moments fit.

    Closed-form moment matching has no standard covariance formula here, so
    the covariance and standard errors come from a seeded nonparametric
    bootstrap of ``n_boot`` resamples (pass ``n_boot=0`` to skip it). Bootstrap
    resamples that fall outside the valid moment region are dropped and counted.
    """
    sample.require_data()
    if sample.n < 2:
        raise DegenerateDataError("moment estimation needs n >= 2")
    alpha, beta = mme_point(sample.m1, sample.m2)
    theta = alpha / (alpha + beta)
    z = normal_quantile(gamma)

    cov = None
    theta_se = math.nan
    failures = 0
    if n_boot > 0:
        boot = _bootstrap_mme(sample.delays, n_boot, seed or SeedSpec())
        failures = n_boot - len(boot)
        if len(boot) >= 2:
            cov = np.cov(boot, rowvar=False)
            theta_se = float(np.std(boot[:, 0] / boot.sum(axis=1), ddof=1))
    se_a = math.nan if cov is None else math.sqrt(cov[0, 0])
    se_b = math.nan if cov is None else math.sqrt(cov[1, 1])
    law = BetaGeometricLaw(alpha, beta)
    u = score(sample, law)
    return FitResult(
        method="MME",
        alpha_hat=alpha,
        beta_hat=beta,
        theta_hat=theta,
        covariance=cov,
        theta_se=theta_se,
        ci_alpha=_wald(alpha, se_a, z),
        ci_beta=_wald(beta, se_b, z),
        ci_theta=_wald(theta, theta_se, z),
        gamma=gamma,
        log_likelihood=log_likelihood(sample, law),
        diagnostics=Diagnostics(0, max(abs(u.u_alpha), abs(u.u_beta)), True, n_boot, failures),
    )


def _loglik(values, counts, n, a, b):
    return float(np.dot(counts, log_beta(a + 1, values + b)) - n * log_beta(a, b))


def _loglik_noise(values, counts, n, a, b):
    """Rounding scale of :func:`_loglik`, from the magnitudes it sums."""
    scale = np.dot(counts, np.abs(log_beta(a + 1, values + b))) + n * abs(log_beta(a, b))
    return 64 * np.finfo(float).eps * float(scale)


def _score(values, counts, n, a, b):
    tail = np.dot(counts, digamma(values + a + b + 1))
    common = n * digamma(a + b) - tail
    u_a = n / a + common
    u_b = np.dot(counts, digamma(values + b)) + common - n * digamma(b)
    return float(u_a), float(u_b)


def _information(values, counts, n, a, b):
    tail = float(np.dot(counts, trigamma(values + a + b + 1)))
    t_ab = n * trigamma(a + b)
    d11 = n / (a * a) - t_ab + tail
    d22 = n * trigamma(b) - float(np.dot(counts, trigamma(values + b))) - t_ab + tail
    d12 = tail - t_ab
    return np.array([[d11, d12], [d12, d22]])


def log_likelihood(sample, law):
    """Sum of log-pmf values over the sample."""
    values, counts = sample.tally
    return _loglik(values, counts, sample.n, law.alpha, law.beta)


def score(sample, law):
    """Gradient of the log-likelihood in (alpha, beta)."""
    values, counts = sample.tally
    return Score(*_score(values, counts, sample.n, law.alpha, law.beta))


def observed_information(sample, law):
    """Negated Hessian of the log-likelihood in (alpha, beta), built from trigamma sums."""
    values, counts = sample.tally
    return _information(values, counts, sample.n, law.alpha, law.beta)


def _initial_point(sample):
    try:
        return mme_point(sample.m1, sample.m2)
    except InvalidMomentRegion:
        pass
    if sample.m1 > 0:
        # beta / (alpha - 1) = m1 at alpha = 2
        return 2.0, sample.m1
    return 1.0, 1.0


def _newton_direction(grad, hess):
    """Ascent direction from the log-parameter Hessian, regularized if not concave."""
    neg = -hess
    eig = np.linalg.eigvalsh(neg)
    if eig[0] <= 1e-12 * max(1.0, abs(eig[-1])):
        neg = neg + (abs(eig[0]) + 1e-6 * max(1.0, abs(eig[-1]))) * np.eye(2)
    step = np.linalg.solve(neg, grad)
    longest = np.max(np.abs(step))
    if longest > 2.0:
        step *= 2.0 / longest
    return step


def fit_mle(sample, init=None, gamma=DEFAULT_GAMMA, tol=1e-10, max_iter=500):
    """Maximum-likelihood fit by damped Newton on (log alpha, log beta).

    Each step is halved until the log-likelihood does not decrease, so
    iterates stay positive without constraints. Convergence requires
    ``max |score| <= tol * n``. The covariance is the inverse observed
    information at the optimum, and the mean-fecundability standard error
    comes from the delta method with gradient
    ``(beta, -alpha) / (alpha + beta)**2``.
    """
    sample.require_data()
    if sample.n < 2:
        raise DegenerateDataError("maximum likelihood needs n >= 2")
    if sample.sum_x == 0:
        raise DegenerateDataError("all delays are zero; the likelihood increases without bound in alpha")
    values, counts = sample.tally
    n = float(sample.n)

    a, b = (init.alpha, init.beta) if init is not None else _initial_point(sample)
    phi = np.log([a, b])
    ll = _loglik(values, counts, n, a, b)
    u = np.array(_score(values, counts, n, a, b))
    iterations = 0
    while np.max(np.abs(u)) > tol * n:
        if iterations >= max_iter:
            raise ConvergenceError(
                f"no convergence after {max_iter} iterations (|score| = {np.max(np.abs(u)):.3g})",
                last_iterate=BetaGeometricLaw(a, b),
                iterations=iterations,
            )
        iterations += 1
        grad = np.array([a * u[0], b * u[1]])
        hess = -np.outer([a, b], [a, b]) * _information(values, counts, n, a, b) + np.diag(grad)
        step = _newton_direction(grad, hess)
        t = 1.0
        for _ in range(60):
            cand = phi + t * step
            if np.any(np.abs(cand) > _LOG_BOUND):
                raise DivergenceError(
                    f"iterate left the parameter box at alpha={math.exp(cand[0]):.3g}, beta={math.exp(cand[1]):.3g}",
                    last_iterate=BetaGeometricLaw(a, b),
                    iterations=iterations,
                )
            ca, cb = np.exp(cand)
            cll = _loglik(values, counts, n, ca, cb)
            if cll > ll:
                break
            if cll >= ll - _loglik_noise(values, counts, n, ca, cb):
                # flat to rounding: take the step only if the score shrinks
                cu = np.array(_score(values, counts, n, ca, cb))
                if np.max(np.abs(cu)) < np.max(np.abs(u)):
                    break
            t *= 0.5
        else:
            raise ConvergenceError(
                f"line search failed (|score| = {np.max(np.abs(u)):.3g})",
                last_iterate=BetaGeometricLaw(a, b),
                iterations=iterations,
            )
        phi, a, b, ll = cand, ca, cb, cll
        u = np.array(_score(values, counts, n, a, b))

    info = _information(values, counts, n, a, b)
    try:
        np.linalg.cholesky(info)
    except np.linalg.LinAlgError:
        raise EstimationError("observed information is not positive definite at the optimum") from None
    cov = np.linalg.inv(info)
    cov = 0.5 * (cov + cov.T)
    g = _theta_gradient(a, b)
    theta_se = math.sqrt(float(g @ cov @ g))
    z = normal_quantile(gamma)
    theta = a / (a + b)
    return FitResult(
        method="MLE",
        alpha_hat=float(a),
        beta_hat=float(b),
        theta_hat=float(theta),
        covariance=cov,
        theta_se=theta_se,
        ci_alpha=_wald(a, math.sqrt(cov[0, 0]), z),
        ci_beta=_wald(b, math.sqrt(cov[1, 1]), z),
        ci_theta=_wald(theta, theta_se, z),
        gamma=gamma,
        log_likelihood=ll,
        diagnostics=Diagnostics(iterations, float(np.max(np.abs(u))), True),
    )


def fit_geometric(sample):
    """Homogeneous-fecundability baseline, theta = 1 / (m1 + 1)."""
    return GeometricLaw(1.0 / (sample.m1 + 1.0))
