"""Geometric, beta and beta-geometric laws for conception delays.

Delays are counted in completed cycles, so every discrete law here lives on
x = 0, 1, 2, ...  A couple with fecundability ``theta`` waits
``X | theta ~ Geometric(theta)``; when ``theta ~ Beta(alpha, beta)`` across
couples, the marginal delay is beta-geometric with

    P(X = x) = B(alpha + 1, x + beta) / B(alpha, beta).

The Weinberg-Gladen form ``(pi, shape) = (alpha/(alpha+beta), 1/(alpha+beta))``
is exposed only as a parameter transform. Its textbook mean ``(1-shape)/(pi-shape)``
counts cycles from 1, i.e. it equals ``1 + mean_delay``.
"""

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, MomentDoesNotExist
from .specfn import log_beta

__all__ = [
    "GeometricLaw",
    "BetaLaw",
    "BetaGeometricLaw",
    "WeinbergGladenParams",
    "BGMoments",
    "SupportCap",
    "TruncationWarning",
    "geom_pmf",
    "bg_log_pmf",
    "bg_pmf",
    "bg_pmf_ratio",
    "bg_pmf_table",
    "bg_cdf",
    "bg_tail",
    "adaptive_cap",
    "bg_moments",
    "to_wg",
    "from_wg",
    "wg_mean",
    "wg_variance",
]

MAX_CAP = 10**7
TAIL_TOL = 1e-12


class TruncationWarning(UserWarning):
    """A summation over the support was cut off at ``MAX_CAP`` terms."""


def _check_shape(value, name):
    if not (isinstance(value, (int, float, np.floating, np.integer)) and math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be a finite positive number, got {value!r}")


def _check_delay(x):
    if isinstance(x, (bool, np.bool_)) or int(x) != x or x < 0:
        raise DomainError(f"delay must be a nonnegative integer, got {x!r}")
    return int(x)


@dataclass(frozen=True)
class GeometricLaw:
    """Constant fecundability ``theta``; pmf theta * (1 - theta)**x."""

    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and 0 < self.theta <= 1):
            raise DomainError(f"theta must lie in (0, 1], got {self.theta!r}")

    def mean(self):
        return (1 - self.theta) / self.theta

    def variance(self):
        return (1 - self.theta) / self.theta**2


@dataclass(frozen=True)
class BetaLaw:
    alpha: float
    beta: float

    def __post_init__(self):
        _check_shape(self.alpha, "alpha")
        _check_shape(self.beta, "beta")

    def mean(self):
        return self.alpha / (self.alpha + self.beta)

    def variance(self):
        s = self.alpha + self.beta
        return self.alpha * self.beta / (s * s * (s + 1))


@dataclass(frozen=True)
class BetaGeometricLaw:
    """Beta mixture of geometric delays, parameterized by the beta shapes."""

    alpha: float
    beta: float

    def __post_init__(self):
        _check_shape(self.alpha, "alpha")
        _check_shape(self.beta, "beta")

    @property
    def mixing(self):
        return BetaLaw(self.alpha, self.beta)

    def mean_fecundability(self):
        return self.alpha / (self.alpha + self.beta)

    def mean_delay(self):
        if self.alpha <= 1:
            raise MomentDoesNotExist(f"mean delay is infinite for alpha={self.alpha} <= 1")
        return self.beta / (self.alpha - 1)

    def second_raw_moment(self):
        a, b = self.alpha, self.beta
        if a <= 2:
            raise MomentDoesNotExist(f"second moment is infinite for alpha={a} <= 2")
        return b * (a + 2 * b) / ((a - 1) * (a - 2))

    def variance(self):
        return self.second_raw_moment() - self.mean_delay() ** 2


@dataclass(frozen=True)
class WeinbergGladenParams:
    """Mean fecundability ``pi`` and the shape ``1/(alpha+beta)``."""

    pi: float
    shape: float

    def __post_init__(self):
        if not (math.isfinite(self.pi) and 0 < self.pi < 1):
            raise DomainError(f"pi must lie in (0, 1), got {self.pi!r}")
        if not (math.isfinite(self.shape) and self.shape > 0):
            raise DomainError(f"shape must be positive, got {self.shape!r}")


class BGMoments(NamedTuple):
    mean_delay: float
    second_raw_moment: float
    variance: float


@dataclass(frozen=True)
class SupportCap:
    """Summation cap and the exact probability mass lying beyond it."""

    cap: int
    tail_bound: float
    truncated: bool


def geom_pmf(law, x):
    x = _check_delay(x)
    if law.theta == 1:
        return 1.0 if x == 0 else 0.0
    return law.theta * (1 - law.theta) ** x


def bg_log_pmf(law, x):
    """ln P(X = x) computed as a difference of log-beta values.

    ``x`` may be an integer or an integer array.
    """
    arr = np.asarray(x)
    if arr.ndim == 0:
        x = _check_delay(x)
        return log_beta(law.alpha + 1, x + law.beta) - log_beta(law.alpha, law.beta)
    if arr.size and (np.any(arr < 0) or np.any(arr != np.floor(arr))):
        raise DomainError("delays must be nonnegative integers")
    return log_beta(law.alpha + 1, arr + law.beta) - log_beta(law.alpha, law.beta)


def bg_pmf(law, x):
    return np.exp(bg_log_pmf(law, x))


def bg_pmf_ratio(law, x):
    """P(X = x + 1) / P(X = x) = (x + beta) / (x + alpha + beta + 1)."""
    x = _check_delay(x)
    return (x + law.beta) / (x + law.alpha + law.beta + 1)


def _pmf_chunks(law, x_max, chunk=1 << 20):
    """Yield pmf values at 0..x_max in blocks, via the ratio recurrence."""
    log_p0 = math.log(law.alpha / (law.alpha + law.beta))
    start = 0
    while start <= x_max:
        stop = min(x_max, start + chunk - 1)
        k = np.arange(start, stop, dtype=float)
        steps = np.log((k + law.beta) / (k + law.alpha + law.beta + 1))
        log_p = np.empty(stop - start + 1)
        log_p[0] = log_p0
        log_p[1:] = log_p0 + np.cumsum(steps)
        yield np.exp(log_p)
        # seed the next block from the recurrence
        log_p0 = log_p[-1] + math.log((stop + law.beta) / (stop + law.alpha + law.beta + 1))
        start = stop + 1


def bg_pmf_table(law, x_max):
    """pmf at 0..x_max via the ratio recurrence, seeded by the exact value at 0."""
    x_max = _check_delay(x_max)
    return np.concatenate(list(_pmf_chunks(law, x_max)))


def bg_tail(law, x):
    """P(X > x), exactly pmf(x) * (x + beta) / alpha."""
    x = _check_delay(x)
    return math.exp(log_beta(law.alpha, law.beta + x + 1) - log_beta(law.alpha, law.beta))


def adaptive_cap(law, tol=TAIL_TOL, limit=MAX_CAP):
    """Smallest x whose tail mass P(X > x) falls below ``tol``, capped at ``limit``.

    The tail is decreasing in x, so the cap is found by doubling then bisection.
    """
    if bg_tail(law, 0) < tol:
        return SupportCap(0, bg_tail(law, 0), False)
    hi = 1
    while hi < limit and bg_tail(law, hi) >= tol:
        hi *= 2
    if hi >= limit and bg_tail(law, limit) >= tol:
        return SupportCap(limit, bg_tail(law, limit), True)
    hi = min(hi, limit)
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if bg_tail(law, mid) < tol:
            hi = mid
        else:
            lo = mid
    return SupportCap(hi, bg_tail(law, hi), False)


def bg_cdf(law, x):
    """P(X <= x) by summing the pmf over 0..x.

    Sums longer than ``MAX_CAP`` terms stop there and emit a
    :class:`TruncationWarning` carrying the neglected mass.
    """
    x = _check_delay(x)
    if x > MAX_CAP:
        err = bg_tail(law, MAX_CAP)
        warnings.warn(
            f"CDF summed to {MAX_CAP} terms; neglected mass {err:.3e}",
            TruncationWarning,
            stacklevel=2,
        )
        x = MAX_CAP
    return float(min(1.0, math.fsum(math.fsum(block) for block in _pmf_chunks(law, x))))


def bg_moments(law):
    """(mean delay, second raw moment, variance); requires alpha > 2."""
    if law.alpha <= 2:
        if law.alpha > 1:
            raise MomentDoesNotExist(
                f"only the mean delay exists for alpha={law.alpha} <= 2; use law.mean_delay()"
            )
        raise MomentDoesNotExist(f"no moments exist for alpha={law.alpha} <= 1")
    m1 = law.mean_delay()
    m2 = law.second_raw_moment()
    return BGMoments(m1, m2, m2 - m1 * m1)


def to_wg(law):
    s = law.alpha + law.beta
    return WeinbergGladenParams(pi=law.alpha / s, shape=1 / s)


def from_wg(params):
    total = 1 / params.shape
    return BetaGeometricLaw(alpha=params.pi * total, beta=(1 - params.pi) * total)


def wg_mean(params):
    """Mean cycle of conception counted from 1; equals ``1 + mean_delay``."""
    if params.pi <= params.shape:
        raise MomentDoesNotExist("WG mean requires pi > shape (alpha > 1)")
    return (1 - params.shape) / (params.pi - params.shape)


def wg_variance(params):
    pi, s = params.pi, params.shape
    if pi <= 2 * s:
        raise MomentDoesNotExist("WG variance requires pi > 2 * shape (alpha > 2)")
    return pi * (1 - pi) * (1 - s) / ((pi - s) ** 2 * (pi - 2 * s))
