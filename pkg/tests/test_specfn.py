import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from betageom.errors import DomainError
from betageom.specfn import KERNEL_BUDGET, AccuracyBudget, digamma, log_beta, log_gamma, trigamma

GRID = [0.1, 0.5, 1, 2, 10, 100]


@pytest.mark.parametrize(
    "x, expected",
    [
        (1.0, 0.0),
        (0.5, float(mp.log(mp.sqrt(mp.pi)))),
        (10.0, math.log(362880)),
    ],
)
def test_log_gamma_reference(x, expected):
    assert KERNEL_BUDGET.close(log_gamma(x), expected)


@pytest.mark.parametrize(
    "x, expected",
    [
        (1.0, -float(mp.euler)),
        (2.0, 1 - float(mp.euler)),
        (0.5, float(-mp.euler - 2 * mp.log(2))),
    ],
)
def test_digamma_reference(x, expected):
    assert KERNEL_BUDGET.close(digamma(x), expected)


@pytest.mark.parametrize(
    "x, expected",
    [(1.0, math.pi**2 / 6), (2.0, math.pi**2 / 6 - 1), (10.0, float(mp.psi(1, 10)))],
)
def test_trigamma_reference(x, expected):
    assert KERNEL_BUDGET.close(trigamma(x), expected)


def test_spot_values_against_printed_digits():
    assert log_gamma(0.5) == pytest.approx(0.5723649429, abs=1e-10)
    assert log_gamma(10) == pytest.approx(12.8018274801, abs=1e-10)
    assert digamma(0.5) == pytest.approx(-1.9635100260, abs=1e-10)
    assert trigamma(10) == pytest.approx(0.1051663357, abs=1e-10)


def test_log_beta_values():
    assert log_beta(1, 1) == 0.0
    assert KERNEL_BUDGET.close(log_beta(2, 3), math.log(1 / 12))


@given(st.floats(1e-3, 1e6), st.floats(1e-3, 1e6))
def test_log_beta_symmetric_exactly(a, b):
    assert log_beta(a, b) == log_beta(b, a)


@pytest.mark.parametrize("x", np.geomspace(1e-3, 1e6, 25))
def test_kernels_match_mpmath_over_budget_range(x):
    assert KERNEL_BUDGET.close(log_gamma(x), float(mp.loggamma(x)))
    assert KERNEL_BUDGET.close(digamma(x), float(mp.digamma(x)))
    assert KERNEL_BUDGET.close(trigamma(x), float(mp.psi(1, x)))


@pytest.mark.parametrize("x", GRID)
def test_recurrences(x):
    assert digamma(x + 1) - digamma(x) == pytest.approx(1 / x, rel=1e-10)
    assert trigamma(x + 1) - trigamma(x) == pytest.approx(-1 / x**2, rel=1e-10)


@pytest.mark.parametrize("x", np.geomspace(0.1, 1e4, 15))
def test_derivative_chain_by_finite_differences(x):
    h = 1e-6 * max(1.0, x)
    fd_psi = (log_gamma(x + h) - log_gamma(x - h)) / (2 * h)
    fd_trigamma = (digamma(x + h) - digamma(x - h)) / (2 * h)
    assert fd_psi == pytest.approx(digamma(x), rel=1e-5, abs=1e-9)
    assert fd_trigamma == pytest.approx(trigamma(x), rel=1e-5)


def test_arrays_are_accepted():
    x = np.array([0.5, 1.0, 10.0])
    np.testing.assert_allclose(digamma(x + 1) - digamma(x), 1 / x, rtol=1e-12)
    assert isinstance(log_gamma(2.0), float)


@pytest.mark.parametrize("fn", [log_gamma, digamma, trigamma])
@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_domain_errors(fn, bad):
    with pytest.raises(DomainError):
        fn(bad)
    with pytest.raises(DomainError):
        log_beta(1.0, bad)


def test_accuracy_budget_validation():
    with pytest.raises(DomainError):
        AccuracyBudget(0.0, 1e-12)
    assert KERNEL_BUDGET.rel_tol <= 1e-12


def test_log_beta_lopsided_arguments_against_mpmath():
    rng = np.random.default_rng(11)
    pairs = list(zip(10 ** rng.uniform(-3, 6, 400), 10 ** rng.uniform(-3, 6, 400)))
    pairs += [(1, 516286), (2, 516287), (0.5, 1e6), (20.9, 78112), (9.99, 10.01)]
    for a, b in pairs:
        ref = float(mp.log(mp.beta(a, b)))
        assert KERNEL_BUDGET.close(log_beta(a, b), ref), (a, b)


def test_log_beta_broadcasts():
    b = np.array([0.5, 3.0, 50.0, 5e5])
    np.testing.assert_allclose(log_beta(2.0, b), [float(mp.log(mp.beta(2, x))) for x in b], rtol=1e-13)
