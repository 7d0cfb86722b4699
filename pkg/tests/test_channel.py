"""Ranked-gain channel model tests.

Oracles: exact order-statistic moment formulas (binomial expansion of the
ranked density), the analytic mixture identity, and distribution-level
Kolmogorov-Smirnov checks of the sampler against the analytic CDF.
"""

import math

import numpy as np
import pytest
from scipy import integrate
from scipy import special as sc

from noma_ec.channel import (
    GainBatch,
    joint_pdf_two,
    marginal_pdf_cdf,
    ordered_moment,
    ordered_pdf,
    sample_ordered,
)
from noma_ec.errors import DomainError
from noma_ec.special_functions import order_coefficient


def moment_by_expansion(m: int, M: int, p: float) -> float:
    """Independent moment oracle: expand (1-e^{-x})^{m-1} binomially, so
    E[x^p] = psi_m sum_k C(m-1,k)(-1)^k Gamma(1+p)/(M-m+1+k)^{1+p}."""
    psi = order_coefficient(m, M)
    total = 0.0
    for k in range(m):
        total += math.comb(m - 1, k) * (-1.0) ** k / (M - m + 1 + k) ** (1.0 + p)
    return psi * math.gamma(1.0 + p) * total


# ---------------------------------------------------------------------------
# sampler


def test_sampler_is_deterministic_and_sorted():
    a = sample_ordered(3, 1000, 42)
    b = sample_ordered(3, 1000, 42)
    c = sample_ordered(3, 1000, 43)
    assert np.array_equal(a.gains, b.gains)
    assert not np.array_equal(a.gains, c.gains)
    assert np.all(np.diff(a.gains, axis=1) >= 0.0)
    assert np.all(a.gains > 0.0)
    assert a.count == 1000 and a.M == 3 and a.seed == 42


def test_sampler_batch_is_readonly():
    batch = sample_ordered(2, 10, 1)
    with pytest.raises(ValueError):
        batch.gains[0, 0] = 1.0


def test_sampler_domain_errors():
    with pytest.raises(DomainError):
        sample_ordered(0, 10, 1)
    with pytest.raises(DomainError):
        sample_ordered(2, 0, 1)


def test_column_accessor():
    batch = sample_ordered(4, 100, 7)
    assert np.array_equal(batch.column(1), batch.gains[:, 0])
    assert np.array_equal(batch.column(4), batch.gains[:, 3])
    with pytest.raises(IndexError):
        batch.column(5)


@pytest.mark.parametrize("m,M", [(1, 2), (2, 2), (1, 4), (3, 4)])
def test_sampler_matches_analytic_cdf(m, M):
    # KS distance between the empirical rank-m CDF and the analytic
    # F_{m:M}(x) = sum_{j>=m} C(M,j) F^j (1-F)^{M-j}; threshold is the
    # alpha = 0.01 asymptotic critical value 1.628/sqrt(n)
    n = 100_000
    xs = np.sort(np.array(sample_ordered(M, n, 2024).gains[:, m - 1]))
    _, F = marginal_pdf_cdf(xs)
    cdf = np.zeros_like(xs)
    for j in range(m, M + 1):
        cdf += sc.comb(M, j) * F**j * (1.0 - F) ** (M - j)
    emp_hi = np.arange(1, n + 1) / n
    emp_lo = np.arange(0, n) / n
    ks = max(np.max(np.abs(emp_hi - cdf)), np.max(np.abs(emp_lo - cdf)))
    assert ks <= 1.628 / math.sqrt(n)


# ---------------------------------------------------------------------------
# densities


def test_marginal_pdf_cdf_values():
    pdf, cdf = marginal_pdf_cdf(0.0)
    assert pdf == 1.0 and cdf == 0.0
    pdf, cdf = marginal_pdf_cdf(1.0)
    assert abs(pdf - math.exp(-1)) <= 1e-15
    assert abs(cdf - (1 - math.exp(-1))) <= 1e-15
    with pytest.raises(DomainError):
        marginal_pdf_cdf(-1.0)


@pytest.mark.parametrize("m,M", [(1, 1), (1, 2), (2, 2), (2, 4), (4, 4)])
def test_ordered_pdf_normalizes(m, M):
    total, _ = integrate.quad(lambda x: ordered_pdf(m, M, x), 0.0, 60.0, limit=200)
    assert abs(total - 1.0) <= 1e-9


def test_ordered_pdf_mixture_identity():
    # averaging the rank densities recovers the unranked marginal:
    # (1/M) sum_m f_{m:M}(x) = e^{-x}
    xs = np.linspace(0.0, 8.0, 41)
    for M in (2, 4, 5):
        mix = sum(ordered_pdf(m, M, xs) for m in range(1, M + 1)) / M
        pdf, _ = marginal_pdf_cdf(xs)
        assert np.max(np.abs(mix - pdf)) <= 1e-12


def test_joint_pdf_two_normalizes_and_masks():
    total, _ = integrate.dblquad(
        lambda x2, x1: joint_pdf_two(x1, x2), 0.0, 40.0, lambda x1: x1, 40.0
    )
    assert abs(total - 1.0) <= 1e-8
    assert joint_pdf_two(2.0, 1.0) == 0.0  # off the ordered wedge
    assert joint_pdf_two(-1.0, 1.0) == 0.0
    assert abs(joint_pdf_two(0.5, 1.5) - 2.0 * math.exp(-2.0)) <= 1e-15


# ---------------------------------------------------------------------------
# moments


def test_two_user_means():
    assert abs(ordered_moment(1, 2, 1.0) - 0.5) <= 1e-8
    assert abs(ordered_moment(2, 2, 1.0) - 1.5) <= 1e-8


def test_four_user_means():
    want = [0.25, 7.0 / 12.0, 13.0 / 12.0, 25.0 / 12.0]
    got = [ordered_moment(m, 4, 1.0) for m in (1, 2, 3, 4)]
    assert np.max(np.abs(np.array(got) - want)) <= 1e-8


def test_negative_half_moment_of_minimum():
    # E[x_{1:2}^{-1/2}] = 2 Gamma(1/2) 2^{-1/2} = sqrt(2 pi)
    got = ordered_moment(1, 2, -0.5)
    assert abs(got - 2.5066282746310005) <= 1e-8


@pytest.mark.parametrize("m,M", [(1, 2), (2, 2), (2, 4), (4, 4)])
@pytest.mark.parametrize("p", [1.0, 2.0, -0.4, 0.5])
def test_ordered_moment_matches_expansion(m, M, p):
    want = moment_by_expansion(m, M, p)
    assert abs(ordered_moment(m, M, p) - want) <= 1e-7 * abs(want)


def test_ordered_moment_monte_carlo_agreement():
    batch = sample_ordered(2, 200_000, 99)
    for m in (1, 2):
        samples = batch.gains[:, m - 1]
        se = np.std(samples) / math.sqrt(batch.count)
        assert abs(np.mean(samples) - ordered_moment(m, 2, 1.0)) <= 4.0 * se


def test_ordered_moment_divergence_guard():
    with pytest.raises(DomainError):
        ordered_moment(1, 2, -1.0)  # density ~ const near 0: x^{-1} diverges
    with pytest.raises(DomainError):
        ordered_moment(2, 4, -2.0)
    # just inside the boundary is still finite
    assert math.isfinite(ordered_moment(2, 4, -1.9))


def test_ordered_moment_zeroth_is_one():
    assert ordered_moment(3, 7, 0.0) == 1.0
