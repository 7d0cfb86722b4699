"""Closed-form effective-capacity expressions for the two-user system.

* ``ec1_noma_closed``  -- weak NOMA user, exact in terms of U(1, 2+beta, .).
* ``ec2_noma_closed``  -- strong NOMA user, a binomial x alternating-series
  expansion in incomplete-gamma moments, valid for negative integer beta2.
* ``ec_oma_closed``    -- TDMA users, in terms of U(1, 2+e, .), with the two
  published exponent conventions selectable (see ``variant``).
* ``ec2_high_snr_limit`` -- the rho-free saturation value of the strong
  user's EC (interference-limited regime).

The numeric oracle chain (Monte Carlo <-> nested quadrature in
:mod:`noma_ec.engine`) is authoritative: these formulas are the fast paths,
and every one is tested against those oracles.  Series evaluations report
``converged=False`` (with a diagnostic) instead of returning silently wrong
values when alternating-series cancellation exhausts double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .channel import GainBatch
from .engine import (
    EcEstimate,
    limit_expectation_quadrature,
    log_mean_combo,
    mc_component_means,
)
from .errors import ConvergenceError, DomainError
from .rates import PowerAllocation, TransmitSnr
from .special_functions import hyp_u, order_coefficient, upper_gamma_scaled

__all__ = [
    "ClosedFormResult",
    "ec1_noma_closed",
    "ec2_noma_closed",
    "ec2_high_snr_limit",
    "ec_oma_closed",
]

_LN2 = math.log(2.0)

# Alternating-series guard: the strong-user series loses roughly
# 2*|P2-P1|*c*log10(e) decimal digits to cancellation (c = 1/(rho*P2)), so
# past |P2-P1|*c ~ 12 double precision is effectively exhausted and the
# series result would be noise.  The achieved peak-term/sum ratio is also
# checked at runtime.
_MAX_CANCEL_EXPONENT = 12.0
_CANCEL_RATIO_LIMIT = 1e12


@dataclass(frozen=True)
class ClosedFormResult:
    """A closed-form EC value plus series diagnostics."""

    value: float
    terms_used: int
    converged: bool
    diagnostic: str = ""


def ec1_noma_closed(p1: float, beta1: float, rho: TransmitSnr) -> ClosedFormResult:
    """Weak-user NOMA EC: (1/b) log2( (2/(P1 rho)) U(1, 2+b, 2/(rho P1)) ).

    The weak user is decoded last and sees no interference, so its EC is a
    single U-function evaluation; exact for any real beta1 < 0.
    """
    if not 0.0 < p1 < 1.0:
        raise DomainError(f"p1 must be in (0,1), got {p1!r}")
    if not math.isfinite(beta1) or beta1 >= 0.0:
        raise DomainError(f"beta1 must be finite and < 0, got {beta1!r}")
    z = 2.0 / (rho.linear * p1)
    inner = z * hyp_u(1.0, 2.0 + beta1, z)
    value = math.log(inner) / (beta1 * _LN2)
    return ClosedFormResult(value=value, terms_used=0, converged=True)


def _scaled_gamma_ladder(
    c: float, beta2_int: int, n_max: int, sigma: float
) -> tuple[list, float]:
    """ghat_n = g(2+beta2+n)/sigma^n for n=0..n_max plus g(1+beta2).

    Here g(s) = e^c Gamma(s, c) and sigma = max(c, 1).  The sigma^n scaling
    keeps the ladder inside double range even when ~150 entries are needed
    (unscaled, g(s) ~ Gamma(s) overflows near s ~ 170, and for large c the
    entries grow like c^n on top of that).  Entries with s <= 0 come from
    the shifted-integral quadrature (stable for any s <= 0); s >= 2 entries
    use the all-positive upward recurrence g(s+1) = s g(s) + c^s in scaled
    form.  The ladder is truncated at the first non-finite entry.
    """
    log_c, log_sigma = math.log(c), math.log(sigma)
    ladder = []
    for n in range(n_max + 1):
        s = 2 + beta2_int + n
        if s <= 1:
            raw = 1.0 if s == 1 else upper_gamma_scaled(float(s), c)
            entry = raw * math.exp(-n * log_sigma)
        else:
            # source term c^{s-1}/sigma^n, formed in log space
            src = math.exp((s - 1) * log_c - n * log_sigma)
            entry = (s - 1) / sigma * ladder[n - 1] + src
        if not math.isfinite(entry):
            break
        ladder.append(entry)
    g_base = upper_gamma_scaled(float(1 + beta2_int), c)
    return ladder, g_base


def ec2_noma_closed(
    p: PowerAllocation,
    beta2: float,
    rho: TransmitSnr,
    k_max: int = 500,
    *,
    tol: float = 1e-10,
) -> ClosedFormResult:
    """Strong-user NOMA EC by the binomial/series expansion.

    Reduction of the double integral over the ordered gains gives

        E[(1+SINR_2)^{b}] = 2 P2 e^{dc} sum_j C(J,j) (c P2)^{J-j} P1^j S_j,
        S_j = sum_k (-d)^k / k! * m_{j+k},
        m_n = ( g(2+b+n) - c^{1+n} g(1+b) ) / (1+n),

    with J = -b a nonnegative integer, c = 1/(rho P2), d = P2 - P1, and
    g(s) = e^c Gamma(s, c).  The k-series alternates (for d > 0) and loses
    about 2 d c log10(e) digits to cancellation, so at low SNR the result is
    flagged ``converged=False`` and callers fall back to ec2_quadrature.
    """
    if len(p) != 2:
        raise DomainError("ec2_noma_closed is two-user only")
    if k_max < 1:
        raise DomainError("k_max must be >= 1")
    if not math.isfinite(beta2) or beta2 >= 0.0 or abs(beta2 - round(beta2)) > 1e-12:
        raise DomainError(
            "ec2_noma_closed requires a negative integer beta2 "
            f"(got {beta2!r}); use ec2_quadrature for non-integer exponents"
        )
    b2 = int(round(beta2))
    J = -b2
    p1, p2 = p[0], p[1]
    c = 1.0 / (rho.linear * p2)
    d = p2 - p1

    dc = abs(d) * c
    if dc > _MAX_CANCEL_EXPONENT:
        return ClosedFormResult(
            value=math.nan,
            terms_used=0,
            converged=False,
            diagnostic=(
                f"series cancellation ~{2 * dc * math.log10(math.e):.0f} "
                "digits at this SNR exceeds double precision; use ec2_quadrature"
            ),
        )

    # Ladder length: terms peak near k ~ |d| c and the tail decays
    # geometrically with ratio -> |d|, so reaching tol*|S_j| from a peak of
    # ~e^{2|d|c}|S_j| needs about (2|d|c - ln tol)/ln(1/|d|) extra terms.
    if d == 0.0:
        k_needed = 0
    else:
        tail = (2.0 * dc - math.log(tol)) / max(math.log(1.0 / abs(d)), 0.05)
        k_needed = int(2.0 * dc + tail) + 10
    n_max = J + min(k_needed, k_max)
    sigma = max(c, 1.0)
    try:
        ladder, g_base = _scaled_gamma_ladder(c, b2, n_max, sigma)
    except ConvergenceError as exc:
        return ClosedFormResult(
            value=math.nan,
            terms_used=0,
            converged=False,
            diagnostic=f"incomplete-gamma evaluation failed: {exc}",
        )
    n_max = len(ladder) - 1  # ladder may stop early at double-range edge

    # scaled moments mhat_n = m_n/sigma^n, m_n = e^c Int_c^inf y^n G(1+b2,y) dy
    moments = []
    base_scale = c * g_base  # c^{1+n} g_base / sigma^n at n=0; ratio c/sigma
    for n in range(n_max + 1):
        moments.append((ladder[n] - base_scale) / (1 + n))
        base_scale *= c / sigma
    if not all(math.isfinite(m) and m > 0.0 for m in moments):
        return ClosedFormResult(
            value=math.nan,
            terms_used=0,
            converged=False,
            diagnostic="incomplete-gamma moment ladder lost positivity (cancellation)",
        )

    log_terms = []
    max_terms = 0
    converged_all = True
    diagnostic = ""
    for j in range(J + 1):
        total = 0.0  # Shat_j = S_j / sigma^j = sum_k (+-) (|d| sigma)^k/k! mhat_{j+k}
        peak = 0.0
        w = 1.0  # (|d| sigma)^k / k!
        small_streak = 0
        k_min = int(abs(d) * sigma) + 2
        k = 0
        while True:
            if j + k > n_max:
                converged_all = False
                diagnostic = "series ladder exhausted before convergence"
                break
            term = w * moments[j + k]
            if d > 0 and k % 2 == 1:
                term = -term
            total += term
            peak = max(peak, abs(term))
            if abs(term) <= tol * max(abs(total), 1e-300):
                small_streak += 1
            else:
                small_streak = 0
            if small_streak >= 3 and k >= k_min:
                break
            if d == 0.0:
                break  # (P2-P1)^k collapses to the k=0 term; 0^0 := 1
            k += 1
            if k > k_max:
                converged_all = False
                diagnostic = f"k-series did not converge within k_max={k_max}"
                break
            w *= abs(d) * sigma / k
        max_terms = max(max_terms, k + 1)
        if total <= 0.0 or peak / max(abs(total), 1e-300) > _CANCEL_RATIO_LIMIT:
            return ClosedFormResult(
                value=math.nan,
                terms_used=max_terms,
                converged=False,
                diagnostic="alternating-series cancellation exhausted double precision",
            )
        log_binom = math.lgamma(J + 1) - math.lgamma(j + 1) - math.lgamma(J - j + 1)
        log_terms.append(
            log_binom
            + (J - j) * math.log(c * p2)
            + j * math.log(sigma * p1)
            + math.log(total)
        )

    if not converged_all:
        return ClosedFormResult(
            value=math.nan, terms_used=max_terms, converged=False, diagnostic=diagnostic
        )

    peak_log = max(log_terms)
    log_sum = peak_log + math.log(math.fsum(math.exp(t - peak_log) for t in log_terms))
    log_e2 = math.log(2.0 * p2) + d * c + log_sum
    value = log_e2 / (b2 * _LN2)
    return ClosedFormResult(value=value, terms_used=max_terms, converged=True)


def ec2_high_snr_limit(
    p: PowerAllocation,
    beta2: float,
    batch_or_quadrature: GainBatch | str = "quadrature",
) -> EcEstimate:
    """rho -> infinity limit of the strong user's EC.

    The SINR saturates at (P2 x2)/(P1 x1), so the limit is
    (1/beta2) log2 E[(1 + P2 x2/(P1 x1))^{beta2}], evaluated either by MC
    over an ordered GainBatch (std_error attached) or by 2-D quadrature
    (pass the string 'quadrature'; std_error = 0).
    """
    if len(p) != 2:
        raise DomainError("two-user only")
    if not math.isfinite(beta2) or beta2 >= 0.0:
        raise DomainError(f"beta2 must be finite and < 0, got {beta2!r}")
    coeff = 1.0 / (beta2 * _LN2)
    if isinstance(batch_or_quadrature, str):
        if batch_or_quadrature != "quadrature":
            raise DomainError(f"unknown mode {batch_or_quadrature!r}")
        mean = limit_expectation_quadrature(p, beta2)
        return EcEstimate(
            value=math.log(mean) * coeff, std_error=0.0, n_samples=0, seed=0
        )
    batch = batch_or_quadrature
    if batch.M != 2:
        raise DomainError("ec2_high_snr_limit needs a two-column batch")
    ratio = p[1] / p[0]

    def weight(chunk):
        import numpy as np

        return np.exp(beta2 * np.log1p(ratio * chunk[:, 1] / chunk[:, 0]))

    n, means, cov = mc_component_means(batch, [weight])
    value, se = log_mean_combo([coeff], means, cov)
    return EcEstimate(value=value, std_error=se, n_samples=n, seed=batch.seed)


def ec_oma_closed(
    m: int,
    M: int,
    beta_m: float,
    rho: TransmitSnr,
    variant: str = "consistent",
) -> ClosedFormResult:
    """TDMA user EC closed form.

    With the exponent e the expansion of the ranked-gain density gives

        E[(1+rho x_m)^e] = (psi_m/rho) sum_{k=0}^{m-1} C(m-1,k) (-1)^k
                           U(1, 2+e, (M-m+1+k)/rho),

    and the EC is (1/beta_m) log2 of that.  variant='consistent' uses
    e = beta_m/M, the exponent implied by the EC definition with a 1/M time
    share (this matches the Monte Carlo oracle and is the default);
    variant='doubled' evaluates the same expression with e = 2*beta_m/M, a
    published alternative that the oracle rejects -- kept selectable for
    comparison.
    """
    if variant not in ("consistent", "doubled"):
        raise DomainError(f"unknown variant {variant!r}")
    if not math.isfinite(beta_m) or beta_m >= 0.0:
        raise DomainError(f"beta_m must be finite and < 0, got {beta_m!r}")
    psi = order_coefficient(m, M)  # validates 1 <= m <= M
    e = beta_m / M if variant == "consistent" else 2.0 * beta_m / M
    r = rho.linear
    total = 0.0
    for k in range(m):
        coeff = math.comb(m - 1, k) * (-1.0) ** k
        total += coeff * hyp_u(1.0, 2.0 + e, (M - m + 1 + k) / r)
    inner = psi / r * total
    value = math.log(inner) / (beta_m * _LN2)
    return ClosedFormResult(value=value, terms_used=m, converged=True)
