"""Rayleigh block-fading squared-gain model and its order statistics.

The squared channel magnitudes x_m = |h_m|^2 of M i.i.d. Rayleigh users are
i.i.d. unit-mean exponentials; users are indexed by global rank so that
x_1 <= x_2 <= ... <= x_M.  This module provides the marginal and
order-statistic densities, moments of the ranked gains, and deterministic
seeded sampling of ranked gain batches for the Monte Carlo estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, DomainError
from .special_functions import order_coefficient

__all__ = [
    "GainBatch",
    "marginal_pdf_cdf",
    "ordered_pdf",
    "joint_pdf_two",
    "sample_ordered",
    "ordered_moment",
]


@dataclass(frozen=True)
class GainBatch:
    """A seeded batch of ranked gain samples.

    ``gains`` has shape (count, M) with each row sorted ascending; column
    m-1 is the m-th order statistic.  Batches with equal (M, count, seed)
    are bit-identical.
    """

    gains: np.ndarray = field(repr=False)
    seed: int

    def __post_init__(self) -> None:
        self.gains.setflags(write=False)

    @property
    def count(self) -> int:
        return self.gains.shape[0]

    @property
    def M(self) -> int:
        return self.gains.shape[1]

    def column(self, m: int) -> np.ndarray:
        """Gains of the user with global rank m (1-based, ascending)."""
        if not 1 <= m <= self.M:
            raise IndexError(f"rank m={m} out of range for M={self.M}")
        return self.gains[:, m - 1]


def sample_ordered(M: int, count: int, seed: int) -> GainBatch:
    """Draw ``count`` ranked gain vectors of M i.i.d. unit-mean exponentials.

    Sampling is inverse-CDF (x = -log(1-u)) on top of a seeded PCG64 stream,
    so identical (M, count, seed) reproduce bit-identical batches.
    """
    if M < 1 or count < 1:
        raise DomainError(f"sample_ordered requires M >= 1 and count >= 1, got ({M}, {count})")
    rng = np.random.default_rng(seed)
    u = rng.random((count, M))
    gains = -np.log1p(-u)
    gains.sort(axis=1)
    return GainBatch(gains=gains, seed=seed)


def marginal_pdf_cdf(x):
    """(pdf, cdf) of the unranked squared gain: (e^{-x}, 1 - e^{-x}).

    Accepts scalars or arrays; x must be >= 0.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise DomainError("marginal_pdf_cdf requires x >= 0")
    pdf = np.exp(-arr)
    cdf = -np.expm1(-arr)
    if arr.ndim == 0:
        return float(pdf), float(cdf)
    return pdf, cdf


def ordered_pdf(m: int, M: int, x):
    """Density of the m-th of M ranked gains:

        f_{m:M}(x) = psi_m e^{-(M-m+1)x} (1 - e^{-x})^{m-1},  x >= 0.
    """
    psi = order_coefficient(m, M)  # validates 1 <= m <= M
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise DomainError("ordered_pdf requires x >= 0")
    out = psi * np.exp(-(M - m + 1) * arr) * (-np.expm1(-arr)) ** (m - 1)
    return float(out) if arr.ndim == 0 else out


def joint_pdf_two(x1, x2):
    """Joint density of (x_1, x_2) for M = 2: 2 e^{-x1-x2} on 0 <= x1 <= x2.

    Returns 0 off the ordered wedge (including negative arguments).
    """
    a1 = np.asarray(x1, dtype=float)
    a2 = np.asarray(x2, dtype=float)
    inside = (a1 >= 0) & (a1 <= a2)
    out = np.where(inside, 2.0 * np.exp(-np.where(inside, a1 + a2, 0.0)), 0.0)
    if a1.ndim == 0 and a2.ndim == 0:
        return float(out)
    return out


def ordered_moment(m: int, M: int, power: float, *, tol: float = 1e-8) -> float:
    """E[x^power] for the m-th of M ranked gains, by adaptive quadrature.

    Near zero the density behaves like psi_m x^{m-1}, so the moment is finite
    iff power > -m; divergent requests raise :class:`DomainError`.
    """
    psi = order_coefficient(m, M)
    if not math.isfinite(power):
        raise DomainError(f"power must be finite, got {power!r}")
    if power <= -m:
        raise DomainError(
            f"E[x^({power})] diverges for rank m={m} (requires power > {-m})"
        )
    if power == 0.0:
        return 1.0

    def integrand(x: float) -> float:
        return x**power * psi * math.exp(-(M - m + 1) * x) * (-math.expm1(-x)) ** (m - 1)

    # split so the x^power endpoint singularity (power < 0) is inside QAGS
    v1, e1 = integrate.quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=tol / 10, limit=300)
    v2, e2 = integrate.quad(integrand, 1.0, math.inf, epsabs=0.0, epsrel=tol / 10, limit=300)
    value = v1 + v2
    if e1 + e2 > tol * max(abs(value), 1e-300):
        raise ConvergenceError(
            f"ordered_moment({m},{M},{power}): quadrature error {e1 + e2:.3e} "
            f"exceeds tolerance {tol:.3e}"
        )
    return value
