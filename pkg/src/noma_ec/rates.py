"""Instantaneous achievable rates (b/s/Hz) for uplink NOMA, OMA, and pairs.

Uplink power-domain NOMA with SIC: the base station decodes users from
strongest to weakest, so the user of global rank m is decoded after all
stronger users have been cancelled and sees interference only from the
weaker ranks l < m:

    R_m = log2( 1 + rho P_m x_m / (1 + rho sum_{l<m} P_l x_l) ).

OMA is TDMA with each of M users holding 1/M of the time and transmitting at
full power: R~_m = (1/M) log2(1 + rho x_m).

For multi-pair operation (intra-pair NOMA, inter-pair TDMA) each pair holds
2/M of the time, giving the two-user rates scaled by 2/M.

All rate functions accept scalars or arrays for the gain arguments and
broadcast; logs are taken via log1p for accuracy at small SINR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = ["PowerAllocation", "TransmitSnr", "rate_noma", "rate_oma", "rate_pair"]

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class PowerAllocation:
    """Per-user power fractions P_1 ... P_M (weak -> strong), summing to 1."""

    fractions: tuple

    def __init__(self, fractions) -> None:
        fracs = tuple(float(p) for p in fractions)
        if len(fracs) < 1:
            raise DomainError("PowerAllocation needs at least one fraction")
        for p in fracs:
            if not math.isfinite(p) or not 0.0 < p < 1.0:
                raise DomainError(f"power fractions must be in (0,1), got {p}")
        if abs(sum(fracs) - 1.0) > 1e-12:
            raise DomainError(f"power fractions must sum to 1, got {sum(fracs)!r}")
        object.__setattr__(self, "fractions", fracs)

    @classmethod
    def two_user(cls, p1: float) -> "PowerAllocation":
        return cls((p1, 1.0 - p1))

    def __len__(self) -> int:
        return len(self.fractions)

    def __getitem__(self, idx: int) -> float:
        return self.fractions[idx]


@dataclass(frozen=True)
class TransmitSnr:
    """Transmit SNR rho = 1/sigma^2, stored both linear and in dB."""

    linear: float
    db: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.linear) or self.linear <= 0.0:
            raise DomainError(f"SNR must be positive and finite, got {self.linear!r}")
        if abs(self.linear - 10.0 ** (self.db / 10.0)) > 1e-12 * self.linear:
            raise DomainError(
                f"inconsistent SNR pair: linear={self.linear!r}, db={self.db!r}"
            )

    @classmethod
    def from_db(cls, db: float) -> "TransmitSnr":
        return cls(linear=10.0 ** (db / 10.0), db=db)

    @classmethod
    def from_linear(cls, linear: float) -> "TransmitSnr":
        if linear <= 0.0:
            raise DomainError(f"SNR must be positive, got {linear!r}")
        return cls(linear=linear, db=10.0 * math.log10(linear))


def _as_gain_matrix(gains) -> np.ndarray:
    arr = np.asarray(gains, dtype=float)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    return arr


def rate_noma(m: int, gains, p: PowerAllocation, rho: TransmitSnr):
    """SIC rate of the user with global rank m (1-based, weak -> strong)."""
    arr = _as_gain_matrix(gains)
    M = arr.shape[-1]
    if len(p) != M:
        raise DomainError(f"power allocation has {len(p)} entries for M={M} gains")
    if not 1 <= m <= M:
        raise IndexError(f"user index m={m} out of range for M={M}")
    r = float(rho.linear)
    x_m = arr[..., m - 1]
    if m == 1:
        sinr = r * p[0] * x_m
    else:
        weights = np.asarray(p.fractions[: m - 1])
        interference = arr[..., : m - 1] @ weights
        sinr = r * p[m - 1] * x_m / (1.0 + r * interference)
    out = np.log1p(sinr) / _LN2
    return float(out[0]) if np.ndim(gains) == 1 else out


def rate_oma(m: int, gains, rho: TransmitSnr, M: int | None = None):
    """TDMA rate of user m: (1/M) log2(1 + rho x_m), full power in its slot."""
    arr = _as_gain_matrix(gains)
    m_total = arr.shape[-1] if M is None else int(M)
    if not 1 <= m <= arr.shape[-1]:
        raise IndexError(f"user index m={m} out of range for M={arr.shape[-1]}")
    if m_total < 1:
        raise DomainError(f"M must be >= 1, got {m_total}")
    out = np.log1p(rho.linear * arr[..., m - 1]) / (_LN2 * m_total)
    return float(out[0]) if np.ndim(gains) == 1 else out


def rate_pair(role: str, pair_gains, p: PowerAllocation, rho: TransmitSnr, M_total: int):
    """Rate of one member of a NOMA pair holding 2/M_total of the time.

    ``pair_gains`` is (..., 2) with the weak member first.  role='weak' gets
    the interference-free rate, role='strong' is decoded first and sees the
    weak member as interference.
    """
    if M_total < 2 or M_total % 2 != 0:
        raise DomainError(f"M_total must be even and >= 2, got {M_total}")
    if len(p) != 2:
        raise DomainError("rate_pair takes a two-user PowerAllocation")
    arr = _as_gain_matrix(pair_gains)
    if arr.shape[-1] != 2:
        raise DomainError("pair_gains must have exactly two gain columns")
    r = float(rho.linear)
    if role == "weak":
        sinr = r * p[0] * arr[..., 0]
    elif role == "strong":
        sinr = r * p[1] * arr[..., 1] / (1.0 + r * p[0] * arr[..., 0])
    else:
        raise DomainError(f"role must be 'weak' or 'strong', got {role!r}")
    out = (2.0 / M_total) * np.log1p(sinr) / _LN2
    return float(out[0]) if np.ndim(pair_gains) == 1 else out
