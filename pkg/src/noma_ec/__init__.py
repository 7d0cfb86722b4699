"""Effective capacity of two-user and multi-pair uplink NOMA/OMA networks.

Numerical library + CLI for computing, cross-validating, and exploring the
effective capacity (EC) of power-domain NOMA with SIC and of OMA/TDMA over
Rayleigh block fading, under per-user statistical delay constraints.
"""

__version__ = "0.1.0"

from .errors import ConvergenceError, DomainError, NoCrossingError

__all__ = ["ConvergenceError", "DomainError", "NoCrossingError", "__version__"]
