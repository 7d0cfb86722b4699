"""Special functions underlying the closed-form effective-capacity expressions.

Everything here is evaluated from a defining integral (or an exact recurrence
on one), so each value can be checked independently against adaptive
quadrature of that definition:

* ``hyp_u``          -- confluent hypergeometric function of the second kind
                        U(a, b, z), integral form, a > 0.
* ``upper_gamma``    -- upper incomplete gamma Gamma(s, x) for any real s
                        (including s <= 0) and x > 0.
* ``whittaker_w_reduced`` -- the W_{u-1/2, u}(z) family, which reduces exactly
                        to e^{z/2} z^{1/2-u} Gamma(2u, z).
* ``order_coefficient``   -- psi_m = 1/B(m, M-m+1), the order-statistic
                        normalizer, computed in log space.
* ``gamma_moment_integral`` -- the antiderivative identity for
                        int_c^inf y^b Gamma(A, y) dy.

All functions are pure and raise :class:`DomainError` on out-of-domain or
non-finite input, and :class:`ConvergenceError` when quadrature cannot reach
the requested tolerance (no silent degradation).
"""

from __future__ import annotations

import math
import warnings

from scipy import integrate

from .errors import ConvergenceError, DomainError

__all__ = [
    "hyp_u",
    "upper_gamma",
    "upper_gamma_scaled",
    "whittaker_w_reduced",
    "order_coefficient",
    "gamma_moment_integral",
]

# QUADPACK cannot do meaningfully better than ~1e-12 relative, so requests
# below that are clamped before the integrator is called; the achieved-error
# check afterwards still uses the caller's tolerance.
_MIN_EPSREL = 1e-12


def _require_finite(**kwargs: float) -> None:
    for name, value in kwargs.items():
        if not math.isfinite(value):
            raise DomainError(f"{name} must be finite, got {value!r}")


def _quad(fn, lo, hi, tol, points=None):
    """quad() with warnings silenced; we enforce the error estimate ourselves."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", category=integrate.IntegrationWarning)
        value, err = integrate.quad(
            fn,
            lo,
            hi,
            epsabs=0.0,
            epsrel=max(tol / 10.0, _MIN_EPSREL),
            limit=300,
            points=points,
        )
    return value, err


def hyp_u(a: float, b: float, z: float, *, tol: float = 1e-10) -> float:
    """Confluent hypergeometric function of the second kind U(a, b, z).

    Evaluates (1/Gamma(a)) * int_0^inf e^{-zt} t^{a-1} (1+t)^{b-a-1} dt for
    a > 0, z > 0.  After the substitution s = z*t the integrand carries the
    weight e^{-s}, which keeps the quadrature well conditioned for large z:

        U(a,b,z) = (1/(Gamma(a) z^a)) int_0^inf e^{-s} s^{a-1} (1+s/z)^{b-a-1} ds
    """
    _require_finite(a=a, b=b, z=z)
    if a <= 0.0:
        raise DomainError(f"hyp_u requires a > 0, got a={a}")
    if z <= 0.0:
        raise DomainError(f"hyp_u requires z > 0, got z={z}")

    power = b - a - 1.0

    def integrand(s: float) -> float:
        return math.exp(-s) * s ** (a - 1.0) * (1.0 + s / z) ** power

    # Split so the possible s^{a-1} endpoint singularity (a < 1) sits inside a
    # finite-interval QAGS call.
    v1, e1 = _quad(integrand, 0.0, 1.0, tol)
    v2, e2 = _quad(integrand, 1.0, math.inf, tol)
    scale = math.gamma(a) * z**a
    value = (v1 + v2) / scale
    err = (e1 + e2) / scale
    if err > tol * max(abs(value), 1e-300):
        raise ConvergenceError(
            f"hyp_u({a}, {b}, {z}): quadrature error {err:.3e} exceeds "
            f"tolerance {tol:.3e}"
        )
    return value


def upper_gamma_scaled(s: float, x: float, *, tol: float = 1e-10) -> float:
    """Scaled upper incomplete gamma e^x * Gamma(s, x), for x > 0, any real s.

    Uses the shifted integral e^x Gamma(s,x) = int_0^inf (x+u)^{s-1} e^{-u} du,
    which is smooth and strictly positive for every real s when x > 0 -- no
    recurrence is needed, so there is no cancellation for s << 0.  For s > 1
    the stable upward recurrence g(s+1) = s*g(s) + x^s (all terms positive)
    is applied on top of a base value with s in (0, 1].
    """
    _require_finite(s=s, x=x)
    if x <= 0.0:
        raise DomainError(f"upper_gamma_scaled requires x > 0, got x={x}")

    steps = 0
    base_s = s
    if s > 1.0:
        # bring the quadrature exponent into (0,1] and climb back up
        steps = math.ceil(s - 1.0)
        base_s = s - steps

    if base_s == 1.0:
        value = 1.0  # e^x Gamma(1,x) = e^x e^{-x}
    else:
        power = base_s - 1.0

        def integrand(u: float) -> float:
            return (x + u) ** power * math.exp(-u)

        if x < 1.0:
            # the integrand varies like a power law on the scale of x near
            # u = 0; hand QUADPACK a geometric ladder of breakpoints so it
            # resolves the spike (tail beyond u = 60 is < 1e-26 relative)
            pts, t = [], x
            while t < 1.0:
                pts.append(t)
                t *= 10.0
            pts += [1.0, 5.0, 20.0]
            value, err = _quad(integrand, 0.0, 60.0, tol, points=pts)
        else:
            value, err = _quad(integrand, 0.0, math.inf, tol)
        if err > tol * max(abs(value), 1e-300):
            raise ConvergenceError(
                f"upper_gamma({s}, {x}): quadrature error {err:.3e} exceeds "
                f"tolerance {tol:.3e}"
            )

    t = base_s
    for _ in range(steps):
        value = t * value + x**t
        t += 1.0
    return value


def upper_gamma(s: float, x: float, *, tol: float = 1e-10) -> float:
    """Upper incomplete gamma Gamma(s, x) = int_x^inf t^{s-1} e^{-t} dt.

    Valid for any real s (including s <= 0) when x > 0; for x = 0 it reduces
    to the complete Gamma(s), which requires s > 0.
    """
    _require_finite(s=s, x=x)
    if x < 0.0:
        raise DomainError(f"upper_gamma requires x >= 0, got x={x}")
    if x == 0.0:
        if s <= 0.0:
            raise DomainError("Gamma(s, 0) diverges for s <= 0")
        return math.gamma(s)
    scaled = upper_gamma_scaled(s, x, tol=tol)
    # exp(log(.) - x) instead of exp(-x)*(.) so that huge scaled values with
    # huge x still land inside the representable range.
    return math.exp(math.log(scaled) - x)


def whittaker_w_reduced(u: float, z: float, *, tol: float = 1e-10) -> float:
    """Whittaker W_{u-1/2, u}(z) via its exact reduction.

    For the first-index-equals-(u - 1/2) family the Whittaker W function
    collapses to elementary pieces: W_{u-1/2, u}(z) = e^{z/2} z^{1/2-u}
    Gamma(2u, z).  Only that family appears in the closed forms.
    """
    _require_finite(u=u, z=z)
    if z <= 0.0:
        raise DomainError(f"whittaker_w_reduced requires z > 0, got z={z}")
    scaled = upper_gamma_scaled(2.0 * u, z, tol=tol)
    return math.exp(math.log(scaled) - z / 2.0 + (0.5 - u) * math.log(z))


def order_coefficient(m: int, M: int) -> float:
    """Order-statistic coefficient psi_m = M! / ((m-1)! (M-m)!) = 1/B(m, M-m+1).

    Computed in log space so large M does not overflow intermediate
    factorials.
    """
    if m != int(m) or M != int(M):
        raise DomainError(f"order_coefficient requires integers, got ({m}, {M})")
    m, M = int(m), int(M)
    if m < 1 or m > M:
        raise DomainError(f"order_coefficient requires 1 <= m <= M, got ({m}, {M})")
    return math.exp(
        math.lgamma(M + 1) - math.lgamma(m) - math.lgamma(M - m + 1)
    )


def gamma_moment_integral(b: float, A: float, c: float, *, tol: float = 1e-10) -> float:
    """Closed form of int_c^inf y^b Gamma(A, y) dy.

    Integration by parts of the left-hand side gives

        (1/(1+b)) * ( Gamma(1+A+b, c) - c^{1+b} Gamma(A, c) ),

    valid for b != -1 and c > 0.  The direct quadrature of the left-hand side
    is the oracle this is tested against.
    """
    _require_finite(b=b, A=A, c=c)
    if b == -1.0:
        raise DomainError("gamma_moment_integral is singular at b = -1")
    if c <= 0.0:
        raise DomainError(f"gamma_moment_integral requires c > 0, got c={c}")
    g1 = upper_gamma(1.0 + A + b, c, tol=tol)
    g2 = c ** (1.0 + b) * upper_gamma(A, c, tol=tol)
    return (g1 - g2) / (1.0 + b)
