"""Scalar special functions.

Everything here works on real floats.  Gamma ratios whose denominator may sit
on a pole are written as finite products so that vanishing terms come out as
exact zeros instead of ``inf * 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import mpmath
from scipy import special as _sc

from .errors import ConvergenceError, DomainError

EULER_GAMMA = 0.57721566490153286060651209008240243

_CF_SWITCH = 1.5
_NEAR_POLE = 1e-3
_FPMIN = 1e-300


@dataclass(frozen=True)
class SignedLog:
    """A real number stored as ``sign * exp(log_abs)``."""

    log_abs: float
    sign: int

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or +1")
        if self.sign != 0 and not math.isfinite(self.log_abs):
            raise ValueError("log_abs must be finite for a nonzero value")

    @classmethod
    def from_float(cls, x: float) -> "SignedLog":
        if x == 0:
            return cls(-math.inf, 0)
        return cls(math.log(abs(x)), 1 if x > 0 else -1)

    @classmethod
    def zero(cls) -> "SignedLog":
        return cls(-math.inf, 0)

    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_abs)

    def __mul__(self, other: "SignedLog") -> "SignedLog":
        if not isinstance(other, SignedLog):
            other = SignedLog.from_float(other)
        if self.sign == 0 or other.sign == 0:
            return SignedLog.zero()
        return SignedLog(self.log_abs + other.log_abs, self.sign * other.sign)

    __rmul__ = __mul__

    def __truediv__(self, other: "SignedLog") -> "SignedLog":
        if not isinstance(other, SignedLog):
            other = SignedLog.from_float(other)
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero SignedLog")
        if self.sign == 0:
            return SignedLog.zero()
        return SignedLog(self.log_abs - other.log_abs, self.sign * other.sign)

    def __neg__(self) -> "SignedLog":
        return SignedLog(self.log_abs, -self.sign)


def signed_log_sum(terms: Iterable[SignedLog]) -> tuple[float, float]:
    """Sum SignedLog terms with exactly rounded summation.

    Returns ``(total, condition)`` where ``condition = sum|t| / |sum t|``
    (``inf`` for a zero total with nonzero terms).
    """
    terms = [t for t in terms if t.sign != 0]
    if not terms:
        return 0.0, 1.0
    shift = max(t.log_abs for t in terms)
    scaled = [t.sign * math.exp(t.log_abs - shift) for t in terms]
    total = math.fsum(scaled)
    mass = math.fsum(abs(v) for v in scaled)
    condition = mass / abs(total) if total != 0 else math.inf
    return total * math.exp(shift), condition


def log_gamma(z: float) -> float:
    """Natural log of the gamma function for ``z > 0``."""
    if not z > 0:
        raise DomainError(f"log_gamma requires z > 0, got {z!r}")
    return math.lgamma(z)


def _is_nonpositive_integer(z: float) -> bool:
    return z <= 0 and z == math.floor(z)


def digamma(z: float) -> float:
    """Digamma function psi_0(z); raises at the poles 0, -1, -2, ..."""
    if _is_nonpositive_integer(z):
        raise DomainError(f"digamma has a pole at z={z!r}")
    return float(_sc.psi(z))


def _gammainc_upper_cf(s: float, x: float) -> float:
    # modified Lentz evaluation of the Legendre continued fraction for
    # e^x x^-s Gamma(s, x)
    b = x + 1.0 - s
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise ConvergenceError("incomplete gamma continued fraction did not converge",
                           s=s, x=x, iterations=i)


def _gammainc_upper_series(s: float, x: float) -> float:
    # Gamma(s) - gamma(s, x); s is not an integer here
    total = 0.0
    term = 1.0
    for n in range(0, 500):
        if n:
            term *= -x / n
        piece = term / (s + n)
        total += piece
        if abs(piece) < 1e-17 * abs(total):
            break
    return float(_sc.gamma(s)) - math.exp(s * math.log(x)) * total


def upper_incomplete_gamma(s: float, x: float) -> float:
    """Upper incomplete gamma function Gamma(s, x) for real s and x > 0.

    Negative ``s`` is supported (the Lemma-1 factor ``v`` needs
    ``Gamma(-theta*k - a, x)``).  Routes:

    * ``s >= 1e-3``: regularized scipy routine times Gamma(s);
    * ``x >= 1.5``: continued fraction (modified Lentz);
    * integer ``s <= 0``: E1(x) followed by downward recurrence;
    * other ``s``: power series, or 50-digit mpmath when ``s`` is
      within 1e-3 of a nonpositive integer (the series cancels there).
    """
    if not x > 0:
        raise DomainError(f"upper_incomplete_gamma requires x > 0, got {x!r}")
    if s >= _NEAR_POLE:
        return float(_sc.gammaincc(s, x)) * math.exp(math.lgamma(s))
    if x >= _CF_SWITCH:
        return math.exp(-x + s * math.log(x)) * _gammainc_upper_cf(s, x)
    if s == math.floor(s):
        value = float(_sc.exp1(x))
        t = 0.0
        while t > s:
            t -= 1.0
            value = (value - math.exp(t * math.log(x) - x)) / t
        return value
    if abs(s - round(s)) < _NEAR_POLE:
        with mpmath.workdps(50):
            return float(mpmath.gammainc(s, x))
    return _gammainc_upper_series(s, x)


def upper_incomplete_gamma_scaled(s: float, x: float) -> float:
    """e^x x^-s Gamma(s, x), finite for large x where Gamma(s, x) underflows."""
    if not x > 0:
        raise DomainError(f"upper_incomplete_gamma_scaled requires x > 0, got {x!r}")
    if x >= _CF_SWITCH:
        return _gammainc_upper_cf(s, x)
    return upper_incomplete_gamma(s, x) * math.exp(x - s * math.log(x))


def pochhammer(a: float, n: int) -> float:
    """Rising factorial (a)_n as the product a(a+1)...(a+n-1)."""
    if n < 0:
        raise DomainError("pochhammer needs n >= 0")
    out = 1.0
    for i in range(n):
        out *= a + i
    return out


def gamma_ratio_falling(z: float, m: int) -> float:
    """Gamma(z) / Gamma(z - m) as the product (z-1)(z-2)...(z-m).

    Exactly zero when one of the factors is zero, which is how whole terms
    drop out of the mean-purity sum at theta = 1 and theta = 2.
    """
    if m < 0:
        raise DomainError("gamma_ratio_falling needs m >= 0")
    out = 1.0
    for i in range(1, m + 1):
        out *= z - i
    return out


def gamma_ratio_falling_derivative(z: float, m: int) -> float:
    """d/dz of :func:`gamma_ratio_falling`, i.e. sum_i prod_{j != i} (z - j)."""
    g, dg = 1.0, 0.0
    for i in range(1, m + 1):
        f = z - i
        dg = dg * f + g
        g *= f
    return dg


def gamma_ratio_times_digamma(z: float, m: int) -> float:
    """Finite value of [Gamma(z)/Gamma(z-m)] * psi_0(z-m).

    Uses psi(z) - psi(z-m) = sum_i 1/(z-i), so the product equals
    ``g(z) psi(z) - g'(z)`` with ``g`` the falling product.  That expression
    is smooth across the poles of psi(z-m) and gives the limit there.
    """
    if _is_nonpositive_integer(z):
        raise DomainError(f"gamma_ratio_times_digamma needs z off the poles, got {z!r}")
    g = gamma_ratio_falling(z, m)
    dg = gamma_ratio_falling_derivative(z, m)
    if g == 0.0:
        return -dg
    return g * digamma(z) - dg
