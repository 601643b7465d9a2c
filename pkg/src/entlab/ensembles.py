"""Ensemble parameters, eigenvalue log-densities and entropy functionals.

Densities are the symmetric (unordered) extension of the interpolating
ensemble and are only defined up to their normalizing constants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import DomainError
from .pfaffian import pfaffian, pfaffian_extended

SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class EnsembleParams:
    """Subsystem dimension ``m``, deformation ``theta`` and exponent ``a``.

    theta = 1, a = n - m - 1/2 is the Bures-Hall ensemble; theta = 2,
    a = n - m the Hilbert-Schmidt ensemble (see :meth:`from_endpoint`).
    """

    m: int
    theta: float
    a: float

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise DomainError(f"m must be a positive integer, got {self.m!r}")
        if not self.theta > 0:
            raise DomainError(f"theta must satisfy theta > 0, got {self.theta!r}")
        if not self.a > -1:
            raise DomainError(f"a must satisfy a > -1, got {self.a!r}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "a", float(self.a))

    @property
    def alpha(self) -> float:
        return 2.0 * (self.a + 1.0) / self.theta - 1.0

    @property
    def beta(self) -> float:
        return self.alpha + 1.0

    @property
    def d(self) -> float:
        """Shape parameter of the Gamma law of the unconstrained trace."""
        m = self.m
        return 0.5 * m * (m * self.theta - self.theta + 2.0 * self.a + 2.0)

    @classmethod
    def from_endpoint(cls, m: int, n: int, endpoint: str, theta: float | None = None):
        """Map subsystem dimensions (m, n) to ``a`` for an endpoint ensemble.

        ``endpoint`` is ``"hs"`` (a = n - m, theta defaults to 2) or ``"bh"``
        (a = n - m - 1/2, theta defaults to 1).  Passing ``theta`` keeps the
        endpoint's ``a`` but deforms theta.
        """
        if int(m) != m or int(n) != n or m < 1:
            raise DomainError("m and n must be positive integers")
        if m > n:
            raise DomainError(f"endpoint ensembles need m <= n, got m={m}, n={n}")
        if endpoint == "hs":
            return cls(m, 2.0 if theta is None else theta, float(n - m))
        if endpoint == "bh":
            return cls(m, 1.0 if theta is None else theta, n - m - 0.5)
        raise DomainError(f"unknown endpoint {endpoint!r}; expected 'hs' or 'bh'")


def _positive_vector(values, name):
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise DomainError(f"{name} must be a nonempty vector")
    if np.any(~(x > 0)):
        raise DomainError(f"{name} entries must be strictly positive")
    return x


def _pair_log_sum(x, theta):
    # sum_{i<j} ln[(x_i - x_j)(x_i^theta - x_j^theta)/(x_i + x_j)]
    xt = np.exp(theta * np.log(x))
    i, j = np.triu_indices(x.size, k=1)
    num = (x[i] - x[j]) * (xt[i] - xt[j])
    if np.any(num <= 0):
        return -math.inf
    return float(np.sum(np.log(num) - np.log(x[i] + x[j])))


def log_density_constrained(params: EnsembleParams, lambdas) -> float:
    """Unnormalized log-density of a spectrum on the probability simplex.

    Returns ``-inf`` for coincident eigenvalues.
    """
    lam = _positive_vector(lambdas, "spectrum")
    if lam.size != params.m:
        raise DomainError(f"spectrum has {lam.size} entries, expected m={params.m}")
    if abs(math.fsum(lam) - 1.0) > SIMPLEX_TOL * max(1, lam.size):
        raise DomainError("spectrum does not sum to 1")
    return _pair_log_sum(lam, params.theta) + params.a * float(np.sum(np.log(lam)))


def log_density_unconstrained(params: EnsembleParams, xs) -> float:
    """Unnormalized log-density of the unconstrained (half-line) ensemble."""
    x = _positive_vector(xs, "eigenvalues")
    if x.size != params.m:
        raise DomainError(f"got {x.size} eigenvalues, expected m={params.m}")
    return (_pair_log_sum(x, params.theta) + params.a * float(np.sum(np.log(x)))
            - float(np.sum(x)))


def purity(lambdas):
    """Quantum purity sum(lambda^2); vectorized over the last axis."""
    lam = np.asarray(lambdas, dtype=float)
    out = np.sum(lam * lam, axis=-1)
    return float(out) if out.ndim == 0 else out


def von_neumann(lambdas):
    """Von Neumann entropy -sum(lambda ln lambda) with 0 ln 0 = 0."""
    lam = np.asarray(lambdas, dtype=float)
    safe = np.where(lam > 0, lam, 1.0)
    out = -np.sum(np.where(lam > 0, lam * np.log(safe), 0.0), axis=-1)
    return float(out) if out.ndim == 0 else out


def t_purity(xs):
    x = np.asarray(xs, dtype=float)
    out = np.sum(x * x, axis=-1)
    return float(out) if out.ndim == 0 else out


def t_von_neumann(xs):
    x = np.asarray(xs, dtype=float)
    out = np.sum(x * np.log(x), axis=-1)
    return float(out) if out.ndim == 0 else out


def trace_density(params: EnsembleParams, r):
    """Gamma(d, 1) density of the trace r = sum x_i."""
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise DomainError("trace_density requires r > 0")
    d = params.d
    out = np.exp(-r + (d - 1.0) * np.log(r) - math.lgamma(d))
    return float(out) if out.ndim == 0 else out


def schur_pfaffian_check(lambdas, extended: bool = True) -> tuple[float, float]:
    """Both sides of Schur's Pfaffian identity for an even-length vector.

    ``lhs`` is the product over i < j of (l_i - l_j)/(l_i + l_j); ``rhs``
    is the Pfaffian of the matrix with those entries.  Close-together
    entries make the double-precision elimination lose relative accuracy,
    so by default the matrix is formed and reduced at 40 digits.
    """
    lam = _positive_vector(lambdas, "lambdas")
    if lam.size % 2:
        raise DomainError("Schur's identity needs an even number of entries")
    i, j = np.triu_indices(lam.size, k=1)
    lhs = float(np.prod((lam[i] - lam[j]) / (lam[i] + lam[j])))
    if extended:
        with mpmath.workdps(40):
            mp = [mpmath.mpf(float(v)) for v in lam]
            return lhs, pfaffian_extended([[(u - v) / (u + v) for v in mp] for u in mp])
    mat = (lam[:, None] - lam[None, :]) / (lam[:, None] + lam[None, :])
    return lhs, pfaffian(mat)
