"""Gauss rules on the half line and the unit interval.

Rules are built Golub-Welsch style (eigenvalues of the Jacobi matrix as
starting points), polished by Newton iteration on the orthonormal
recurrence, and weighted by Christoffel numbers accumulated in log space so
that large-node weights underflow gracefully instead of turning into noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceError, DomainError

DEFAULT_RTOL = 1e-10


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights of a Gauss rule.

    ``kind`` is ``"gauss_laguerre_generalized"`` (weight x^a e^-x on
    [0, inf)) or ``"gauss_jacobi_unit"`` (weight u^a (1-u)^b on [0, 1]).
    Nodes whose weight underflows double precision are dropped, so
    ``len(nodes)`` can be smaller than ``n`` for large half-line rules.
    """

    nodes: np.ndarray
    weights: np.ndarray
    kind: str
    n: int
    params: tuple

    def __post_init__(self):
        if self.nodes.shape != self.weights.shape:
            raise ValueError("node/weight count mismatch")

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        vals = np.asarray(f(self.nodes), dtype=float)
        return float(np.dot(self.weights, vals))


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    converged: bool
    n: int


def _orthonormal_values(x, diag, offd, mu0, order):
    """Orthonormal p_order(x), p'_order(x) and log sum_{k<order} p_k(x)^2.

    Values are returned rescaled by a common per-node factor, which is
    harmless for the Newton ratio; the log-sum is exact.
    """
    p_prev = np.zeros_like(x)
    p = np.full_like(x, 1.0 / math.sqrt(mu0))
    dp_prev = np.zeros_like(x)
    dp = np.zeros_like(x)
    sumsq = p * p
    log_scale = np.zeros_like(x)
    for k in range(order):
        b_next = offd[k]
        b_k = offd[k - 1] if k > 0 else 0.0
        p_next = ((x - diag[k]) * p - b_k * p_prev) / b_next
        dp_next = ((x - diag[k]) * dp + p - b_k * dp_prev) / b_next
        p_prev, p, dp_prev, dp = p, p_next, dp, dp_next
        if k < order - 1:
            sumsq = sumsq + p * p
        big = np.abs(p) > 1e100
        if np.any(big):
            f = np.where(big, 1e-100, 1.0)
            p, p_prev, dp, dp_prev = p * f, p_prev * f, dp * f, dp_prev * f
            sumsq = sumsq * f * f
            log_scale = log_scale - 2.0 * np.log(f)
    return p, dp, np.log(sumsq) + log_scale


def _gauss_from_recurrence(diag, offd, mu0, n, kind, params, lower=-np.inf):
    # diag has n+1 entries, offd n+1 entries (sqrt of beta_1..beta_{n+1})
    x = eigh_tridiagonal(diag[:n], offd[: n - 1], eigvals_only=True)
    x = np.sort(x)
    for it in range(50):
        p, dp, _ = _orthonormal_values(x, diag, offd, mu0, n)
        step = p / dp
        x = x - step
        # forward-recurrence roundoff is absolute on the scale of the spectrum
        if np.all(np.abs(step) <= 1e-14 * np.max(np.abs(x))):
            break
    else:
        raise ConvergenceError("Gauss node refinement did not converge",
                               kind=kind, n=n, iterations=it + 1,
                               max_step=float(np.max(np.abs(step))))
    _, _, logsum = _orthonormal_values(x, diag, offd, mu0, n)
    w = np.exp(-logsum)
    keep = (w > 0) & (x > lower)
    return QuadratureRule(x[keep], w[keep], kind, n, params)


@lru_cache(maxsize=256)
def gauss_laguerre(n: int, a: float = 0.0) -> QuadratureRule:
    """Generalized Gauss-Laguerre rule for the weight x^a e^-x on [0, inf).

    Exact for polynomials of degree <= 2n-1.
    """
    if n < 1:
        raise DomainError("gauss_laguerre needs n >= 1")
    if not a > -1:
        raise DomainError(f"gauss_laguerre needs a > -1, got {a!r}")
    k = np.arange(n + 1, dtype=float)
    diag = 2.0 * k + a + 1.0
    offd = np.sqrt((k + 1.0) * (k + 1.0 + a))
    if n == 1:
        return QuadratureRule(np.array([a + 1.0]), np.array([math.gamma(a + 1.0)]),
                              "gauss_laguerre_generalized", 1, (a,))
    return _gauss_from_recurrence(diag, offd, math.gamma(a + 1.0), n,
                                  "gauss_laguerre_generalized", (a,), lower=0.0)


@lru_cache(maxsize=256)
def gauss_jacobi_unit(n: int, a: float = 0.0, b: float = 0.0) -> QuadratureRule:
    """Gauss-Jacobi rule on [0, 1] for the weight u^a (1-u)^b."""
    if n < 1:
        raise DomainError("gauss_jacobi_unit needs n >= 1")
    if not (a > -1 and b > -1):
        raise DomainError("gauss_jacobi_unit needs a, b > -1")
    # classical Jacobi on [-1, 1] with weight (1-t)^al (1+t)^be, t = 2u - 1
    al, be = b, a
    ab = al + be
    k = np.arange(n + 1, dtype=float)
    diag_t = np.empty(n + 1)
    diag_t[0] = (be - al) / (ab + 2.0)
    kk = k[1:]
    diag_t[1:] = (be * be - al * al) / ((2 * kk + ab) * (2 * kk + ab + 2))
    kk = k + 1.0
    beta_t = np.empty(n + 1)
    beta_t[0] = 4 * (1 + al) * (1 + be) / ((2 + ab) ** 2 * (3 + ab))
    kk = kk[1:]
    beta_t[1:] = (4 * kk * (kk + al) * (kk + be) * (kk + ab)
                  / ((2 * kk + ab) ** 2 * (2 * kk + ab + 1) * (2 * kk + ab - 1)))
    diag = (1.0 + diag_t) / 2.0
    offd = np.sqrt(beta_t) / 2.0
    mu0 = math.exp(math.lgamma(a + 1) + math.lgamma(b + 1) - math.lgamma(a + b + 2))
    if n == 1:
        return QuadratureRule(np.array([diag[0]]), np.array([mu0]),
                              "gauss_jacobi_unit", 1, (a, b))
    return _gauss_from_recurrence(diag, offd, mu0, n, "gauss_jacobi_unit", (a, b), lower=0.0)


def _doubled(estimate: Callable[[int], float], n: int, rtol: float, strict: bool,
             atol: float = 0.0) -> QuadResult:
    coarse = estimate(n)
    fine = estimate(2 * n)
    err = abs(fine - coarse)
    ok = err <= max(rtol * abs(fine), atol) or err == 0.0
    if strict and not ok:
        raise ConvergenceError("quadrature did not converge under doubling",
                               n=n, coarse=coarse, fine=fine, error=err)
    return QuadResult(fine, err, ok, 2 * n)


def integrate_halfline(f, a_weight: float = 0.0, n: int = 100, *,
                       rtol: float = DEFAULT_RTOL, atol: float = 0.0, strict: bool = False) -> QuadResult:
    """Integrate f(x) x^a e^-x over [0, inf) with the n- and 2n-point rules.

    ``f`` must accept a numpy array.  The returned value is the 2n-point
    estimate; ``error`` is the change under doubling.
    """
    return _doubled(lambda k: gauss_laguerre(k, a_weight).integrate(f), n, rtol, strict, atol)


def integrate_square(f, a_weight_x: float = 0.0, a_weight_y: float = 0.0, n: int = 100, *,
                     rtol: float = DEFAULT_RTOL, atol: float = 0.0, strict: bool = False) -> QuadResult:
    """Tensor-product half-line rule for f(x, y) x^ax y^ay e^{-x-y}."""

    def est(k):
        rx = gauss_laguerre(k, a_weight_x)
        ry = gauss_laguerre(k, a_weight_y)
        vals = np.asarray(f(rx.nodes[:, None], ry.nodes[None, :]), dtype=float)
        return float(rx.weights @ vals @ ry.weights)

    return _doubled(est, n, rtol, strict, atol)


def integrate_cauchy(f, a_weight_x: float = 0.0, a_weight_y: float = 0.0, n: int = 100, *,
                     rtol: float = DEFAULT_RTOL, atol: float = 0.0, strict: bool = False) -> QuadResult:
    """Integrate f(x, y) x^ax y^ay e^{-x-y} / (x + y) over the quadrant.

    The Cauchy factor is absorbed by the map x = r u, y = r (1 - u): the
    radial part becomes a Laguerre weight r^(ax+ay) and the angular part a
    Jacobi weight u^ax (1-u)^ay, so the 1/(x+y) corner singularity never
    reaches the integrand.
    """
    if not a_weight_x + a_weight_y > -1:
        raise DomainError("integrate_cauchy needs ax + ay > -1")

    def est(k):
        rr = gauss_laguerre(k, a_weight_x + a_weight_y)
        ru = gauss_jacobi_unit(k, a_weight_x, a_weight_y)
        r = rr.nodes[:, None]
        u = ru.nodes[None, :]
        vals = np.asarray(f(r * u, r * (1.0 - u)), dtype=float)
        return float(rr.weights @ vals @ ru.weights)

    return _doubled(est, n, rtol, strict, atol)
