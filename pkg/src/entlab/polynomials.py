"""Biorthogonal polynomials of the Cauchy-Laguerre weight.

The weight on the quadrant is W(x, y) = x^a y^b e^{-x-y} / (x + y) with
b = a + 1 for the entanglement ensemble.  The families p_j and q_j are
polynomials in X = x^theta and Y = y^theta respectively.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ensembles import EnsembleParams
from .errors import DomainError
from .quadrature import QuadResult, integrate_cauchy

MAX_DEGREE = 60
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class CauchyWeight:
    """Exponents (a, b) and deformation theta of the two-variable weight."""

    a: float
    b: float
    theta: float

    def __post_init__(self):
        if not (self.a > -1 and self.b > -1):
            raise DomainError("weight exponents must satisfy a, b > -1")
        if not self.theta > 0:
            raise DomainError("theta must be positive")

    @property
    def beta(self) -> float:
        return (self.a + self.b + 1.0) / self.theta

    @classmethod
    def from_params(cls, params: EnsembleParams) -> "CauchyWeight":
        return cls(params.a, params.a + 1.0, params.theta)


@dataclass(frozen=True)
class PolySeries:
    """Coefficients of sum_k c_k X^k with X = x^theta.

    ``log_abs`` and ``signs`` carry the coefficients in log space; ``coeffs``
    is the plain float view (it can underflow for large degree).
    """

    degree: int
    log_abs: tuple
    signs: tuple
    theta: float
    variant: str

    @property
    def coeffs(self) -> np.ndarray:
        return np.array(self.signs) * np.exp(np.array(self.log_abs))

    def __call__(self, x):
        return _eval_series(self, x)


def _check_degree(j):
    if int(j) != j or j < 0:
        raise DomainError(f"degree must be a nonnegative integer, got {j!r}")
    if j > MAX_DEGREE:
        raise DomainError(f"degree {j} exceeds the coefficient guard j <= {MAX_DEGREE}")
    return int(j)


@lru_cache(maxsize=4096)
def _series(kind: str, a: float, theta: float, beta: float, j: int) -> PolySeries:
    logs, signs = [], []
    lg = math.lgamma
    for k in range(j + 1):
        base = lg(k + j + beta) - lg(k + beta) - lg(j - k + 1) - lg(k + 1)
        if kind == "orthonormal_p":
            val = base - lg(theta * k + a + 1) + math.log(SQRT2)
            sign = (-1) ** (k + j)
        elif kind == "orthonormal_q":
            val = (base - lg(theta * k + a + 2) + math.log(SQRT2)
                   + math.log(theta * j + a + 1))
            sign = (-1) ** (k + j)
        else:  # hybrid
            val = base - lg(theta * k + a + 1)
            sign = (-1) ** k
        logs.append(val)
        signs.append(sign)
    return PolySeries(j, tuple(logs), tuple(signs), theta, kind)


def _eval_series(series: PolySeries, x, variable: str = "x"):
    """Evaluate at x (``variable='x'``) or directly at X = x^theta."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)) and not (series.degree == 0 and np.all(x >= 0)):
        raise DomainError("polynomial argument must be positive")
    logc = np.array(series.log_abs)
    sgn = np.array(series.signs, dtype=float)
    k = np.arange(series.degree + 1)
    power = k if variable == "X" else series.theta * k
    with np.errstate(divide="ignore"):
        logx = np.log(x)
    expo = logc + power * logx[..., None] if x.ndim else logc + power * logx
    expo = np.where(power == 0, logc, expo)
    terms = sgn * np.exp(expo)
    if x.ndim == 0:
        return math.fsum(terms.tolist())
    order = np.argsort(np.abs(terms), axis=-1)
    return np.sum(np.take_along_axis(terms, order, axis=-1), axis=-1)


def p_series(params: EnsembleParams, j: int) -> PolySeries:
    j = _check_degree(j)
    return _series("orthonormal_p", params.a, params.theta, params.beta, j)


def q_series(params: EnsembleParams, j: int) -> PolySeries:
    j = _check_degree(j)
    return _series("orthonormal_q", params.a, params.theta, params.beta, j)


def hybrid_series(weight: CauchyWeight, j: int) -> PolySeries:
    """Hybrid family sum_k (-1)^k G(k+j+beta) X^k / (G(theta k+a+1) G(k+beta) (j-k)! k!)."""
    j = _check_degree(j)
    return _series("hybrid", weight.a, weight.theta, weight.beta, j)


def eval_p(params: EnsembleParams, j: int, x):
    """Orthonormal p_j evaluated at x^theta (scalar or array x > 0)."""
    return _eval_series(p_series(params, j), x)


def eval_q(params: EnsembleParams, j: int, y):
    """Orthonormal q_j evaluated at y^theta."""
    return _eval_series(q_series(params, j), y)


def eval_hybrid(weight: CauchyWeight, j: int, X):
    """Hybrid polynomial evaluated directly at the variable X."""
    return _eval_series(hybrid_series(weight, j), X, variable="X")


def monic_from_hybrid(weight: CauchyWeight | EnsembleParams, j: int) -> tuple[float, float]:
    """Conversion factors of degree j.

    Returns ``(c, h)`` where the monic polynomial equals ``c`` times the
    hybrid one, and the hybrid polynomial equals ``h`` times the
    orthonormal p_j (only meaningful for b = a + 1).
    """
    if isinstance(weight, EnsembleParams):
        weight = CauchyWeight.from_params(weight)
    j = _check_degree(j)
    a, th, be = weight.a, weight.theta, weight.beta
    c = (-1) ** j * math.exp(math.lgamma(j + 1) + math.lgamma(a + 1 + th * j)
                             + math.lgamma(j + be) - math.lgamma(2 * j + be))
    return c, (-1) ** j / SQRT2


def monic_p_coefficients(params: EnsembleParams, j: int) -> np.ndarray:
    c = p_series(params, j).coeffs
    return c / c[-1]


def monic_q_coefficients(params: EnsembleParams, j: int) -> np.ndarray:
    c = q_series(params, j).coeffs
    return c / c[-1]


def squared_norm(weight: CauchyWeight, j: int) -> float:
    """Squared norm h_j of the monic biorthogonal pair of degree j."""
    j = _check_degree(j)
    a, b, th, be = weight.a, weight.b, weight.theta, weight.beta
    lg = math.lgamma
    return math.exp(2 * lg(j + 1) + 2 * lg(j + be) + lg(a + 1 + th * j) + lg(b + 1 + th * j)
                    - lg(2 * j + be) - lg(2 * j + be + 1)) / th


def bimoment(weight: CauchyWeight, k: int, l: int) -> float:
    """Exact bi-moment of x^{theta k} y^{theta l} against W(x, y)."""
    a, b, th = weight.a, weight.b, weight.theta
    return math.exp(math.lgamma(a + 1 + th * k) + math.lgamma(b + 1 + th * l)) / (
        a + b + 1 + th * (k + l))


def gram_matrix(params: EnsembleParams, size: int, n: int = 200, monic: bool = False,
                method: str = "monomial") -> tuple[np.ndarray, bool]:
    """Quadrature matrix of int int p_k(x^theta) q_l(y^theta) W(x, y).

    Returns the matrix and whether every integral converged under doubling.
    With ``method="monomial"`` both polynomials are expanded into monomials
    x^{theta i} y^{theta j} whose powers are folded into the weight exponents
    of :func:`integrate_cauchy`; this stays accurate for non-integer theta.
    ``method="direct"`` evaluates the polynomials at the quadrature nodes,
    which converges slowly unless theta is an integer.
    """
    a = params.a
    ps = [p_series(params, k) for k in range(size)]
    qs = [q_series(params, k) for k in range(size)]
    if monic:
        ps = [_rescale(s, 1.0 / float(s.coeffs[-1])) for s in ps]
        qs = [_rescale(s, 1.0 / float(s.coeffs[-1])) for s in qs]
    out = np.empty((size, size))
    ok = True
    if method == "direct":
        for k in range(size):
            for l in range(size):
                res: QuadResult = integrate_cauchy(
                    lambda x, y, P=ps[k], Q=qs[l]: P(x) * Q(y), a, a + 1.0, n, atol=1e-12)
                out[k, l] = res.value
                ok &= res.converged
        return out, ok
    if method != "monomial":
        raise DomainError(f"unknown method {method!r}")
    th = params.theta
    moments = np.empty((size, size))
    for i in range(size):
        for j in range(size):
            res = integrate_cauchy(lambda x, y: np.ones_like(x * y),
                                   a + th * i, a + 1.0 + th * j, n)
            moments[i, j] = res.value
            ok &= res.converged
    for k in range(size):
        for l in range(size):
            cp, cq = ps[k].coeffs, qs[l].coeffs
            terms = (cp[:, None] * cq[None, :] * moments[:k + 1, :l + 1]).ravel()
            out[k, l] = math.fsum(terms.tolist())
    return out, ok


def _rescale(series: PolySeries, factor: float) -> PolySeries:
    shift = math.log(abs(factor))
    sgn = 1 if factor > 0 else -1
    return PolySeries(series.degree, tuple(v + shift for v in series.log_abs),
                      tuple(s * sgn for s in series.signs), series.theta, "monic")


@dataclass(frozen=True)
class RecurrenceCoeffs:
    """x^2 (a2 p_{j+2} + a1 p_{j+1} + a0 p_j) = r3 p_{j+3} + ... + rm1 p_{j-1}."""

    a2: float
    a1: float
    a0: float
    r3: float
    r2: float
    r1: float
    r0: float
    rm1: float

    def as_tuple(self):
        return (self.a2, self.a1, self.a0, self.r3, self.r2, self.r1, self.r0, self.rm1)


def recurrence_coeffs_theta2(a: float, j: int) -> RecurrenceCoeffs:
    """Five-term recurrence coefficients of the orthonormal p_j at theta = 2."""
    if not a > -1:
        raise DomainError("a must exceed -1")
    q = 2 * a * j + 3 * a + 2 * j**2 + 6 * j + 5
    d2, d4 = a + 2 * j + 2, a + 2 * j + 4
    return RecurrenceCoeffs(
        a2=q / d4,
        a1=-2 * (a + 2 * j + 3) * q / (d2 * d4),
        a0=q / d2,
        r3=(j + 3) * (a + j + 3) * q / d4,
        r2=(a**3 + 6 * a**2 * j + 12 * a**2 + 12 * a * j**2 + 46 * a * j + 41 * a
            + 8 * j**3 + 46 * j**2 + 82 * j + 42) * q / (d2 * d4),
        r1=(a + 2 * j + 3) * q * (2 * a**2 + 6 * a * j + 9 * a + 6 * j**2 + 18 * j + 10)
           / (d2 * d4),
        r0=(a**3 + 6 * a**2 * j + 6 * a**2 + 12 * a * j**2 + 26 * a * j + 11 * a
            + 8 * j**3 + 26 * j**2 + 22 * j + 6) * q / (d2 * d4),
        rm1=j * (a + j) * q / d2,
    )


def recurrence_coeffs_general_beta(a: float, beta: float, j: int) -> RecurrenceCoeffs:
    """Recurrence coefficients of the hybrid polynomials in terms of beta.

    Valid for the hybrid family at theta = 2 with any b (beta = (a+b+1)/2).
    """
    if not a > -1:
        raise DomainError("a must exceed -1")
    if not beta > 0:
        raise DomainError("beta must be positive")
    b = beta
    q = a + 1 + 2 * (j + 1) * (j + 1 + b)
    poly = (b**4 - (2 * a + 5) * b**3 + (a * (a + 7) + 8) * b**2 - 2 * a * (a + 2) * b
            - a * (a + 7) + b - 9)
    a2 = q / (2 * j + 3 + b)
    a1 = 2 * q * (2 * j + 2 + b) / ((2 * j + 1 + b) * (2 * j + 3 + b))
    a0 = q / (2 * j + 1 + b)
    r3 = -q * (j + 3) * (a + 2 * j + 5) * (a + 2 * j + 6) * (b + j + 2) / (
        (b + 2 * j + 3) * (b + 2 * j + 4) * (b + 2 * j + 5))
    r2 = q / ((b + 2 * j + 1) * (b + 2 * j + 3)) * (
        -(j + 2) * (a + 2 * j + 3) * (a + 2 * j + 4) * (b + j + 1)
        + (j + 3) * (a + 2 * j + 5) * (a + 2 * j + 6) * (b + j + 2) * (b + 2 * j + 1)
        / (b + 2 * j + 5))
    # the 1/(b+2j) and 1/(b+2j-1) terms come with factors that vanish with them
    inv_b2j = 1 / (b + 2 * j) if b + 2 * j != 0 else 0.0
    r1 = -(b + 2 * j + 2) * q * (
        b * (b - 2) * (a - b + 1) * (a - b + 2) / 8 * (1 / (b + 2 * j + 4) - inv_b2j)
        + poly / 4 * (1 / (b + 2 * j + 1) - 1 / (b + 2 * j + 3))
        + 1.5)
    if b + 2 * j - 1 == 0:
        low = 0.0
    else:
        low = (b - 1) ** 2 * (a - b) * (a - b + 1) / (8 * (b + 2 * j - 1))
    r0 = q * ((4 * b - 2 * a - 3) / 2 + low - poly / (4 * (b + 2 * j + 1))
              + (b - 3) * (b + 1) * (a - b + 2) * (a - b + 3) / (8 * (b + 2 * j + 3))
              + 2 * j)
    if j == 0:
        rm1 = 0.0
    else:
        rm1 = -j * (b + j - 1) * (a - 2 * b - 2 * j + 1) * (a - 2 * (b + j - 1)) / (
            (b + 2 * j - 1) * (b + 2 * j) * (b + 2 * j + 1)) * q
    return RecurrenceCoeffs(a2, a1, a0, r3, r2, r1, r0, rm1)


def specialize_general_beta(coeffs: RecurrenceCoeffs) -> RecurrenceCoeffs:
    """Carry hybrid-family coefficients over to the orthonormal p_j.

    The hybrid polynomial of degree i is (-1)^i p_i / sqrt(2), so the
    coefficients of odd offsets from j flip sign.
    """
    c = coeffs
    return RecurrenceCoeffs(c.a2, -c.a1, c.a0, -c.r3, c.r2, -c.r1, c.r0, -c.rm1)


def _residual(coeffs: RecurrenceCoeffs, values, j, X):
    a2, a1, a0, r3, r2, r1, r0, rm1 = coeffs.as_tuple()
    pm1 = values(j - 1) if j >= 1 else 0.0
    terms_l = [X * a2 * values(j + 2), X * a1 * values(j + 1), X * a0 * values(j)]
    terms_r = [r3 * values(j + 3), r2 * values(j + 2), r1 * values(j + 1),
               r0 * values(j), rm1 * pm1]
    scale = max(abs(t) for t in terms_l + terms_r)
    diff = math.fsum(terms_l) - math.fsum(terms_r)
    return abs(diff) / scale if scale > 0 else abs(diff)


def recurrence_residual(params: EnsembleParams, j: int, x: float,
                        source: str = "theta2") -> float:
    """Normalized residual of the five-term recurrence for p_k(x^2).

    ``source`` selects the coefficient set: ``"theta2"`` or
    ``"general_beta"`` (hybrid coefficients carried over to p_j).
    """
    if params.theta != 2.0:
        raise DomainError("the five-term recurrence is stated for theta = 2")
    if not x > 0:
        raise DomainError("x must be positive")
    if int(j) != j or j < 0 or j > 40:
        raise DomainError("recurrence_residual supports 0 <= j <= 40")
    if source == "theta2":
        coeffs = recurrence_coeffs_theta2(params.a, j)
    elif source == "general_beta":
        coeffs = specialize_general_beta(
            recurrence_coeffs_general_beta(params.a, params.beta, j))
    else:
        raise DomainError(f"unknown coefficient source {source!r}")
    return _residual(coeffs, lambda i: eval_p(params, i, x), j, x * x)


def hybrid_recurrence_residual(weight: CauchyWeight, j: int, X: float) -> float:
    """Residual of the beta-form recurrence on the hybrid family at theta = 2."""
    if weight.theta != 2.0:
        raise DomainError("the hybrid recurrence is stated for theta = 2")
    coeffs = recurrence_coeffs_general_beta(weight.a, weight.beta, j)
    return _residual(coeffs, lambda i: eval_hybrid(weight, i, X), j, X)
