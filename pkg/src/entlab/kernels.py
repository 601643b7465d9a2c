"""Correlation kernels of the unconstrained interpolating ensemble.

All four kernels are built from the polynomial kernel

    K00(x, y) = sum_k p_k(x^theta) q_k(y^theta) = sum_{k,i} C[k, i] x^{theta k} y^{theta i}

and the Stieltjes-type transform

    J(x; s) = int_0^inf v^s e^{-v} / (x + v) dv,

so K01, K10 and K11 reduce to finite sums of products of J values.  J is
computed either by Gauss-Laguerre quadrature (default) or in closed form
through the upper incomplete gamma function,
J(x; s) = Gamma(s + 1) x^s e^x Gamma(-s, x).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from .ensembles import EnsembleParams
from .errors import DomainError, QuadratureWarning
from .pfaffian import pfaffian, pfaffian_expansion
from .polynomials import p_series, q_series
from .quadrature import QuadResult, gauss_laguerre, integrate_cauchy, integrate_halfline
from .special import (digamma, gamma_ratio_falling, gamma_ratio_falling_derivative,
                      upper_incomplete_gamma, upper_incomplete_gamma_scaled)

DEFAULT_NODES = 120
QUAD_RTOL = 1e-11
# above this cancellation factor a double-precision kernel value is recomputed
# in extended precision
CANCELLATION_LIMIT = 1e6
EXTENDED_DPS = 40


@dataclass(frozen=True)
class KernelEval:
    k00: float
    k01: float
    k10: float
    k11: float


@dataclass(frozen=True)
class FactorPair:
    w_val: float
    v_val: float


@lru_cache(maxsize=256)
def _h_logs(m: int, theta: float, a: float) -> tuple[np.ndarray, np.ndarray]:
    # log|c_k| and sign of c_k = (-1)^k G(k+alpha+m+1) / (G(k+alpha+1) (m-1-k)! k!)
    alpha = 2.0 * (a + 1.0) / theta - 1.0
    k = np.arange(m)
    lg = np.vectorize(math.lgamma)
    logs = lg(k + alpha + m + 1) - lg(k + alpha + 1) - lg(m - k) - lg(k + 1)
    return logs, np.where(k % 2 == 0, 1.0, -1.0)


def _h_coeffs(params: EnsembleParams) -> np.ndarray:
    logs, signs = _h_logs(params.m, params.theta, params.a)
    return signs * np.exp(logs)


def fox_h_terminating(params: EnsembleParams, q: float, x: float, t: float = 1.0) -> float:
    """Finite-sum form of the terminating Fox H-function H_q(x).

    sum_k (-1)^k G(k+alpha+m+1) (t x^theta)^k / (G(k+alpha+1) G(theta k+q+1) (m-1-k)! k!)
    """
    if x < 0:
        raise DomainError("x must be nonnegative")
    logs, signs = _h_logs(params.m, params.theta, params.a)
    terms = []
    for k in range(params.m):
        if k and (x == 0 or t == 0):
            break
        val = logs[k] - math.lgamma(params.theta * k + q + 1)
        if k:
            val += k * (math.log(t) + params.theta * math.log(x))
        terms.append(signs[k] * math.exp(val))
    return math.fsum(terms)


@lru_cache(maxsize=256)
def _k00_matrix(m: int, theta: float, a: float, form: str) -> np.ndarray:
    params = EnsembleParams(m, theta, a)
    if form == "sum":
        c = np.zeros((m, m))
        for j in range(m):
            pc = p_series(params, j).coeffs
            qc = q_series(params, j).coeffs
            c[:j + 1, :j + 1] += np.outer(pc, qc)
        return c
    if form == "double_sum":
        alpha = params.alpha
        logs, signs = _h_logs(m, theta, a)
        k = np.arange(m)
        lg = np.vectorize(math.lgamma)
        row = logs - lg(theta * k + a + 1)   # x-index k
        col = logs - lg(theta * k + a + 2)   # y-index i
        logc = row[:, None] + col[None, :]
        denom = k[:, None] + k[None, :] + alpha + 1
        return theta * np.outer(signs, signs) * np.exp(logc) / denom
    raise DomainError(f"unknown K00 form {form!r}")


def k00_matrix(params: EnsembleParams, form: str = "sum") -> np.ndarray:
    """Coefficients C[k, i] of x^{theta k} y^{theta i} in K00(x, y)."""
    return _k00_matrix(params.m, params.theta, params.a, form)


def _powers(x, theta, m):
    x = np.asarray(x, dtype=float)
    return np.power(x[..., None], theta * np.arange(m))


def k00(params: EnsembleParams, x, y, form: str = "sum"):
    """Polynomial kernel K00(x, y).

    ``form="sum"`` adds p_k(x^theta) q_k(y^theta); ``form="double_sum"``
    uses the closed double sum whose inner sum over the degree has been
    carried out.
    """
    if form == "sum" and np.ndim(x) == 0 and np.ndim(y) == 0:
        if not (x > 0 and y > 0):
            raise DomainError("kernel arguments must be positive")
        from .polynomials import eval_p, eval_q
        return math.fsum(eval_p(params, k, x) * eval_q(params, k, y)
                         for k in range(params.m))
    c = k00_matrix(params, form)
    px = _powers(x, params.theta, params.m)
    py = _powers(y, params.theta, params.m)
    out = np.einsum("...k,ki,...i->...", px, c, py)
    return float(out) if out.ndim == 0 else out


def stieltjes_transform(x, s: float, method: str = "quadrature",
                        n: int = DEFAULT_NODES) -> tuple[np.ndarray, bool]:
    """J(x; s) = int v^s e^-v / (x + v) dv for x > 0 and s > -1.

    Returns ``(values, converged)``; the closed form always reports True.
    """
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("J(x; s) needs x > 0")
    if method == "quadrature":
        vals = []
        for k in (n, 2 * n):
            rule = gauss_laguerre(k, s)
            vals.append((1.0 / (x[..., None] + rule.nodes)) @ rule.weights)
        err = np.abs(vals[1] - vals[0])
        return vals[1], bool(np.all(err <= QUAD_RTOL * np.abs(vals[1])))
    if method == "closed":
        gs = math.gamma(s + 1)
        return np.vectorize(lambda xi: gs * upper_incomplete_gamma_scaled(-s, xi),
                            otypes=[float])(x), True
    raise DomainError(f"unknown method {method!r}; use 'quadrature' or 'closed'")


def _flag(ok, what):
    if not ok:
        warnings.warn(f"{what}: quadrature did not converge under doubling",
                      QuadratureWarning, stacklevel=3)


def _j_table(params, x, shift, method, n):
    # J(x; a + shift + theta i) for i = 0..m-1, stacked on the last axis
    cols, ok = [], True
    for i in range(params.m):
        v, good = stieltjes_transform(x, params.a + shift + params.theta * i, method, n)
        cols.append(v)
        ok &= good
    return np.stack(cols, axis=-1), ok


def _reduced_01(params, x, y, method, n):
    # K01(x, y) / (x^a e^-x)
    c = k00_matrix(params)
    jx, ok = _j_table(params, x, 1.0, method, n)
    return np.einsum("...k,ki,...i->...", _powers(y, params.theta, params.m), c, jx), ok


def _reduced_10(params, x, y, method, n):
    # K10(x, y) / (y^(a+1) e^-y)
    c = k00_matrix(params)
    jy, ok = _j_table(params, y, 0.0, method, n)
    return np.einsum("...k,ki,...i->...", jy, c, _powers(x, params.theta, params.m)), ok


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def _check_args(x, y):
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    if np.any(~(x > 0)) or np.any(~(y > 0)):
        raise DomainError("kernel arguments must be positive")
    return x, y


def k01(params: EnsembleParams, x, y, method: str = "quadrature", n: int = DEFAULT_NODES):
    """K01(x, y) = x^a e^-x int v^(a+1) e^-v K00(y, v) / (x + v) dv."""
    x, y = _check_args(x, y)
    red, ok = _reduced_01(params, x, y, method, n)
    _flag(ok, "k01")
    return _out(np.power(x, params.a) * np.exp(-x) * red)


def k10(params: EnsembleParams, x, y, method: str = "quadrature", n: int = DEFAULT_NODES):
    """K10(x, y) = y^(a+1) e^-y int w^a e^-w K00(w, x) / (y + w) dw."""
    x, y = _check_args(x, y)
    red, ok = _reduced_10(params, x, y, method, n)
    _flag(ok, "k10")
    return _out(np.power(y, params.a + 1) * np.exp(-y) * red)


def k11(params: EnsembleParams, x, y, method: str = "quadrature", n: int = DEFAULT_NODES):
    """K11(x, y): the double integral over (v, w) minus W(x, y).

    K00 is a finite sum of separable monomials, so the tensor-product rule
    over (v, w) factorizes into products of one-dimensional sums.  Where the
    subtraction of W loses too many digits the point is recomputed with
    :func:`k11_extended`.
    """
    x, y = _check_args(x, y)
    a = params.a
    c = k00_matrix(params)
    jy, ok1 = _j_table(params, y, 0.0, method, n)
    jx, ok2 = _j_table(params, x, 1.0, method, n)
    _flag(ok1 and ok2, "k11")
    double = np.einsum("...k,ki,...i->...", jy, c, jx)
    scale = np.einsum("...k,ki,...i->...", np.abs(jy), np.abs(c), np.abs(jx))
    inner = double - 1.0 / (x + y)
    pref = np.power(x, a) * np.power(y, a + 1) * np.exp(-x - y)
    out = np.atleast_1d(pref * inner).astype(float)
    bad = np.atleast_1d(scale > CANCELLATION_LIMIT * np.abs(inner))
    if np.any(bad):
        xs, ys = np.atleast_1d(x), np.atleast_1d(y)
        for idx in zip(*np.nonzero(bad)):
            out[idx] = k11_extended(params, xs[idx], ys[idx])
    return _out(out.reshape(np.shape(x)))


@lru_cache(maxsize=64)
def _mp_k00_matrix(m: int, theta: float, a: float):
    with mpmath.workdps(EXTENDED_DPS):
        th, a_ = mpmath.mpf(theta), mpmath.mpf(a)
        alpha = 2 * (a_ + 1) / th - 1
        g = mpmath.gamma
        coef = [(-1) ** k * g(k + alpha + m + 1) / (g(k + alpha + 1) * mpmath.factorial(m - 1 - k)
                                                     * mpmath.factorial(k)) for k in range(m)]
        return [[th * coef[k] * coef[i] / (g(th * k + a_ + 1) * g(th * i + a_ + 2)
                                           * (i + k + alpha + 1)) for i in range(m)]
                for k in range(m)]


def _mp_stieltjes(x, s):
    return mpmath.gamma(s + 1) * x ** s * mpmath.exp(x) * mpmath.gammainc(-s, x)


def k11_extended(params: EnsembleParams, x: float, y: float) -> float:
    """K11(x, y) from the closed-form transform in 40-digit arithmetic."""
    if not (x > 0 and y > 0):
        raise DomainError("kernel arguments must be positive")
    m = params.m
    c = _mp_k00_matrix(m, params.theta, params.a)
    with mpmath.workdps(EXTENDED_DPS):
        th, a = mpmath.mpf(params.theta), mpmath.mpf(params.a)
        x_, y_ = mpmath.mpf(x), mpmath.mpf(y)
        jy = [_mp_stieltjes(y_, a + th * k) for k in range(m)]
        jx = [_mp_stieltjes(x_, a + 1 + th * i) for i in range(m)]
        double = mpmath.fsum(c[k][i] * jy[k] * jx[i] for k in range(m) for i in range(m))
        val = x_ ** a * y_ ** (a + 1) * mpmath.exp(-x_ - y_) * (double - 1 / (x_ + y_))
        return float(val)


def kernel_eval(params: EnsembleParams, x: float, y: float,
                method: str = "quadrature", n: int = DEFAULT_NODES) -> KernelEval:
    return KernelEval(k00(params, x, y), k01(params, x, y, method, n),
                      k10(params, x, y, method, n), k11(params, x, y, method, n))


def weight(params: EnsembleParams, x, y):
    """W(x, y) = x^a y^(a+1) e^(-x-y) / (x + y)."""
    x, y = _check_args(x, y)
    return _out(np.power(x, params.a) * np.power(y, params.a + 1) * np.exp(-x - y) / (x + y))


def factor_w(params: EnsembleParams, x):
    """w(x) = theta sum_k c_k x^{theta k} / G(theta k + a + 2)."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("factor_w needs x >= 0")
    logs, signs = _h_logs(params.m, params.theta, params.a)
    k = np.arange(params.m)
    coef = signs * np.exp(logs - np.vectorize(math.lgamma)(params.theta * k + params.a + 2))
    return _out(params.theta * (_powers(x, params.theta, params.m) @ coef))


def factor_v(params: EnsembleParams, x):
    """v(x) = e^-x x^a - theta x^(2a+1) sum_k c_k G(-theta k - a, x) x^{theta k} / (theta k + a + 1)."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("factor_v needs x > 0")
    th, a, m = params.theta, params.a, params.m
    c = _h_coeffs(params)

    def one(xi):
        terms = [c[k] * upper_incomplete_gamma(-th * k - a, xi) * xi ** (th * k + 2 * a + 1)
                 / (th * k + a + 1) for k in range(m)]
        return math.exp(-xi) * xi ** a - th * math.fsum(terms)

    return _out(np.vectorize(one, otypes=[float])(x))


def factor_pair(params: EnsembleParams, x: float) -> FactorPair:
    return FactorPair(factor_w(params, x), factor_v(params, x))


def one_point_density(params: EnsembleParams, x, method: str = "quadrature",
                      n: int = DEFAULT_NODES):
    """Single-eigenvalue density (K01(x, x) + K10(x, x)) / (2m); integrates to 1."""
    return _out(rho_1(params, x, method, n) / params.m)


def rho_1(params: EnsembleParams, x, method: str = "quadrature", n: int = DEFAULT_NODES):
    x = np.asarray(x, dtype=float)
    return _out((np.asarray(k01(params, x, x, method, n))
                 + np.asarray(k10(params, x, x, method, n))) / 2.0)


def correlation_matrix(params: EnsembleParams, points, method: str = "quadrature",
                       n: int = DEFAULT_NODES) -> np.ndarray:
    """The 2k x 2k skew-symmetric matrix whose Pfaffian gives rho_k.

    Built from the 2 x 2 blocks
    [[dK11(x_i, x_j), sK01(x_i, x_j)], [-sK01(x_j, x_i), dK00(x_i, x_j)]]
    placed at block position (i, j), where dK is the antisymmetrized kernel
    and sK01(x, y) = K01(x, y) + K10(y, x).
    """
    pts = np.asarray(points, dtype=float)
    k = pts.size
    xi, xj = np.meshgrid(pts, pts, indexing="ij")
    k11_ij = np.asarray(k11(params, xi, xj, method, n)).reshape(k, k)
    k00_ij = np.asarray(k00(params, xi, xj, "double_sum")).reshape(k, k)
    sig = (np.asarray(k01(params, xi, xj, method, n))
           + np.asarray(k10(params, xj, xi, method, n))).reshape(k, k)
    mat = np.empty((2 * k, 2 * k))
    mat[0::2, 0::2] = k11_ij - k11_ij.T
    mat[0::2, 1::2] = sig
    mat[1::2, 0::2] = -sig.T
    mat[1::2, 1::2] = k00_ij - k00_ij.T
    return mat


def rho_2_grid(params: EnsembleParams, x, y, method: str = "closed",
               n: int = DEFAULT_NODES):
    """Vectorized rho_2(x, y): the 4 x 4 Pfaffian expanded in closed form."""
    x, y = _check_args(x, y)
    s_xx = np.asarray(k01(params, x, x, method, n)) + np.asarray(k10(params, x, x, method, n))
    s_yy = np.asarray(k01(params, y, y, method, n)) + np.asarray(k10(params, y, y, method, n))
    s_xy = np.asarray(k01(params, x, y, method, n)) + np.asarray(k10(params, y, x, method, n))
    s_yx = np.asarray(k01(params, y, x, method, n)) + np.asarray(k10(params, x, y, method, n))
    d11 = np.asarray(k11(params, x, y, method, n)) - np.asarray(k11(params, y, x, method, n))
    d00 = (np.asarray(k00(params, x, y, "double_sum"))
           - np.asarray(k00(params, y, x, "double_sum")))
    return _out((s_xx * s_yy - d11 * d00 - s_xy * s_yx) / 4.0)


def rho_k(params: EnsembleParams, points, method: str = "quadrature",
          n: int = DEFAULT_NODES, pfaffian_method: str = "elimination") -> float:
    """k-point correlation function, k in {1, 2}, as 2^-k Pf of the block matrix.

    The 2^-k scaling makes rho_1(x) = (K01(x, x) + K10(x, x)) / 2, which
    integrates to m.
    """
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    if pts.ndim != 1 or pts.size not in (1, 2):
        raise DomainError("rho_k supports k = 1 or k = 2 points")
    if np.any(~(pts > 0)):
        raise DomainError("points must be positive")
    if pts.size == 2 and pts[0] == pts[1]:
        raise DomainError("points must be distinct")
    mat = correlation_matrix(params, pts, method, n)
    pf = pfaffian(mat) if pfaffian_method == "elimination" else pfaffian_expansion(mat)
    return pf / 2.0 ** pts.size


def _moment_terms(params: EnsembleParams, which: str, beta: float):
    # per-k pieces of the beta-moment: (prefactor, g, dlog of the smooth part, g')
    if which not in ("01", "10"):
        raise DomainError("which must be '01' or '10'")
    if not beta > 0:
        raise DomainError("beta must be positive")
    th, a, m = params.theta, params.a, params.m
    shift = 1.0 if which == "01" else 2.0
    logs, signs = _h_logs(m, th, a)
    sign_m = -1.0 if m % 2 == 0 else 1.0      # (-1)^(m+1)
    out = []
    for k in range(m):
        sigma = k + (beta + 2 * a + 2) / th
        z = k + 1 + beta / th
        last = beta + a + shift + th * k   # argument of the trailing gamma
        logp = (logs[k] - math.lgamma(th * k + a + shift) + math.log(th / beta)
                + math.lgamma(sigma) - math.lgamma(sigma + m) + math.lgamma(last))
        pref = sign_m * signs[k] * math.exp(logp)
        dlog = -1.0 / beta + (digamma(sigma) - digamma(sigma + m)) / th + digamma(last)
        out.append((pref, gamma_ratio_falling(z, m), dlog,
                    gamma_ratio_falling_derivative(z, m) / th))
    return out


def kernel_beta_moment(params: EnsembleParams, which: str, beta: float) -> float:
    """Closed form of int_0^inf x^beta K01(x, x) dx (``"01"``) or of K10 (``"10"``)."""
    return math.fsum(p * g for p, g, _, _ in _moment_terms(params, which, beta))


def kernel_beta_moment_derivative(params: EnsembleParams, which: str, beta: float) -> float:
    """Analytic d/dbeta of :func:`kernel_beta_moment`."""
    return math.fsum(p * (g * dl + dg) for p, g, dl, dg in _moment_terms(params, which, beta))


def kernel_beta_moment_fd(params: EnsembleParams, which: str, beta: float,
                          step: float = 1e-5) -> float:
    """Central finite-difference derivative; a cross-check for the analytic one."""
    return (kernel_beta_moment(params, which, beta + step)
            - kernel_beta_moment(params, which, beta - step)) / (2 * step)


def kernel_beta_moment_quadrature(params: EnsembleParams, which: str, beta: float,
                                  n: int = 100, route: str = "cauchy"):
    """Quadrature value of the beta-moment, returned as a QuadResult.

    ``route="cauchy"`` writes the moment as one integral over the quadrant
    against the Cauchy factor 1/(x + v) and uses :func:`integrate_cauchy`;
    ``route="diagonal"`` integrates the kernel diagonal with a half-line rule;
    it converges slowly because J(x; s) is not smooth at x = 0.
    """
    if beta < 0:
        raise DomainError("beta must be nonnegative")
    a = params.a
    if route == "cauchy":
        c = k00_matrix(params)
        th, m = params.theta, params.m
        total, err, ok = 0.0, 0.0, True
        # monomial-wise so that non-integer powers sit in the weights
        for k in range(m):
            for i in range(m):
                if which == "01":   # K00(x, v) x^(a+beta) v^(a+1)
                    ax, ay = a + beta + th * k, a + 1 + th * i
                else:               # K00(w, x) x^(a+1+beta) w^a
                    ax, ay = a + 1 + beta + th * i, a + th * k
                res = integrate_cauchy(lambda x, y: np.ones_like(x * y), ax, ay, n)
                total += c[k, i] * res.value
                err += abs(c[k, i]) * res.error
                ok &= res.converged
        return QuadResult(total, err, ok, 2 * n)
    if route == "diagonal":
        if which == "01":
            return integrate_halfline(
                lambda x: _reduced_01(params, x, x, "closed", n)[0], a + beta, n)
        return integrate_halfline(
            lambda x: _reduced_10(params, x, x, "closed", n)[0], a + 1 + beta, n)
    raise DomainError(f"unknown route {route!r}")


def rho_1_integral(params: EnsembleParams, n: int = 100, route: str = "cauchy"):
    """Quadrature of int rho_1(x) dx, which should equal m, as a QuadResult."""
    q01 = kernel_beta_moment_quadrature(params, "01", 0.0, n, route)
    q10 = kernel_beta_moment_quadrature(params, "10", 0.0, n, route)
    return QuadResult(0.5 * (q01.value + q10.value), 0.5 * (q01.error + q10.error),
                      q01.converged and q10.converged, q01.n)


def saalschutz_identity_residual(params: EnsembleParams, i: int,
                                 precision: str = "auto") -> float:
    """|sum_k c_k / ((i+k+alpha+1)(theta k+a+1)) - 1/(theta i+a+1)|.

    The alternating sum cancels heavily for large m; under ``"auto"`` it is
    redone at ``EXTENDED_DPS`` digits once the double-precision condition
    number passes 100 (each coefficient carries lgamma rounding of a few
    ulps, amplified by the condition number).
    """
    if int(i) != i or not 0 <= i < params.m:
        raise DomainError("need 0 <= i <= m-1")
    if precision not in ("auto", "double", "extended"):
        raise DomainError(f"unknown precision {precision!r}")
    th, a, alpha = params.theta, params.a, params.alpha
    if precision != "extended":
        c = _h_coeffs(params)
        terms = [c[k] / ((i + k + alpha + 1) * (th * k + a + 1)) for k in range(params.m)]
        lhs = math.fsum(terms)
        target = 1.0 / (th * i + a + 1)
        if precision == "double" or math.fsum(map(abs, terms)) <= 100 * abs(target):
            return abs(lhs - target)
    with mpmath.workdps(EXTENDED_DPS):
        th, a = mpmath.mpf(th), mpmath.mpf(a)
        alpha = 2 * (a + 1) / th - 1
        m = params.m
        lhs = mpmath.fsum(
            (-1) ** k * mpmath.rgamma(k + alpha + 1) * mpmath.gamma(k + alpha + m + 1)
            / (mpmath.factorial(m - 1 - k) * mpmath.factorial(k)
               * (i + k + alpha + 1) * (th * k + a + 1))
            for k in range(m))
        return float(abs(lhs - 1 / (th * i + a + 1)))
