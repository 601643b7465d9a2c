import math

import mpmath
import numpy as np
import pytest
from scipy import integrate
from scipy.special import xlogy

from entlab import moments
from entlab.ensembles import EnsembleParams
from entlab.errors import DomainError
from entlab.special import digamma


def _quad_m2(theta, a):
    """E[purity], E[vn] for m = 2 by direct integration over lambda = (t, 1 - t)."""
    def dens(t):
        u = 1 - t
        return (t - u) * (t ** theta - u ** theta) / (t + u)

    # the (t (1 - t))^a factor goes into quad's algebraic endpoint weight
    opts = dict(limit=200, epsabs=1e-14, epsrel=1e-13, weight="alg", wvar=(a, a))
    z = integrate.quad(dens, 0, 1, **opts)[0]
    p = integrate.quad(lambda t: (t * t + (1 - t) ** 2) * dens(t), 0, 1, **opts)[0]
    v = integrate.quad(lambda t: -(xlogy(t, t) + xlogy(1 - t, 1 - t)) * dens(t),
                       0, 1, **opts)[0]
    return p / z, v / z


def _quad_m3(theta, a):
    def dens(t, s):
        lam = (t, s, 1 - t - s)
        out = 1.0
        for i in range(3):
            for j in range(i + 1, 3):
                x, y = lam[i], lam[j]
                out *= (x - y) * (x ** theta - y ** theta) / (x + y)
        return out * (lam[0] * lam[1] * lam[2]) ** a

    def expect(f):
        return integrate.dblquad(lambda s, t: f(t, s) * dens(t, s), 0, 1, 0, lambda t: 1 - t,
                                 epsabs=1e-12, epsrel=1e-10)[0]

    z = expect(lambda t, s: 1.0)
    p = expect(lambda t, s: t * t + s * s + (1 - t - s) ** 2)
    return p / z


class TestExamples:
    def test_single_eigenvalue(self):
        for th, a in ((1.7, 0.3), (0.4, -0.9), (3.0, 5.0)):
            p = EnsembleParams(1, th, a)
            assert moments.mean_purity(p) == 1.0 and moments.mean_vn(p) == 0.0

    def test_endpoints_m2(self):
        assert moments.mean_purity(EnsembleParams(2, 2.0, 0.0)) == pytest.approx(0.8, rel=1e-14)
        assert moments.mean_purity(EnsembleParams(2, 1.0, -0.5)) == pytest.approx(7 / 8, rel=1e-14)
        assert moments.mean_vn(EnsembleParams(2, 2.0, 0.0)) == pytest.approx(1 / 3, rel=1e-14)
        assert moments.mean_vn(EnsembleParams(2, 1.0, -0.5)) == pytest.approx(
            2 * math.log(2) - 7 / 6, rel=1e-13)

    def test_closed_forms(self):
        assert moments.mean_purity_hs(2, 2) == pytest.approx(0.8)
        assert moments.mean_purity_bh(2, 2) == pytest.approx(7 / 8)
        assert moments.mean_purity_hs(3, 4) == pytest.approx(7 / 13)
        assert moments.mean_vn_hs_page(2, 2) == pytest.approx(1 / 3, rel=1e-14)
        assert moments.mean_vn_bh(2, 2) == pytest.approx(2 * math.log(2) - 7 / 6, rel=1e-13)
        assert moments.mean_vn_hs_page(1, 1) == pytest.approx(0.0, abs=1e-15)

    def test_closed_forms_reject_m_above_n(self):
        for fn in (moments.mean_purity_hs, moments.mean_purity_bh, moments.mean_vn_bh,
                   moments.mean_vn_hs_page):
            with pytest.raises(DomainError):
                fn(3, 2)

    def test_precision_argument(self):
        with pytest.raises(DomainError):
            moments.mean_purity(EnsembleParams(2, 1.5, 0.0), precision="quad")


class TestIndependentOracles:
    @pytest.mark.parametrize("theta, a", [(1.0, 0.0), (1.3, 0.5), (1.5, 0.25), (2.0, -0.5),
                                          (0.6, 2.0), (3.1, 0.1)])
    def test_m2_direct_integration(self, theta, a):
        p_ref, v_ref = _quad_m2(theta, a)
        params = EnsembleParams(2, theta, a)
        assert moments.mean_purity(params) == pytest.approx(p_ref, rel=1e-9)
        assert moments.mean_vn(params) == pytest.approx(v_ref, rel=1e-9)

    @pytest.mark.parametrize("theta, a", [(1.5, 0.25), (1.2, 1.0)])
    def test_m3_direct_integration(self, theta, a):
        assert moments.mean_purity(EnsembleParams(3, theta, a)) == pytest.approx(
            _quad_m3(theta, a), rel=1e-7)

    @pytest.mark.parametrize("m, theta, a", [(6, 1.37, 0.21), (12, 1.8, 2.5), (25, 1.1, -0.3)])
    def test_extended_equals_double(self, m, theta, a):
        p = EnsembleParams(m, theta, a)
        for fn in (moments.mean_purity, moments.mean_vn):
            assert fn(p, "double") == pytest.approx(fn(p, "extended"), rel=1e-10)


class TestEndpoints:
    def test_grid(self):
        for m in range(1, 11):
            for n in range(m, 16):
                hs = EnsembleParams.from_endpoint(m, n, "hs")
                bh = EnsembleParams.from_endpoint(m, n, "bh")
                assert moments.mean_purity(hs) == pytest.approx(moments.mean_purity_hs(m, n), rel=1e-12)
                assert moments.mean_purity(bh) == pytest.approx(moments.mean_purity_bh(m, n), rel=1e-12)
                assert abs(moments.mean_vn(bh) - moments.mean_vn_bh(m, n)) <= 1e-11

    @pytest.mark.parametrize("m, n, tol", [(2, 2, 1e-12), (5, 8, 1e-10), (20, 30, 1e-8)])
    def test_page_residual(self, m, n, tol):
        assert moments.page_identity_residual(m, n) <= tol

    def test_page_residual_extended(self):
        assert moments.page_identity_residual(20, 30, precision="extended") <= 1e-12


class TestRelations:
    @pytest.mark.parametrize("m, theta, a", [(2, 2.0, 0.0), (3, 1.5, 0.25), (5, 1.0, -0.5),
                                             (7, 1.8, 3.0)])
    def test_unconstrained_relations(self, m, theta, a):
        p = EnsembleParams(m, theta, a)
        d = p.d
        assert abs(moments.mean_purity(p) - moments.unconstrained_mean_tp(p) / (d * (d + 1))) <= 1e-12
        assert abs(moments.mean_vn(p) - (digamma(d + 1) - moments.unconstrained_mean_tvn(p) / d)) <= 1e-12

    def test_tp_by_quadrature(self):
        from entlab.kernels import kernel_beta_moment_quadrature
        p = EnsembleParams(2, 1.5, 0.25)
        q = sum(kernel_beta_moment_quadrature(p, w, 2.0).value for w in ("01", "10")) / 2
        assert moments.unconstrained_mean_tp(p) == pytest.approx(q, rel=1e-6)

    def test_report(self):
        rep = moments.moment_report(EnsembleParams(3, 1.5, 0.25))
        assert rep.d == pytest.approx(8.25)
        assert all(v <= 1e-12 for v in rep.cross_checks.values())


class TestShape:
    def test_ranges(self):
        for m in range(1, 9):
            for th in np.round(np.arange(1.0, 2.01, 0.1), 10):
                for a in (-0.5, 0.0, 1.0, 3.0):
                    p = EnsembleParams(m, th, a)
                    pur, vn = moments.mean_purity(p), moments.mean_vn(p)
                    assert 1 / m - 1e-12 <= pur <= 1 + 1e-12
                    assert -1e-12 <= vn <= math.log(m) + 1e-12

    @pytest.mark.parametrize("m", range(3, 9))
    @pytest.mark.parametrize("a", [-0.5, 0.0])
    def test_monotone_in_theta(self, m, a):
        thetas = np.round(np.arange(1.0, 2.01, 0.1), 10)
        pur = [moments.mean_purity(EnsembleParams(m, t, a)) for t in thetas]
        vn = [moments.mean_vn(EnsembleParams(m, t, a)) for t in thetas]
        assert np.all(np.diff(pur) <= 0) and np.all(np.diff(vn) >= 0)

    @pytest.mark.parametrize("a", [-0.5, 0.0])
    def test_two_level_system_not_monotone_in_theta(self, a):
        # at m = 2 the dependence on theta has an interior extremum; the
        # independent integral confirms it is not an artifact of the sums
        lo, mid, hi = (_quad_m2(t, a)[0] for t in (1.0, 1.5, 2.0))
        assert mid < min(lo, hi)
        assert moments.mean_purity(EnsembleParams(2, 1.5, a)) == pytest.approx(mid, rel=1e-9)

    @pytest.mark.parametrize("m", range(2, 9))
    def test_monotone_in_a(self, m):
        a_grid = np.arange(-0.5, 4.01, 0.5)
        for th in np.round(np.arange(1.0, 2.01, 0.1), 10):
            pur = [moments.mean_purity(EnsembleParams(m, th, a)) for a in a_grid]
            vn = [moments.mean_vn(EnsembleParams(m, th, a)) for a in a_grid]
            assert np.all(np.diff(pur) <= 0) and np.all(np.diff(vn) >= 0)

    def test_bh_vs_hs_ordering(self):
        for m in range(1, 21):
            for n in range(m, 21):
                assert moments.mean_purity_bh(m, n) >= moments.mean_purity_hs(m, n) - 1e-15
                assert moments.mean_vn_bh(m, n) <= moments.mean_vn_hs_page(m, n) + 1e-13
