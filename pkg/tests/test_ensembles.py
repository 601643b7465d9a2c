import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from entlab.ensembles import (EnsembleParams, log_density_constrained,
                              log_density_unconstrained, purity, schur_pfaffian_check,
                              t_purity, t_von_neumann, trace_density, von_neumann)
from entlab.errors import DomainError
from entlab.special import digamma


class TestParams:
    def test_derived(self):
        p = EnsembleParams(3, 1.5, 0.25)
        assert p.alpha == pytest.approx(2 * 1.25 / 1.5 - 1)
        assert p.beta == pytest.approx(p.alpha + 1)
        assert p.d == pytest.approx(1.5 * (4.5 - 1.5 + 2.5))

    @pytest.mark.parametrize("args, bound", [
        ((0, 1.0, 0.0), "m"), ((2, 0.0, 0.0), "theta > 0"), ((2, 1.0, -1.0), "a > -1"),
        ((2.5, 1.0, 0.0), "m"),
    ])
    def test_validation_names_bound(self, args, bound):
        with pytest.raises(DomainError, match=bound):
            EnsembleParams(*args)

    def test_endpoints(self):
        hs = EnsembleParams.from_endpoint(3, 5, "hs")
        bh = EnsembleParams.from_endpoint(3, 5, "bh")
        assert (hs.theta, hs.a) == (2.0, 2.0)
        assert (bh.theta, bh.a) == (1.0, 1.5)
        assert EnsembleParams.from_endpoint(2, 2, "bh").d == 2.0
        with pytest.raises(DomainError, match="m <= n"):
            EnsembleParams.from_endpoint(4, 3, "hs")
        with pytest.raises(DomainError):
            EnsembleParams.from_endpoint(2, 3, "xx")


class TestLogDensity:
    def test_single_eigenvalue(self):
        assert log_density_constrained(EnsembleParams(1, 1.3, 0.7), [1.0]) == 0.0

    @pytest.mark.parametrize("theta", [1.0, 2.0])
    def test_two_point_examples(self, theta):
        val = log_density_constrained(EnsembleParams(2, theta, 0.0), [0.75, 0.25])
        assert val == pytest.approx(math.log(0.25), rel=1e-14)

    def test_unconstrained_examples(self):
        assert log_density_unconstrained(EnsembleParams(1, 1.0, 0.0), [2.0]) == pytest.approx(-2.0)
        assert log_density_unconstrained(EnsembleParams(2, 2.0, 0.0), [3.0, 1.0]) == pytest.approx(
            math.log(4) - 4)
        assert log_density_unconstrained(EnsembleParams(2, 1.0, 1.0), [2.0, 1.0]) == pytest.approx(
            math.log(2 / 3) - 3)

    def test_coincident_is_minus_inf(self):
        assert log_density_constrained(EnsembleParams(2, 1.5, 0.0), [0.5, 0.5]) == -math.inf

    def test_rejects_off_simplex_and_nonpositive(self):
        p = EnsembleParams(2, 1.5, 0.0)
        with pytest.raises(DomainError):
            log_density_constrained(p, [0.6, 0.6])
        with pytest.raises(DomainError):
            log_density_constrained(p, [1.0, 0.0])
        with pytest.raises(DomainError):
            log_density_unconstrained(p, [1.0, -2.0])

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 6), st.floats(0.3, 3.0), st.floats(-0.9, 3.0), st.integers(0, 10**6))
    def test_permutation_invariance(self, m, theta, a, seed):
        rng = np.random.default_rng(seed)
        lam = rng.dirichlet(np.ones(m))
        p = EnsembleParams(m, theta, a)
        base = log_density_constrained(p, lam)
        assert log_density_constrained(p, rng.permutation(lam)) == pytest.approx(base, rel=1e-13, abs=1e-13)

    def test_theta2_reduces_to_vandermonde_squared(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            lam = rng.dirichlet(np.ones(4))
            p = EnsembleParams(4, 2.0, 0.3)
            direct = sum(2 * math.log(abs(lam[i] - lam[j]))
                         for i in range(4) for j in range(i + 1, 4)) + 0.3 * np.log(lam).sum()
            assert log_density_constrained(p, lam) == pytest.approx(direct, abs=1e-12)


class TestFunctionals:
    def test_examples(self):
        assert purity([1.0, 0.0]) == 1.0 and von_neumann([1.0, 0.0]) == 0.0
        assert purity([0.5, 0.5]) == 0.5 and von_neumann([0.5, 0.5]) == pytest.approx(math.log(2))
        assert purity([0.7, 0.3]) == pytest.approx(0.58)
        assert von_neumann([0.7, 0.3]) == pytest.approx(0.6108643, abs=1e-7)
        assert t_purity([1.0]) == 1.0 and t_von_neumann([1.0]) == 0.0
        assert t_purity([2.0, 1.0]) == 5.0 and t_von_neumann([2.0, 1.0]) == pytest.approx(2 * math.log(2))
        assert t_von_neumann([math.e]) == pytest.approx(math.e)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 10), st.integers(0, 10**6))
    def test_ranges(self, m, seed):
        lam = np.random.default_rng(seed).dirichlet(np.ones(m))
        assert 1 / m - 1e-12 <= purity(lam) <= 1 + 1e-12
        assert -1e-12 <= von_neumann(lam) <= math.log(m) + 1e-12

    def test_vectorized(self):
        lam = np.array([[0.5, 0.5], [1.0, 0.0]])
        np.testing.assert_allclose(purity(lam), [0.5, 1.0])


class TestTraceDensity:
    def test_examples(self):
        assert trace_density(EnsembleParams(1, 1.0, -0.5), 1.0) == pytest.approx(
            math.exp(-1) * math.sqrt(1) / math.gamma(0.5) * 1.0)
        p = EnsembleParams(2, 2.0, 0.0)
        assert p.d == 4
        assert trace_density(p, 2.0) == pytest.approx(math.exp(-2) * 8 / 6, rel=1e-14)

    def test_exponential_case(self):
        p = EnsembleParams(1, 1.0, 0.0)
        assert p.d == 1 and trace_density(p, 1.0) == pytest.approx(math.exp(-1))

    def test_mode(self):
        p = EnsembleParams(3, 1.5, 0.25)
        r = np.linspace(p.d - 1 - 0.5, p.d - 1 + 0.5, 1001)
        assert r[np.argmax(trace_density(p, r))] == pytest.approx(p.d - 1, abs=1e-3)

    @pytest.mark.parametrize("d", [0.5, 1.0, 4.0, 17.5])
    def test_normalization_and_log_moment(self, d):
        p = EnsembleParams(1, 1.0, d - 1.0)  # m = 1 gives d = a + 1
        assert p.d == d

        def quad(g):
            parts = (integrate.quad(g, 0, 1, epsabs=1e-14, epsrel=1e-13, limit=200)[0],
                     integrate.quad(g, 1, np.inf, epsabs=1e-14, epsrel=1e-13, limit=200)[0])
            return sum(parts)

        f = lambda r: trace_density(p, r)
        assert quad(f) == pytest.approx(1.0, abs=1e-10)
        # E[r ln r] = d psi(d+1)
        assert quad(lambda r: r * math.log(r) * f(r)) / d == pytest.approx(digamma(d + 1), abs=1e-8)

    def test_domain(self):
        with pytest.raises(DomainError):
            trace_density(EnsembleParams(2, 1.0, 0.0), 0.0)


class TestSchur:
    def test_two(self):
        lhs, rhs = schur_pfaffian_check([2.0, 1.0])
        assert lhs == pytest.approx(1 / 3) and rhs == pytest.approx(1 / 3)

    def test_four(self):
        lhs, rhs = schur_pfaffian_check([4.0, 3.0, 2.0, 1.0])
        a = lambda i, j: (i - j) / (i + j)
        hand = a(4, 3) * a(2, 1) - a(4, 2) * a(3, 1) + a(4, 1) * a(3, 2)
        assert rhs == pytest.approx(hand, rel=1e-12) and lhs == pytest.approx(hand, rel=1e-12)

    def test_permutation_flips_both(self):
        lhs, rhs = schur_pfaffian_check([1.0, 2.0, 3.0, 4.0])
        lhs2, rhs2 = schur_pfaffian_check([2.0, 1.0, 3.0, 4.0])
        assert lhs2 == pytest.approx(-lhs) and rhs2 == pytest.approx(-rhs)

    def test_odd_rejected(self):
        with pytest.raises(DomainError):
            schur_pfaffian_check([1.0, 2.0, 3.0])

    @settings(max_examples=40, deadline=None)
    @given(st.sampled_from([2, 4, 6, 8, 10]), st.integers(0, 2**32 - 1))
    def test_random(self, size, seed):
        lam = np.random.default_rng(seed).uniform(0.05, 5.0, size)
        lhs, rhs = schur_pfaffian_check(lam)
        assert abs(lhs - rhs) <= 1e-10 * abs(lhs)

    def test_double_route_on_spread_inputs(self):
        lam = np.geomspace(0.1, 10, 8)
        lhs, rhs = schur_pfaffian_check(lam, extended=False)
        assert rhs == pytest.approx(lhs, rel=1e-8)
