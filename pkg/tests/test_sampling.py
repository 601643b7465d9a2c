import math

import numpy as np
import pytest
from scipy import stats

from entlab import moments, sampling
from entlab.ensembles import EnsembleParams, purity, von_neumann
from entlab.errors import ConvergenceError, DomainError

SHORT = dict(chains=4, steps=60_000, burn_in=6_000)


class TestConfig:
    @pytest.mark.parametrize("kwargs", [
        dict(chains=0), dict(steps=0), dict(burn_in=10, steps=10), dict(thin=0),
        dict(seed=-1), dict(seed=2**64), dict(step_scale=0.0),
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(DomainError):
            sampling.ChainConfig(**kwargs)

    def test_defaults(self):
        c = sampling.ChainConfig()
        assert (c.chains, c.steps, c.burn_in, c.thin) == (4, 200_000, 20_000, 1)


class TestProposal:
    def test_involution_and_equal_jacobian(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            m = int(rng.integers(2, 7))
            lam = rng.dirichlet(np.ones(m))
            i, j = rng.choice(m, 2, replace=False)
            u, s = rng.uniform(-1, 1), rng.uniform(0.05, 1.0)
            new = sampling.pair_proposal(lam, i, j, u, s)
            if new is None:
                continue
            np.testing.assert_allclose(sampling.pair_proposal(new, i, j, -u, s), lam, atol=1e-15)
            # d(delta)/du = s (lam_i + lam_j) is the same at both ends
            assert new[i] + new[j] == pytest.approx(lam[i] + lam[j], rel=1e-15)
            assert new.sum() == pytest.approx(1.0, abs=1e-15)

    def test_leaving_simplex_is_rejected(self):
        assert sampling.pair_proposal([0.5, 0.5], 0, 1, 0.99, 1.5) is None

    def test_forward_reverse_densities_match(self):
        # histogram of forward moves vs reverse moves from the proposed states
        rng = np.random.default_rng(1)
        lam = np.array([0.2, 0.3, 0.5])
        s = 0.25  # every move stays inside the simplex
        u = rng.uniform(-1, 1, 20000)
        fwd = np.array([sampling.pair_proposal(lam, 0, 2, v, s)[0] - lam[0] for v in u])
        back = [sampling.pair_proposal(lam + np.array([d, 0, -d]), 0, 2, -v, s)[0]
                for d, v in zip(fwd[:500], u[:500])]
        np.testing.assert_allclose(back, lam[0], atol=1e-15)
        half = s * (lam[0] + lam[2])
        assert stats.kstest(fwd, stats.uniform(-half, 2 * half).cdf).pvalue > 1e-3


class TestESS:
    def test_iid(self):
        x = np.random.default_rng(2).standard_normal(20000)
        assert sampling.effective_sample_size(x) == pytest.approx(20000, rel=0.1)

    def test_ar1(self):
        rng = np.random.default_rng(3)
        rho, n = 0.8, 200_000
        e = rng.standard_normal(n)
        x = np.empty(n)
        x[0] = e[0]
        for t in range(1, n):
            x[t] = rho * x[t - 1] + e[t]
        assert sampling.effective_sample_size(x) == pytest.approx(n * (1 - rho) / (1 + rho), rel=0.1)

    def test_bounded_by_length(self):
        x = np.random.default_rng(4).standard_normal(500)
        assert sampling.effective_sample_size(x) <= 500


class TestMCMC:
    def test_deterministic(self):
        cfg = sampling.ChainConfig(chains=2, steps=3000, burn_in=1000, seed=42)
        p = EnsembleParams(3, 1.5, 0.25)
        a, b = sampling.run_chains(p, cfg), sampling.run_chains(p, cfg)
        assert np.array_equal(a.states, b.states)
        assert sampling.sample_interpolating_mcmc(p, cfg) == sampling.sample_interpolating_mcmc(p, cfg)

    def test_chain_streams_independent_of_chain_count(self):
        p = EnsembleParams(3, 1.5, 0.25)
        two = sampling.run_chains(p, sampling.ChainConfig(chains=2, steps=3000, burn_in=1000, seed=9))
        four = sampling.run_chains(p, sampling.ChainConfig(chains=4, steps=3000, burn_in=1000, seed=9))
        assert np.array_equal(two.states, four.states[:2])

    def test_states_on_simplex(self):
        run = sampling.run_chains(EnsembleParams(4, 1.2, -0.5),
                                  sampling.ChainConfig(chains=2, steps=4000, burn_in=1000, thin=7))
        assert run.states.shape == (2, len(range(1000, 4000, 7)), 4)
        np.testing.assert_allclose(run.states.sum(axis=-1), 1.0, atol=1e-12)
        assert np.all(run.states > 0)

    def test_acceptance_after_tuning(self):
        run = sampling.run_chains(EnsembleParams(3, 1.5, 0.25),
                                  sampling.ChainConfig(chains=4, steps=40_000, burn_in=10_000,
                                                       step_scale=5.0))
        assert np.all((run.acceptance >= 0.25) & (run.acceptance <= 0.40))

    def test_zero_acceptance_raises(self):
        cfg = sampling.ChainConfig(chains=1, steps=300, burn_in=100, step_scale=1e9)
        with pytest.raises(ConvergenceError, match="step_scale"):
            sampling.run_chains(EnsembleParams(3, 1.5, 0.0), cfg)

    def test_constrained_needs_two(self):
        with pytest.raises(DomainError):
            sampling.run_chains(EnsembleParams(1, 1.5, 0.0), sampling.ChainConfig(steps=10, burn_in=1))

    @pytest.mark.parametrize("m, theta, a, target", [(2, 2.0, 0.0, 0.8), (2, 1.0, -0.5, 7 / 8)])
    def test_endpoint_purity(self, m, theta, a, target):
        st = sampling.sample_interpolating_mcmc(EnsembleParams(m, theta, a),
                                                sampling.ChainConfig(seed=5, **SHORT))
        assert abs(st.zscore(target)) <= 3

    def test_unconstrained_trace_mean(self):
        p = EnsembleParams(2, 1.5, 0.0)
        st = sampling.sample_interpolating_mcmc(p, sampling.ChainConfig(seed=6, **SHORT),
                                                "trace_r_on_unconstrained")
        assert abs(st.zscore(p.d)) <= 3


class TestEigen:
    def test_examples(self):
        np.testing.assert_allclose(sampling.hermitian_eigenvalues(np.eye(3)), [1, 1, 1])
        np.testing.assert_allclose(sampling.hermitian_eigenvalues(np.diag([3.0, 1.0])), [1, 3])
        np.testing.assert_allclose(sampling.hermitian_eigenvalues(np.array([[2, 1j], [-1j, 2]])),
                                   [1, 3], atol=1e-14)

    def test_invariants(self):
        rng = np.random.default_rng(8)
        g = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        h = g @ g.conj().T
        ev = sampling.hermitian_eigenvalues(h)
        assert np.all(np.diff(ev) >= 0)
        assert ev.sum() == pytest.approx(np.trace(h).real, rel=1e-12)
        assert np.prod(ev) == pytest.approx(np.linalg.det(h).real, rel=1e-9)

    def test_limit(self):
        with pytest.raises(DomainError):
            sampling.hermitian_eigenvalues(np.eye(65))


class TestDirect:
    def test_haar_unitarity_and_moments(self):
        u = sampling.haar_unitary(np.random.default_rng(0), 3, 20000)
        eye = np.eye(3)
        assert np.max(np.abs(np.conj(np.swapaxes(u, -1, -2)) @ u - eye)) <= 1e-12
        # Haar: E|U_11|^2 = 1/m and E|U_11|^4 = 2/(m(m+1))
        w = np.abs(u[:, 0, 0]) ** 2
        assert w.mean() == pytest.approx(1 / 3, abs=0.01)
        assert (w ** 2).mean() == pytest.approx(2 / 12, abs=0.01)

    def test_hs_spectra(self):
        s = sampling.sample_hs_direct(3, 5, 1000, seed=1)
        np.testing.assert_allclose(s.sum(axis=1), 1.0, atol=1e-14)
        assert np.all(s >= 0)

    def test_hs_domain(self):
        with pytest.raises(DomainError):
            sampling.sample_hs_direct(3, 2, 10)

    def test_deterministic(self):
        a = sampling.sample_bh_direct_equal_dim(2, 500, seed=3)
        assert np.array_equal(a, sampling.sample_bh_direct_equal_dim(2, 500, seed=3))

    def test_hs_means(self):
        s = sampling.sample_hs_direct(2, 2, 100_000, seed=2)
        assert abs(sampling.iid_stats(purity(s)).zscore(0.8)) <= 3
        s = sampling.sample_hs_direct(2, 4, 100_000, seed=3)
        assert abs(sampling.iid_stats(von_neumann(s)).zscore(moments.mean_vn_hs_page(2, 4))) <= 3

    def test_bh_means(self):
        s, worst = sampling.sample_bh_direct_equal_dim(2, 100_000, seed=4, return_unitarity=True)
        assert worst <= 1e-12
        assert abs(sampling.iid_stats(purity(s)).zscore(7 / 8)) <= 3
        assert abs(sampling.iid_stats(von_neumann(s)).zscore(2 * math.log(2) - 7 / 6)) <= 3

    def test_mcmc_agrees_with_direct_hs(self):
        m, n = 2, 3
        direct = sampling.iid_stats(purity(sampling.sample_hs_direct(m, n, 50_000, seed=7)))
        chain = sampling.sample_interpolating_mcmc(EnsembleParams.from_endpoint(m, n, "hs"),
                                                   sampling.ChainConfig(seed=7, **SHORT))
        assert abs(direct.mean - chain.mean) <= 3 * math.hypot(direct.std_error, chain.std_error)


class TestTraceCheck:
    def test_exponential_trace(self):
        res = sampling.trace_gamma_check(EnsembleParams(1, 1.0, 0.0),
                                         sampling.ChainConfig(chains=2, steps=20_000, burn_in=2_000))
        assert res.passed and res.correlation == 0.0

    def test_hs_trace(self):
        res = sampling.trace_gamma_check(EnsembleParams(2, 2.0, 0.0),
                                         sampling.ChainConfig(seed=1, **SHORT))
        assert res.ks_statistic <= res.ks_critical
        assert abs(res.correlation) <= res.correlation_bound
