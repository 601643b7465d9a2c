"""Monte Carlo samplers and diagnostics.

Random numbers come from numpy's PCG64 bit generator; chain ``c`` of a run
with seed ``s`` uses the ``c``-th child of ``SeedSequence(s)``, so every
chain's stream depends only on (seed, c).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .ensembles import EnsembleParams, purity, von_neumann
from .errors import ConvergenceError, DomainError

TARGET_ACCEPTANCE = (0.25, 0.40)
TUNE_BATCH = 100
TUNE_TARGET = 0.32
MAX_HERMITIAN_DIM = 64


@dataclass(frozen=True)
class ChainConfig:
    chains: int = 4
    steps: int = 200_000
    burn_in: int = 20_000
    thin: int = 1
    seed: int = 0
    step_scale: float = 0.5

    def __post_init__(self):
        if self.chains < 1 or self.steps < 1:
            raise DomainError("chains and steps must be positive")
        if not 0 <= self.burn_in < self.steps:
            raise DomainError("burn_in must satisfy 0 <= burn_in < steps")
        if self.thin < 1:
            raise DomainError("thin must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if not self.step_scale > 0:
            raise DomainError("step_scale must be positive")


@dataclass(frozen=True)
class SampleStats:
    mean: float
    std_error: float
    ess: float
    acceptance_rate: float

    def zscore(self, target: float) -> float:
        if self.std_error == 0:
            return 0.0 if self.mean == target else math.inf
        return (self.mean - target) / self.std_error


@dataclass(frozen=True)
class ChainRun:
    """Retained states of every chain, shape (chains, retained, m)."""

    states: np.ndarray
    acceptance: np.ndarray
    step_scale: np.ndarray
    steps: np.ndarray

    def functional(self, name: str) -> np.ndarray:
        """Per-chain samples of a named functional, shape (chains, retained)."""
        if name == "purity":
            return purity(self.states)
        if name == "vn":
            return von_neumann(self.states)
        if name == "trace_r_on_unconstrained":
            return self.states.sum(axis=-1)
        raise DomainError(f"unknown functional {name!r}")


def chain_rngs(seed: int, chains: int) -> list[np.random.Generator]:
    return [np.random.Generator(np.random.PCG64(s))
            for s in np.random.SeedSequence(seed).spawn(chains)]


def effective_sample_size(x) -> float:
    """ESS of one chain by Geyer's initial positive sequence."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 4:
        return float(n)
    centred = x - x.mean()
    var = centred @ centred / n
    if var == 0:
        return float(n)
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(centred, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n] / n
    rho = acov / var
    total = 0.0
    prev = math.inf
    for k in range(0, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0:
            break
        pair = min(pair, prev)   # initial monotone sequence
        total += pair
        prev = pair
    tau = max(2.0 * total - 1.0, 1.0 / n)
    return min(n / tau, float(n))


def summarize_chains(samples, acceptance_rate: float = 1.0) -> SampleStats:
    """Pool per-chain samples (chains, n) into a SampleStats."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    ess = float(sum(effective_sample_size(c) for c in samples))
    pooled = samples.ravel()
    mean = float(pooled.mean())
    sd = float(pooled.std(ddof=1)) if pooled.size > 1 else 0.0
    return SampleStats(mean, sd / math.sqrt(ess), ess, float(acceptance_rate))


def _pair_terms(x, others, theta):
    # ln|x - y| + ln|x^theta - y^theta| - ln(x + y), broadcast over others
    return (np.log(np.abs(x - others)) + np.log(np.abs(x ** theta - others ** theta))
            - np.log(x + others))


def _pair_delta(lam, i, j, new_i, new_j, theta, a):
    """Change of the constrained log-density when entries i, j are replaced."""
    rows = np.arange(lam.shape[0])
    old_i, old_j = lam[rows, i], lam[rows, j]
    mask = np.ones_like(lam, dtype=bool)
    mask[rows, i] = False
    mask[rows, j] = False
    with np.errstate(divide="ignore", invalid="ignore"):
        d = (_pair_terms(new_i[:, None], lam, theta) - _pair_terms(old_i[:, None], lam, theta)
             + _pair_terms(new_j[:, None], lam, theta) - _pair_terms(old_j[:, None], lam, theta))
        d = np.where(mask, d, 0.0).sum(axis=1)
        d += _pair_terms(new_i, new_j, theta) - _pair_terms(old_i, old_j, theta)
        d += a * (np.log(new_i) + np.log(new_j) - np.log(old_i) - np.log(old_j))
    return np.nan_to_num(d, nan=-np.inf)


def _single_delta(x, i, new_i, theta, a):
    """Change of the unconstrained log-density when entry i is replaced."""
    rows = np.arange(x.shape[0])
    old = x[rows, i]
    mask = np.ones_like(x, dtype=bool)
    mask[rows, i] = False
    with np.errstate(divide="ignore", invalid="ignore"):
        d = _pair_terms(new_i[:, None], x, theta) - _pair_terms(old[:, None], x, theta)
        d = np.where(mask, d, 0.0).sum(axis=1)
        d += a * (np.log(new_i) - np.log(old)) - (new_i - old)
    return np.nan_to_num(d, nan=-np.inf)


def pair_proposal(lam, i: int, j: int, u: float, scale: float):
    """Move mass delta = u * scale * (lam_i + lam_j) from j to i, u in (-1, 1).

    lam_i + lam_j is unchanged by the move, so the map between the current
    and the proposed state is its own inverse with u -> -u: the proposal
    density is symmetric.  Returns None when the proposal leaves the
    positive simplex.
    """
    lam = np.array(lam, dtype=float)
    delta = u * scale * (lam[i] + lam[j])
    lam[i] += delta
    lam[j] -= delta
    if lam[i] <= 0 or lam[j] <= 0:
        return None
    return lam


def _initial_state(rng, m, constrained, params):
    if constrained:
        return np.sort(rng.dirichlet(np.ones(m)))
    return rng.gamma(max(params.d / m, 0.5), 1.0, size=m)


def run_chains(params: EnsembleParams, config: ChainConfig,
               constrained: bool = True) -> ChainRun:
    """Metropolis chains for the constrained (simplex) or unconstrained target.

    All chains advance together as one vectorized state array, but each
    chain draws only from its own generator.
    """
    m = params.m
    if constrained and m < 2:
        raise DomainError("the constrained chain needs m >= 2")
    C, steps = config.chains, config.steps
    rngs = chain_rngs(config.seed, C)
    state = np.stack([_initial_state(r, m, constrained, params) for r in rngs])
    # pre-drawn randomness, one block per chain
    pick_i = np.stack([r.integers(0, m, steps) for r in rngs])
    if constrained:
        pick_j = np.stack([r.integers(0, m - 1, steps) for r in rngs])
        pick_j = np.where(pick_j >= pick_i, pick_j + 1, pick_j)
        moves = np.stack([r.uniform(-1.0, 1.0, steps) for r in rngs])
    else:
        moves = np.stack([r.standard_normal(steps) for r in rngs])
    log_u = np.log(np.stack([r.random(steps) for r in rngs]))

    scale = np.full(C, float(config.step_scale))
    rows = np.arange(C)
    batch_acc = np.zeros(C)
    tune_batches = config.burn_in // TUNE_BATCH
    log_scale_sum = np.zeros(C)
    log_scale_count = 0
    burn_acc = np.zeros(C)
    post_acc = np.zeros(C)
    keep = list(range(config.burn_in, steps, config.thin))
    out = np.empty((C, len(keep), m))
    slot = 0
    theta, a = params.theta, params.a
    for t in range(steps):
        i = pick_i[:, t]
        if constrained:
            j = pick_j[:, t]
            delta = moves[:, t] * scale * (state[rows, i] + state[rows, j])
            new_i = state[rows, i] + delta
            new_j = state[rows, j] - delta
            inside = (new_i > 0) & (new_j > 0)
            safe_i = np.where(inside, new_i, 0.5)
            safe_j = np.where(inside, new_j, 0.25)
            logr = _pair_delta(state, i, j, safe_i, safe_j, theta, a)
            accept = inside & (log_u[:, t] < logr)
            state[rows[accept], i[accept]] = new_i[accept]
            state[rows[accept], j[accept]] = new_j[accept]
        else:
            new_i = state[rows, i] * np.exp(scale * moves[:, t])
            # log-normal step: the Hastings ratio carries new/old
            logr = (_single_delta(state, i, new_i, theta, a)
                    + np.log(new_i) - np.log(state[rows, i]))
            accept = log_u[:, t] < logr
            state[rows[accept], i[accept]] = new_i[accept]
        if t < config.burn_in:
            burn_acc += accept
            batch_acc += accept
            if (t + 1) % TUNE_BATCH == 0:
                # Robbins-Monro step on log(scale) with decaying gain
                n_batch = (t + 1) // TUNE_BATCH
                rate = batch_acc / TUNE_BATCH
                scale *= np.exp(3.0 * (rate - TUNE_TARGET) / math.sqrt(n_batch))
                batch_acc[:] = 0
                if n_batch > tune_batches // 2:
                    log_scale_sum += np.log(scale)
                    log_scale_count += 1
            if t + 1 == config.burn_in:
                if np.any(burn_acc == 0):
                    raise ConvergenceError(
                        "no proposal accepted during burn-in; try a smaller step_scale",
                        acceptance=burn_acc / config.burn_in, step_scale=scale.copy())
                if log_scale_count:
                    scale = np.exp(log_scale_sum / log_scale_count)
        else:
            post_acc += accept
        if slot < len(keep) and t == keep[slot]:
            out[:, slot] = state
            slot += 1
    n_post = steps - config.burn_in
    return ChainRun(out, post_acc / n_post, scale, np.asarray(keep))


def sample_interpolating_mcmc(params: EnsembleParams, config: ChainConfig,
                              functional: str = "purity") -> SampleStats:
    """Chain statistics of ``purity`` or ``vn`` on the simplex, or of the
    trace (``trace_r_on_unconstrained``) under the unconstrained density."""
    constrained = functional != "trace_r_on_unconstrained"
    run = run_chains(params, config, constrained)
    return summarize_chains(run.functional(functional), float(run.acceptance.mean()))


def hermitian_eigenvalues(matrix) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix (symmetrized first).

    Accepts a single matrix or a stack of matrices.
    """
    a = np.asarray(matrix)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise DomainError("expected a square matrix")
    if a.shape[-1] > MAX_HERMITIAN_DIM:
        raise DomainError(f"dimension above {MAX_HERMITIAN_DIM} is not supported")
    sym = 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))
    vals = np.linalg.eigvalsh(sym)
    if not np.all(np.isfinite(vals)):
        raise ConvergenceError("eigenvalue computation returned non-finite values")
    return vals


def _ginibre(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def haar_unitary(rng: np.random.Generator, m: int, count: int = 1) -> np.ndarray:
    """Haar unitaries via QR of complex Ginibre matrices with R's phases removed."""
    q, r = np.linalg.qr(_ginibre(rng, (count, m, m)))
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (diag / np.abs(diag))[:, None, :]


def _normalized_spectra(mat):
    vals = np.clip(hermitian_eigenvalues(mat), 0.0, None)
    return vals / vals.sum(axis=-1, keepdims=True)


def sample_hs_direct(m: int, n: int, count: int, seed: int = 0,
                     batch: int = 20_000) -> np.ndarray:
    """Spectra of G G^dagger / tr(G G^dagger) with G an m x n complex Ginibre matrix.

    Returns an array of shape (count, m); each row sums to 1.
    """
    if not 1 <= m <= n:
        raise DomainError("need 1 <= m <= n")
    rng = np.random.Generator(np.random.PCG64(seed))
    out = []
    for start in range(0, count, batch):
        size = min(batch, count - start)
        g = _ginibre(rng, (size, m, n))
        out.append(_normalized_spectra(g @ np.conj(np.swapaxes(g, -1, -2))))
    return np.concatenate(out) if out else np.empty((0, m))


def sample_bh_direct_equal_dim(m: int, count: int, seed: int = 0, batch: int = 20_000,
                               return_unitarity: bool = False):
    """Spectra of (I + U) G G^dagger (I + U^dagger), normalized, with U Haar.

    This is the n = m case, where the weight on U reduces to Haar measure.
    With ``return_unitarity`` the largest |U^dagger U - I| entry seen is
    returned as well.
    """
    if m < 1:
        raise DomainError("m must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    eye = np.eye(m)
    out, worst = [], 0.0
    for start in range(0, count, batch):
        size = min(batch, count - start)
        u = haar_unitary(rng, m, size)
        worst = max(worst, float(np.max(np.abs(np.conj(np.swapaxes(u, -1, -2)) @ u - eye))))
        g = _ginibre(rng, (size, m, m))
        a = (eye + u) @ g
        out.append(_normalized_spectra(a @ np.conj(np.swapaxes(a, -1, -2))))
    spectra = np.concatenate(out) if out else np.empty((0, m))
    return (spectra, worst) if return_unitarity else spectra


def iid_stats(values) -> SampleStats:
    """SampleStats for independent draws."""
    v = np.asarray(values, dtype=float)
    return SampleStats(float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size)),
                       float(v.size), 1.0)


@dataclass(frozen=True)
class TraceCheck:
    ks_statistic: float
    ks_critical: float
    correlation: float
    correlation_bound: float
    ess: float

    @property
    def passed(self) -> bool:
        return (self.ks_statistic <= self.ks_critical
                and abs(self.correlation) <= self.correlation_bound)


KS_CRITICAL_1PCT = 1.628


def trace_gamma_check(params: EnsembleParams, config: ChainConfig) -> TraceCheck:
    """Test that the trace of the unconstrained ensemble is Gamma(d, 1) and
    independent of the normalized spectrum.

    The KS statistic is compared with the asymptotic 1% critical value at
    the effective sample size; the correlation of r with the purity of
    x / r is compared with 3 / sqrt(ESS).
    """
    run = run_chains(params, config, constrained=False)
    r = run.states.sum(axis=-1)
    ess = float(sum(effective_sample_size(c) for c in r))
    pooled_r = r.ravel()
    ks = float(stats.kstest(pooled_r, stats.gamma(params.d).cdf).statistic)
    sp = purity(run.states / r[..., None]).ravel()
    corr = 0.0 if params.m == 1 else float(np.corrcoef(pooled_r, sp)[0, 1])
    return TraceCheck(ks, KS_CRITICAL_1PCT / math.sqrt(ess), corr, 3.0 / math.sqrt(ess), ess)
