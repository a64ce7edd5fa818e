"""Photon-count statistics: Poisson sampling, the Skellam law, and delta-n errors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln, ive

from .bessel import DEBYE_MIN_ORDER, debye_log_series
from .trajectory import BinnedExpectation, ratio_differences

INVERSION_MAX = 30.0
PTRS_MAX = 1e7


# -- Poisson sampling --------------------------------------------------------

def _check_means(mean) -> np.ndarray:
    mean = np.asarray(mean, dtype=float)
    if not np.all(np.isfinite(mean)) or np.any(mean < 0):
        raise ValueError("Poisson means must be finite and non-negative")
    return mean


def _inversion(lam: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(lam.shape)
    k = np.zeros(lam.shape, dtype=np.int64)
    p = np.exp(-lam)
    cdf = p.copy()
    active = u > cdf
    while np.any(active):
        k[active] += 1
        p[active] *= lam[active] / k[active]
        cdf[active] += p[active]
        # p underflowing to zero ends the search at the last representable k
        active &= (u > cdf) & (p > 0)
    return k


def _ptrs(lam: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Hoermann's transformed rejection with squeeze (PTRS), vectorized."""
    out = np.empty(lam.shape, dtype=np.int64)
    todo = np.arange(lam.size)
    slam = np.sqrt(lam)
    loglam = np.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    v_r = 0.9277 - 3.6224 / (b - 2)
    while todo.size:
        L, A, B = lam[todo], a[todo], b[todo]
        u = rng.random(todo.size) - 0.5
        v = rng.random(todo.size)
        us = 0.5 - np.abs(u)
        k = np.floor((2 * A / us + B) * u + L + 0.43)
        quick = (us >= 0.07) & (v <= v_r[todo])
        reject = (k < 0) | ((us < 0.013) & (v > us))
        with np.errstate(divide="ignore", invalid="ignore"):
            lhs = np.log(v * inv_alpha[todo] / (A / (us * us) + B))
            rhs = -L + k * loglam[todo] - gammaln(k + 1)
        accept = quick | (~reject & (lhs <= rhs))
        out[todo[accept]] = k[accept].astype(np.int64)
        todo = todo[~accept]
    return out


def _rounded_gaussian(lam: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    x = np.floor(lam + np.sqrt(lam) * rng.standard_normal(lam.shape) + 0.5)
    return np.maximum(x, 0).astype(np.int64)


def poisson_samples(means, rng: np.random.Generator) -> np.ndarray:
    """Draw one Poisson variate per entry of ``means``.

    Inversion below 30, transformed rejection up to 1e7, and a rounded Gaussian
    above that. Draws for each regime are taken in array order, so the output is
    a deterministic function of the generator state.
    """
    lam = _check_means(means)
    flat = lam.ravel()
    out = np.zeros(flat.shape, dtype=np.int64)
    low = (flat > 0) & (flat < INVERSION_MAX)
    mid = (flat >= INVERSION_MAX) & (flat < PTRS_MAX)
    high = flat >= PTRS_MAX
    if low.any():
        out[low] = _inversion(flat[low], rng)
    if mid.any():
        out[mid] = _ptrs(flat[mid], rng)
    if high.any():
        out[high] = _rounded_gaussian(flat[high], rng)
    return out.reshape(lam.shape)


def poisson_sample(mean: float, rng: np.random.Generator) -> int:
    return int(poisson_samples(np.array([mean]), rng)[0])


def poisson_logpmf(k, mean) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    mean = np.asarray(mean, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(mean > 0, k * np.log(mean) - mean - gammaln(k + 1), np.where(k == 0, 0.0, -np.inf))
    return np.where(k < 0, -np.inf, out)


# -- Skellam -----------------------------------------------------------------

@dataclass(frozen=True)
class SkellamParams:
    N1: float
    N2: float

    def __post_init__(self):
        for name in ("N1", "N2"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {v!r}")

    @property
    def mean(self) -> float:
        return self.N1 - self.N2

    @property
    def variance(self) -> float:
        return self.N1 + self.N2


def skellam_logpmf(k, params: SkellamParams) -> np.ndarray:
    """log P(n1 - n2 = k) for n1 ~ Poisson(N1), n2 ~ Poisson(N2)."""
    k = np.asarray(k)
    if not np.all(np.equal(np.mod(k, 1), 0)):
        raise ValueError("Skellam support is the integers")
    k = k.astype(float)
    N1, N2 = params.N1, params.N2
    if N2 == 0:
        return poisson_logpmf(k, N1)
    if N1 == 0:
        return poisson_logpmf(-k, N2)
    return _skellam_logpmf_positive(k, N1, N2)


def _skellam_logpmf_positive(k: np.ndarray, N1: float, N2: float) -> np.ndarray:
    # The O(N) pieces -(N1+N2), the Bessel exponent and the power factor are
    # recombined analytically so only O(1) quantities are summed near the mode.
    nu = np.abs(k)
    s = N1 + N2
    d = N1 - N2
    x = 2.0 * np.sqrt(N1 * N2)
    out = np.empty(k.shape)

    small = nu < DEBYE_MIN_ORDER
    if small.any():
        kk = k[small]
        # s - x = (sqrt N1 - sqrt N2)^2
        gap = (np.sqrt(N1) - np.sqrt(N2)) ** 2
        with np.errstate(divide="ignore"):
            out[small] = -gap + 0.5 * kk * (np.log(N1) - np.log(N2)) + np.log(ive(nu[small], x))

    big = ~small
    if big.any():
        v = nu[big]
        sign = np.sign(k[big])
        r = np.hypot(v, x)
        s_minus_r = (d - v) * (d + v) / (s + r)
        # nu*log(2 N_a/(nu + r)) with N_a = N1 for k > 0, N2 for k < 0
        log_ratio = np.log1p((s_minus_r + sign * d - v) / (v + r))
        out[big] = -s_minus_r + v * log_ratio - 0.5 * np.log(2 * np.pi * r) + debye_log_series(v, v / r)
    return out


def skellam_pmf(k, params: SkellamParams) -> np.ndarray:
    return np.exp(skellam_logpmf(k, params))


# -- delta n -----------------------------------------------------------------

class SigmaDeltaN(NamedTuple):
    exact: float
    simplified: float


def sigma_delta_n(N_t, N_next) -> SigmaDeltaN:
    """Standard deviation of delta n: sqrt(N_t + N_next)/N_t, and the N_next ~ N_t form sqrt(2/N_t)."""
    N_t = np.asarray(N_t, dtype=float)
    N_next = np.asarray(N_next, dtype=float)
    if np.any(N_t <= 0):
        raise ValueError("N_t must be positive")
    return SigmaDeltaN(np.sqrt(N_t + N_next) / N_t, np.sqrt(2.0 / N_t))


@dataclass(eq=False)
class CountSeries:
    """One realization of per-bin photon counts."""

    edges: np.ndarray
    expected: np.ndarray
    sampled: np.ndarray
    seed: int | None = None
    trial: int | None = None

    def __post_init__(self):
        self.expected = np.asarray(self.expected, dtype=float)
        self.sampled = np.asarray(self.sampled)
        n = len(self.sampled)
        if len(self.expected) != n or len(self.edges) != n + 1:
            raise ValueError("edges, expected and sampled lengths are inconsistent")
        if self.sampled.size and (
            not np.issubdtype(self.sampled.dtype, np.integer) or self.sampled.min() < 0
        ):
            raise ValueError("sampled counts must be non-negative integers")

    @property
    def starts(self) -> np.ndarray:
        return np.asarray(self.edges)[:-1]

    def __len__(self) -> int:
        return len(self.sampled)


def delta_n_sampled(counts: CountSeries) -> np.ndarray:
    """(n_{k+1} - n_k)/N_k; NaN where N_k = 0."""
    return ratio_differences(counts.sampled, counts.expected)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream for one trial, derived from (seed, trial)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(trial,))))


def monte_carlo_counts(bins: BinnedExpectation, trials: int, seed: int) -> list[CountSeries]:
    if trials < 1:
        raise ValueError("trials must be at least 1")
    out = []
    for i in range(trials):
        rng = trial_rng(seed, i)
        out.append(
            CountSeries(
                edges=np.asarray(bins.edges).copy(),
                expected=np.asarray(bins.N).copy(),
                sampled=poisson_samples(bins.N, rng),
                seed=seed,
                trial=i,
            )
        )
    return out
