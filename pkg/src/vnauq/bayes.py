"""Probabilistic machinery for the two fusion tiers.

Tier one is the conjugate normal update of an uncertainty source given a
small sample. Tier two updates mean and variance the same way and updates
skewness with a linear-Bayes (Buhlmann credibility) estimator built on a
skew-normal prior family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate, special

from .errors import (
    DegenerateSampleError,
    InsufficientSampleError,
    SkewnessRangeError,
)

# sup |skewness| of the skew-normal family (delta -> 1)
MAX_SKEWNESS = 0.5 * (4.0 - math.pi) * (2.0 / (math.pi - 2.0)) ** 1.5
SKEWNESS_LIMIT = 0.9952717

HYPER_NODES = 64
HYPER_SPAN = 5.0
MOMENT_ABS_TOL = 1e-10

_B = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class GaussianBelief:
    mean: float
    std: float

    def __post_init__(self):
        if not (self.std > 0 and math.isfinite(self.std)):
            raise ValueError(f"belief std must be positive and finite, got {self.std!r}")
        if not math.isfinite(self.mean):
            raise ValueError(f"belief mean must be finite, got {self.mean!r}")

    @property
    def variance(self) -> float:
        return self.std * self.std


class SampleSet:
    """An ordered set of scalar observations."""

    def __init__(self, values: Sequence[float]):
        self.values = np.asarray(values, dtype=float).ravel()
        if not np.all(np.isfinite(self.values)):
            raise ValueError("sample values must be finite")

    def __len__(self):
        return self.values.size

    def __repr__(self):
        return f"SampleSet(n={self.n})"

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def mean(self) -> float:
        if self.n == 0:
            raise InsufficientSampleError("empty sample set has no mean")
        return float(np.mean(self.values))

    @property
    def std(self) -> float:
        if self.n < 2:
            raise InsufficientSampleError(f"sample std needs n >= 2, got n = {self.n}")
        return float(np.std(self.values, ddof=1))

    def raw_moment(self, k: int, center: float = 0.0) -> float:
        return float(np.mean((self.values - center) ** k))


@dataclass(frozen=True)
class PosteriorNormal:
    mean: float
    variance: float

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    def as_belief(self) -> GaussianBelief:
        return GaussianBelief(self.mean, self.std)


@dataclass(frozen=True)
class PriorSummary:
    """Mean, std, skewness and skewness standard error of a prior distribution."""

    mean: float
    std: float
    skewness: float
    skew_std_error: float

    def __post_init__(self):
        if not self.std > 0:
            raise ValueError(f"prior std must be positive, got {self.std!r}")
        if not self.skew_std_error >= 0:
            raise ValueError(f"skew_std_error must be >= 0, got {self.skew_std_error!r}")


def posterior_normal(prior: GaussianBelief, samples: SampleSet) -> PosteriorNormal:
    """Conjugate normal update with the likelihood width set to the sample std.

    The posterior precision is ``n/s**2 + 1/sigma0**2`` and the posterior mean
    is the precision-weighted average of the sample mean and the prior mean.
    """
    if samples.n < 2:
        raise InsufficientSampleError(f"need at least 2 samples, got {samples.n}")
    s = samples.std
    if s == 0:
        raise DegenerateSampleError("all samples are equal; likelihood width is zero")
    sample_precision = samples.n / (s * s)
    prior_precision = 1.0 / prior.variance
    a = sample_precision + prior_precision
    b = sample_precision * samples.mean + prior_precision * prior.mean
    return PosteriorNormal(mean=b / a, variance=1.0 / a)


def sample_skewness(samples: SampleSet) -> float:
    """Moment skewness ``sqrt(n) * sum(d**3) / sum(d**2)**1.5`` of the data."""
    n = samples.n
    if n < 3:
        raise InsufficientSampleError(f"sample skewness needs n >= 3, got {n}")
    d = samples.values - samples.values.mean()
    m2 = float(np.sum(d * d))
    if m2 == 0:
        raise DegenerateSampleError("all samples are equal; skewness undefined")
    return math.sqrt(n) * float(np.sum(d**3)) / m2**1.5


def moment_skewness(m1: float, m2: float, m3: float) -> float:
    """Skewness from the first three raw moments."""
    var = m2 - m1 * m1
    if not var > 0:
        raise DegenerateSampleError(f"non-positive variance {var!r} from raw moments")
    return (m3 - 3.0 * m2 * m1 + 2.0 * m1**3) / var**1.5


def skewness_std_error(n: int) -> float:
    """Normal-theory standard error of the sample skewness."""
    if n < 3:
        raise InsufficientSampleError(f"skewness standard error needs n >= 3, got {n}")
    return math.sqrt(6.0 * n * (n - 1) / ((n - 2) * (n + 1) * (n + 3)))


# -- skew-normal family ------------------------------------------------------


def _delta_from_skewness(skewness: float) -> float:
    r = math.copysign((2.0 * abs(skewness) / (4.0 - math.pi)) ** (1.0 / 3.0), skewness)
    return r / (_B * math.sqrt(1.0 + r * r))


def _shape_from_delta(delta: float) -> float:
    return delta / math.sqrt(1.0 - delta * delta)


def _delta_from_shape(shape: float) -> float:
    return shape / math.sqrt(1.0 + shape * shape)


@dataclass(frozen=True)
class SkewFamily:
    """Skew-normal law ``location + scale * Z`` with ``Z`` of density 2 phi(z) Phi(shape z)."""

    location: float
    scale: float
    shape: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale!r}")

    @property
    def delta(self) -> float:
        return _delta_from_shape(self.shape)

    @property
    def mean(self) -> float:
        return self.location + self.scale * _B * self.delta

    @property
    def variance(self) -> float:
        return self.scale**2 * (1.0 - (_B * self.delta) ** 2)

    @property
    def skewness(self) -> float:
        mz = _B * self.delta
        return 0.5 * (4.0 - math.pi) * mz**3 / (1.0 - mz * mz) ** 1.5

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.location) / self.scale
        return 2.0 / self.scale * _phi(z) * special.ndtr(self.shape * z)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        d = self.delta
        u0 = rng.standard_normal(size)
        v = rng.standard_normal(size)
        z = d * np.abs(u0) + math.sqrt(1.0 - d * d) * v
        return self.location + self.scale * z


def _phi(z):
    return np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def check_skewness(skewness: float) -> None:
    if not abs(skewness) < SKEWNESS_LIMIT:
        raise SkewnessRangeError(
            f"skewness {skewness:.6g} is outside the skew-normal range "
            f"(-{SKEWNESS_LIMIT}, {SKEWNESS_LIMIT}); the prior cannot be represented"
        )


def fit_skew_family(prior: PriorSummary) -> SkewFamily:
    """Method-of-moments skew-normal fit to (mean, std, skewness)."""
    check_skewness(prior.skewness)
    delta = _delta_from_skewness(prior.skewness)
    scale = prior.std / math.sqrt(1.0 - (_B * delta) ** 2)
    location = prior.mean - scale * _B * delta
    return SkewFamily(location=location, scale=scale, shape=_shape_from_delta(delta))


@lru_cache(maxsize=4096)
def _standard_moments(shape: float) -> tuple:
    # E[Z**j], j = 0..6, by adaptive quadrature over the standardized density
    powers = np.arange(7)

    def integrand(z):
        return z**powers * (2.0 * _phi(z) * special.ndtr(shape * z))

    lo, _ = integrate.quad_vec(integrand, -np.inf, 0.0, epsabs=1e-12, epsrel=1e-12)
    hi, _ = integrate.quad_vec(integrand, 0.0, np.inf, epsabs=1e-12, epsrel=1e-12)
    return tuple(float(v) for v in lo + hi)


def _family_moments(family: SkewFamily, kmax: int, shift: float = 0.0) -> np.ndarray:
    # raw moments E[(X - shift)**k], k = 1..kmax
    ez = _standard_moments(float(family.shape))
    loc = family.location - shift
    out = np.empty(kmax)
    for k in range(1, kmax + 1):
        out[k - 1] = sum(
            math.comb(k, j) * loc ** (k - j) * family.scale**j * ez[j] for j in range(k + 1)
        )
    return out


def conditional_raw_moment(family: SkewFamily, k: int) -> float:
    """E[X**k] of a skew-normal family member, k in 1..6."""
    if not (isinstance(k, (int, np.integer)) and 1 <= k <= 6):
        raise ValueError(f"moment order must be an integer in 1..6, got {k!r}")
    return float(_family_moments(family, k)[k - 1])


# -- credibility estimator ---------------------------------------------------


@dataclass(frozen=True)
class CredibilityWorkspace:
    """Intermediate quantities of the linear-Bayes moment estimator.

    All arrays are indexed by moment order k = 1, 2, 3. Moments are taken
    about ``center`` (the prior mean).
    """

    center: float
    n: int
    prior_skewness: float
    prior_moment: np.ndarray
    prior_moment_2k: np.ndarray
    tau_sq: np.ndarray
    beta: np.ndarray
    sample_moment: np.ndarray
    blended_moment: np.ndarray


def hyper_nodes(skewness: float, skew_std_error: float):
    """Quadrature nodes and weights of the skewness hyper-distribution.

    Skewness is normal with mean ``skewness`` and sd ``skew_std_error``,
    truncated to +-HYPER_SPAN sd and to the admissible range. Conditional
    moments depend on the cube root of skewness, so the range is split at
    zero and each piece is integrated by Gauss-Legendre in ``u = cbrt(skewness)``,
    where the integrand is smooth. Returns ``(skewness_nodes, weights)``.
    """
    check_skewness(skewness)
    if skew_std_error == 0:
        return np.array([skewness]), np.array([1.0])
    lo = max(skewness - HYPER_SPAN * skew_std_error, -SKEWNESS_LIMIT)
    hi = min(skewness + HYPER_SPAN * skew_std_error, SKEWNESS_LIMIT)
    pieces = [(lo, 0.0), (0.0, hi)] if lo < 0.0 < hi else [(lo, hi)]
    ulen = [np.cbrt(b) - np.cbrt(a) for a, b in pieces]
    counts = [max(2, int(round(HYPER_NODES * u / sum(ulen)))) for u in ulen]
    counts[-1] = max(2, HYPER_NODES - sum(counts[:-1])) if len(counts) > 1 else HYPER_NODES

    nodes, weights = [], []
    for (a, b), m in zip(pieces, counts):
        x, w = np.polynomial.legendre.leggauss(m)
        ua, ub = np.cbrt(a), np.cbrt(b)
        u = 0.5 * (ub - ua) * x + 0.5 * (ub + ua)
        lam = u**3
        z = (lam - skewness) / skew_std_error
        nodes.append(lam)
        weights.append(0.5 * (ub - ua) * w * 3 * u * u * np.exp(-0.5 * z * z))
    nodes, weights = np.concatenate(nodes), np.concatenate(weights)
    total = weights.sum()
    if not total > 0:
        raise SkewnessRangeError(
            f"skewness hyper-distribution N({skewness:.4g}, {skew_std_error:.4g}^2) "
            "has no mass inside the admissible range"
        )
    return nodes, weights / total


def credibility_moments(prior: PriorSummary, samples: SampleSet) -> CredibilityWorkspace:
    """Credibility-weighted blend of prior and sample raw moments, k = 1..3.

    The prior family is the moment-matched skew-normal with location and
    scale held fixed; only its shape varies over the hyper-distribution.
    """
    n = samples.n
    if n < 3:
        raise InsufficientSampleError(f"credibility update needs n >= 3, got {n}")
    base = fit_skew_family(prior)
    center = prior.mean
    nodes, weights = hyper_nodes(prior.skewness, prior.skew_std_error)

    cond = np.empty((nodes.size, 6))
    for i, lam in enumerate(nodes):
        member = SkewFamily(base.location, base.scale, _shape_from_delta(_delta_from_skewness(lam)))
        cond[i] = _family_moments(member, 6, shift=center)

    mu = weights @ cond[:, :3]
    mu_2k = weights @ cond[:, [1, 3, 5]]
    spread = weights @ (cond[:, :3] - mu) ** 2
    tau_sq = mu * mu + spread
    between = n * spread
    within = mu_2k - tau_sq
    denom = between + within
    beta = np.where(spread > 0, between / np.where(denom > 0, denom, 1.0), 0.0)
    beta = np.clip(beta, 0.0, 1.0)

    sample_mom = np.array([samples.raw_moment(k, center) for k in (1, 2, 3)])
    blended = beta * sample_mom + (1.0 - beta) * mu
    return CredibilityWorkspace(
        center=center,
        n=n,
        prior_skewness=prior.skewness,
        prior_moment=mu,
        prior_moment_2k=mu_2k,
        tau_sq=tau_sq,
        beta=beta,
        sample_moment=sample_mom,
        blended_moment=blended,
    )


def posterior_skewness(workspace: CredibilityWorkspace) -> float:
    """Skewness of the blended moments.

    With every credibility weight at zero the estimator is the prior
    family's own skewness, which is returned as given rather than rebuilt
    from quadrature moments.
    """
    if not np.any(workspace.beta):
        return workspace.prior_skewness
    m1, m2, m3 = workspace.blended_moment
    return moment_skewness(m1, m2, m3)
