"""Moment summaries, Kolmogorov-Smirnov tests and Gaussian CDFs for the verification harness."""

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import special, stats as sps

MIN_KS_SAMPLES = 10
_KS_TERMS = 100


@dataclass(frozen=True)
class SampleSummary:
    """Count, mean and central moments M2, M3 of a sample; mergeable in any order."""

    count: int
    mean: float
    m2: float  # sum of squared deviations
    m3: float  # sum of cubed deviations
    min: float
    max: float

    @classmethod
    def from_array(cls, x) -> "SampleSummary":
        x = np.asarray(x, dtype=float).ravel()
        if x.size == 0:
            return cls.empty()
        mu = float(np.mean(x))
        d = x - mu
        return cls(int(x.size), mu, float(d @ d), float(np.sum(d**3)), float(x.min()), float(x.max()))

    @classmethod
    def empty(cls) -> "SampleSummary":
        return cls(0, 0.0, 0.0, 0.0, math.inf, -math.inf)

    def merge(self, other: "SampleSummary") -> "SampleSummary":
        if other.count == 0:
            return self
        if self.count == 0:
            return other
        na, nb = self.count, other.count
        n = na + nb
        delta = other.mean - self.mean
        mean = self.mean + delta * nb / n
        m2 = self.m2 + other.m2 + delta**2 * na * nb / n
        m3 = (
            self.m3
            + other.m3
            + delta**3 * na * nb * (na - nb) / n**2
            + 3.0 * delta * (na * other.m2 - nb * self.m2) / n
        )
        return SampleSummary(n, mean, m2, m3, min(self.min, other.min), max(self.max, other.max))

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else math.nan

    @property
    def skewness(self) -> float:
        if self.count < 2 or self.m2 == 0:
            return math.nan
        n = self.count
        return math.sqrt(n) * self.m3 / self.m2**1.5

    @property
    def standard_error(self) -> float:
        return math.sqrt(self.variance / self.count) if self.count > 1 else math.nan

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "variance": self.variance,
            "skewness": self.skewness,
            "min": self.min,
            "max": self.max,
            "standard_error": self.standard_error,
        }


@dataclass(frozen=True)
class KsReport:
    statistic: float
    p_value: float
    sample_sizes: tuple

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sample_sizes"] = list(self.sample_sizes)
        return d


def kolmogorov_sf(lam) -> np.ndarray:
    """P(K > lam) for the Kolmogorov distribution, by its alternating series."""
    lam = np.asarray(lam, dtype=float)
    k = np.arange(1, _KS_TERMS + 1)
    terms = 2.0 * (-1.0) ** (k - 1) * np.exp(-2.0 * (k * lam[..., None]) ** 2)
    p = np.where(lam <= 0, 1.0, terms.sum(axis=-1))
    # the series converges slowly for tiny lam, where the true value is 1
    p = np.where(lam < 0.2, 1.0, p)
    out = np.clip(p, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def ks_one_sample(samples, cdf) -> KsReport:
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n < MIN_KS_SAMPLES:
        raise ValueError(f"need at least {MIN_KS_SAMPLES} samples, got {n}")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))
    return KsReport(d, kolmogorov_sf(math.sqrt(n) * d), (n,))


def ks_two_sample(a, b) -> KsReport:
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    na, nb = a.size, b.size
    if min(na, nb) < MIN_KS_SAMPLES:
        raise ValueError(f"need at least {MIN_KS_SAMPLES} samples in each group")
    pooled = np.concatenate((a, b))
    fa = np.searchsorted(a, pooled, side="right") / na
    fb = np.searchsorted(b, pooled, side="right") / nb
    d = float(np.max(np.abs(fa - fb)))
    n_eff = na * nb / (na + nb)
    return KsReport(d, kolmogorov_sf(math.sqrt(n_eff) * d), (na, nb))


def gaussian_cdf(x, mean=0.0, variance=1.0):
    if variance <= 0:
        raise ValueError("variance must be positive")
    z = (np.asarray(x, dtype=float) - mean) / math.sqrt(variance)
    out = 0.5 * special.erfc(-z / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def chi_square_test(observed, expected, ddof: int = 0) -> tuple[float, float]:
    """Pearson statistic and p-value; cells with tiny expectation should be pooled by the caller."""
    observed = np.asarray(observed, dtype=float)
    expected = np.asarray(expected, dtype=float)
    if observed.shape != expected.shape:
        raise ValueError("observed and expected differ in shape")
    stat = float(np.sum((observed - expected) ** 2 / expected))
    dof = observed.size - 1 - ddof
    return stat, float(sps.chi2.sf(stat, dof))
