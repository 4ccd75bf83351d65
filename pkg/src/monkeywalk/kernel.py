"""Memory kernel mu(x) = gamma * delta * x**(delta-1) * exp(gamma * x**delta).

Everything is expressed through the exponent Lambda(t) = gamma * t**delta, the log of
the antiderivative exp(Lambda(t)). Raw exponentials of Lambda are only taken below
``EXP_THRESHOLD``; above it the log-space forms are used.
"""

from dataclasses import dataclass

import numpy as np

EXP_THRESHOLD = 700.0
_LOG_ROOT_THRESHOLD = 1e300


def _check_unit_open(u):
    u = np.asarray(u, dtype=float)
    if np.any(~((u > 0.0) & (u < 1.0))):
        raise ValueError("uniform variate must lie strictly inside (0, 1)")
    return u


def _root(v, delta: float):
    """v ** (1/delta) for v >= 0, going through logs for enormous arguments."""
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore"):
        big = v > _LOG_ROOT_THRESHOLD
        out = np.where(big, np.exp(np.log(np.where(big, v, 1.0)) / delta), np.power(np.where(big, 1.0, v), 1.0 / delta))
    return out


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class MemoryKernel:
    gamma: float
    delta: float
    exp_threshold: float = EXP_THRESHOLD

    def __post_init__(self):
        if not (self.gamma > 0 and np.isfinite(self.gamma)):
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not (self.delta > 0 and np.isfinite(self.delta)):
            raise ValueError(f"delta must be positive, got {self.delta}")

    def exponent(self, t):
        """Lambda(t) = gamma * t**delta."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("time must be nonnegative")
        return _scalar(self.gamma * np.power(t, self.delta))

    def exponent_increment(self, lo, hi):
        """Lambda(hi) - Lambda(lo) without cancellation when hi is close to lo."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if np.any(lo < 0) or np.any(hi < lo):
            raise ValueError("need 0 <= lo <= hi")
        # expm1 form only where hi < 2 lo; otherwise the plain difference loses nothing
        near = (lo > 0) & (hi < 2.0 * lo)
        safe_lo = np.where(near, lo, 1.0)
        rel = np.where(near, hi - lo, 0.0) / safe_lo
        inc_near = self.gamma * np.power(safe_lo, self.delta) * np.expm1(self.delta * np.log1p(rel))
        inc_far = self.gamma * (np.power(hi, self.delta) - np.power(lo, self.delta))
        return _scalar(np.where(near, inc_near, inc_far))

    def log_cumulative(self, t):
        """log of the integral of mu over [0, t], i.e. log(exp(Lambda(t)) - 1)."""
        lam = np.asarray(self.exponent(t), dtype=float)
        with np.errstate(divide="ignore"):
            return _scalar(lam + np.log(-np.expm1(-lam)))

    def log_interval_weight(self, lo, hi):
        """log of the integral of mu over [lo, hi]."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if np.any(lo < 0) or np.any(lo >= hi):
            raise ValueError("need 0 <= lo < hi")
        inc = np.asarray(self.exponent_increment(lo, hi))
        return _scalar(np.asarray(self.exponent(hi)) + np.log(-np.expm1(-inc)))

    def _offset_from_increment(self, start, y):
        # invert Lambda(start + x) - Lambda(start) = y for x >= 0
        start = np.asarray(start, dtype=float)
        y = np.asarray(y, dtype=float)
        base = self.gamma * np.power(start, self.delta)
        pos = base > 0
        with np.errstate(over="ignore"):
            # a subnormal base overflows to inf, which selects the far branch anyway
            ratio = np.where(pos, y / np.where(pos, base, 1.0), np.inf)
        small = ratio < 1.0
        near = start * np.expm1(np.log1p(np.where(small, ratio, 0.0)) / self.delta)
        far = _root((base + y) / self.gamma, self.delta) - start
        return np.where(small, near, far)

    def sample_within_run(self, run_start, run_len, u):
        """Inverse CDF of the offset F within a run [run_start, run_start + run_len).

        The offset has density proportional to mu(run_start + x) on (0, run_len).
        """
        u = _check_unit_open(u)
        run_start = np.asarray(run_start, dtype=float)
        run_len = np.asarray(run_len, dtype=float)
        if np.any(run_len <= 0):
            raise ValueError("run length must be positive")
        if np.any(run_start < 0):
            raise ValueError("run start must be nonnegative")
        d = np.asarray(self.exponent_increment(run_start, run_start + run_len))
        low = d < self.exp_threshold
        with np.errstate(over="ignore"):
            y_low = np.log1p(u * np.expm1(np.where(low, d, 0.0)))
        y_high = d + np.log(u + (1.0 - u) * np.exp(-d))
        y = np.where(low, y_low, y_high)
        x = self._offset_from_increment(run_start, y)
        top = np.nextafter(run_len, 0.0)
        x = np.clip(x, np.finfo(float).tiny, top)
        return _scalar(x)

    def sample_relocation_time(self, horizon, u):
        """Inverse CDF of a relocation target with density mu / int_0^horizon mu on [0, horizon)."""
        horizon = np.asarray(horizon, dtype=float)
        if np.any(horizon <= 0):
            raise ValueError("horizon must be positive")
        return self.sample_within_run(np.zeros_like(horizon), horizon, u)

    def cdf_within_run(self, run_start, run_len, x):
        """Closed-form CDF of the within-run offset, evaluated at x in [0, run_len]."""
        run_start = np.asarray(run_start, dtype=float)
        x = np.clip(np.asarray(x, dtype=float), 0.0, run_len)
        inc = np.asarray(self.exponent_increment(run_start, run_start + x))
        d = np.asarray(self.exponent_increment(run_start, run_start + np.asarray(run_len, dtype=float)))
        with np.errstate(invalid="ignore"):
            out = np.exp(inc - d) * np.expm1(-inc) / np.expm1(-d)
        return _scalar(np.where(inc == 0, 0.0, out))

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return _scalar(np.log(self.gamma * self.delta) + (self.delta - 1) * np.log(x) + self.gamma * np.power(x, self.delta))
