"""Closed-form limit theory: centering curves, limit variances, and their composition
with the ergodicity data (a, b, f, g) of the underlying process."""

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, special

from .model import Model
from .runlen import MAX_MOMENT, RunLengthDistribution, check_moments

_FLOOR_GUARD = 1e-12


def summand_count(delta: float) -> int:
    """Number of terms kept in the delta < 1 centering sum."""
    if not 0 < delta < 1:
        raise ValueError("summand_count is defined for delta in (0, 1)")
    return math.floor(delta / (2.0 - 2.0 * delta) + _FLOOR_GUARD) + 1


def _small_terms(delta, gamma, dist, terms):
    out = []
    for k in range(terms):
        order = k + 2
        if order > MAX_MOMENT:
            raise ValueError(f"centering needs E[L^{order}], beyond the tracked order {MAX_MOMENT}")
        denom = delta - (1.0 - delta) * k
        if abs(denom) < _FLOOR_GUARD:
            raise ValueError(f"term k={k} is singular at delta={delta}")
        out.append((-gamma * delta) ** k * dist.moment(order) / (math.factorial(order) * denom))
    return out


def centering(delta: float, gamma: float, dist: RunLengthDistribution, t, terms: int | None = None):
    """s(t) for every delta regime.

    ``terms`` overrides the number of summands for delta < 1 (diagnostics only).
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    if delta <= 0:
        raise ValueError("delta must be positive")
    mean = dist.mean()
    if delta < 1:
        n_terms = summand_count(delta) if terms is None else terms
        coeffs = _small_terms(delta, gamma, dist, n_terms)
        s = sum(c * t ** (k * (delta - 1.0)) for k, c in enumerate(coeffs))
        out = gamma * delta * t**delta / mean * s
    elif delta == 1:
        out = t * (mean - (1.0 - dist.exp_laplace(gamma)) / gamma) / mean
    elif delta < 2:
        out = t - t ** (2.0 - delta) / (gamma * delta * (2.0 - delta) * mean)
    else:
        out = t
    return float(out) if np.ndim(out) == 0 else out


def sigma_n(delta: float, gamma: float, dist: RunLengthDistribution, n, terms: int | None = None):
    """Centering of Phi(n) for delta in (0, 1)."""
    if not 0 < delta < 1:
        raise ValueError("sigma_n is defined for delta in (0, 1)")
    n = np.asarray(n, dtype=float)
    n_terms = summand_count(delta) if terms is None else terms
    coeffs = _small_terms(delta, gamma, dist, n_terms)
    mean = dist.mean()
    s = sum(c / mean ** ((1.0 - delta) * (k + 1)) * n ** (-k * (1.0 - delta)) for k, c in enumerate(coeffs))
    out = gamma * delta * n**delta * s
    return float(out) if np.ndim(out) == 0 else out


def limit_variance_small(dist: RunLengthDistribution) -> float:
    """Variance of Omega for delta < 1, in units of sqrt(s(t))."""
    return 2.0 * dist.moment(3) / (3.0 * dist.moment(2))


def effective_time_variance_small(gamma: float, dist: RunLengthDistribution) -> float:
    """Limit variance of (S(t) - s(t)) / t**(delta/2) for delta < 1."""
    return gamma * dist.moment(3) / (3.0 * dist.mean())


def phi_variance_small(delta: float, dist: RunLengthDistribution) -> float:
    """Limit variance of (Phi(n) - sigma(n)) / sqrt(gamma n**delta) for delta < 1."""
    return dist.moment(3) / (3.0 * dist.mean() ** (1.0 - delta))


@dataclass(frozen=True)
class CritLedger:
    """Variances and covariances of the three Gaussian pieces at delta = 1."""

    var1: float
    var2: float
    var3: float
    cov12: float
    cov13: float
    cov23: float

    def matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.var1, self.cov12, self.cov13],
                [self.cov12, self.var2, self.cov23],
                [self.cov13, self.cov23, self.var3],
            ]
        )

    def quadratic_form(self) -> float:
        """Var(Omega_1 + Omega_2 + Omega_3)."""
        return float(np.sum(self.matrix()))

    def is_psd(self, tol: float = 1e-10) -> bool:
        return bool(np.linalg.eigvalsh(self.matrix()).min() >= -tol)

    def as_dict(self) -> dict:
        return asdict(self)


def _crit_pieces(gamma: float, dist: RunLengthDistribution) -> dict:
    e0 = dist.exp_moment(0, gamma)
    e0_2 = dist.exp_moment(0, 2.0 * gamma)
    e1 = dist.exp_moment(1, gamma)
    mean, var_l = dist.mean(), dist.variance()
    cov_l_exp = e1 - mean * e0  # Cov(L, e^{-gamma L})
    var_exp = e0_2 - e0 * e0  # Var(e^{-gamma L})
    return {
        "mean": mean,
        "second": dist.moment(2),
        "var_l": var_l,
        "drift": mean - (1.0 - e0) / gamma,  # E[L - (1 - e^{-gamma L}) / gamma]
        "cond_var": 1.0 / gamma**2 - 2.0 * e1 / gamma - e0_2 / gamma**2,
        "var_g": var_l + 2.0 * cov_l_exp / gamma + var_exp / gamma**2,
        "cov_l_g": var_l + cov_l_exp / gamma,  # Cov(L, L + e^{-gamma L} / gamma)
        "cov_l_l_exp": var_l + cov_l_exp,  # Cov(L, L + e^{-gamma L})
    }


def crit_ledger(gamma: float, dist: RunLengthDistribution) -> CritLedger:
    """Covariance ledger at delta = 1, consistent with simulation.

    Omega_1 is the fluctuation of Phi given the run lengths and is independent of them;
    Omega_2 is the fluctuation of the conditional mean; Omega_3 comes from the renewal
    count, Omega_3 = -Psi * E[g(L)] / E[L].
    """
    p = _crit_pieces(gamma, dist)
    ratio = p["drift"] / p["mean"]
    return CritLedger(
        var1=p["cond_var"],
        var2=p["var_g"],
        var3=p["var_l"] * ratio**2,
        cov12=0.0,
        cov13=0.0,
        cov23=-ratio * p["cov_l_g"],
    )


def crit_ledger_as_stated(gamma: float, dist: RunLengthDistribution) -> CritLedger:
    """The ledger exactly as written in the delta = 1 theorem (kept for comparison)."""
    p = _crit_pieces(gamma, dist)
    cov3 = p["cov_l_l_exp"] * p["drift"] / (gamma * p["mean"])
    return CritLedger(
        var1=p["cond_var"],
        var2=p["var_g"],
        var3=p["var_l"] * p["drift"] ** 2 / p["second"],
        cov12=p["var_g"],
        cov13=cov3,
        cov23=cov3,
    )


def exponential_example_ledger(gamma: float) -> CritLedger:
    """Specialised closed forms printed for standard exponential run lengths."""
    g = gamma
    v2 = g**2 * (2 * g + 5) / ((g + 1) ** 2 * (2 * g + 1))
    c3 = (g**2 + 2 * g + 2) / (g + 1) ** 3
    return CritLedger(
        var1=(g - 1) ** 2 / (2 * g**2 * (g + 1) ** 2),
        var2=v2,
        var3=g / (g + 1),
        cov12=v2,
        cov13=c3,
        cov23=c3,
    )


def crit_phi_variance(gamma: float, dist: RunLengthDistribution) -> float:
    """Limit variance of (Phi(n) - n E[g(L)]) / sqrt(n) at delta = 1."""
    led = crit_ledger(gamma, dist)
    return led.var1 + led.var2 + 2.0 * led.cov12


@dataclass(frozen=True)
class LimitPrediction:
    delta: float
    gamma: float
    regime: str  # "small", "critical" or "large"
    t: float
    s: float  # centering s(t)
    center: np.ndarray  # a(s(t))
    scale: float  # b(s(t))
    var_omega: float  # Var(Omega) in the theorem's own normalisation
    omega_variance: float  # Var((S - s) / sqrt(s)) in the limit
    slope: np.ndarray  # f(x) = slope * x for the built-in processes
    noise_scale: float  # g, constant for the built-in processes
    limit_law: str = "standard-gaussian"
    ledger: CritLedger | None = field(default=None, compare=False)

    @property
    def limit_variance(self) -> np.ndarray:
        """Per-coordinate variance of f(Omega) + Lambda g(Omega)."""
        return self.slope**2 * self.omega_variance + self.noise_scale**2

    def normalize(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.center) / self.scale

    def limit_cdf(self, x, coord: int = 0, f=None, g=None):
        """CDF of f(Omega) + Lambda g(Omega) with Lambda standard normal, independent of Omega.

        With the default linear f and constant g this is the Gaussian CDF of
        ``limit_variance``; custom ``f``/``g`` callables are integrated adaptively over Omega.
        """
        x = np.asarray(x, dtype=float)
        if f is None and g is None:
            return special.ndtr(x / math.sqrt(self.limit_variance[coord]))
        f = f or (lambda w: self.slope[coord] * w)
        g = g or (lambda w: self.noise_scale)
        if self.omega_variance == 0:
            return special.ndtr((x - f(0.0)) / g(0.0))
        sd = math.sqrt(self.omega_variance)

        def integrand(z):
            w = sd * z
            return special.ndtr((x - f(w)) / g(w)) * math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)

        return integrate.quad_vec(integrand, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-12)[0]

    def summary(self) -> dict:
        d = {
            "delta": self.delta,
            "gamma": self.gamma,
            "regime": self.regime,
            "t": self.t,
            "s": self.s,
            "center": np.asarray(self.center).tolist(),
            "scale": self.scale,
            "var_omega": self.var_omega,
            "omega_variance": self.omega_variance,
            "limit_variance": np.asarray(self.limit_variance).tolist(),
            "limit_law": self.limit_law,
        }
        if self.ledger is not None:
            d["ledger"] = self.ledger.as_dict()
        return d


def regime(delta: float) -> str:
    if delta < 1:
        return "small"
    if delta == 1:
        return "critical"
    return "large"


def predict(model: Model, t: float) -> LimitPrediction:
    """Centering, scale and limit law of (X(t) - a(s(t))) / b(s(t))."""
    delta, gamma, dist, proc = model.delta, model.gamma, model.run_length, model.process
    check_moments(dist, delta)
    s = centering(delta, gamma, dist, t)
    ledger = None
    reg = regime(delta)
    if reg == "small":
        var_omega = limit_variance_small(dist)
        omega_var = var_omega
    elif reg == "critical":
        ledger = crit_ledger(gamma, dist)
        var_omega = ledger.quadratic_form() / dist.mean()  # per unit sqrt(t)
        omega_var = var_omega * t / s
    else:
        var_omega = omega_var = 0.0
    center, scale, slope, g = proc.eval_ergodicity(s, 1.0)
    return LimitPrediction(
        delta=delta,
        gamma=gamma,
        regime=reg,
        t=float(t),
        s=float(s),
        center=np.asarray(center, dtype=float),
        scale=float(scale),
        var_omega=float(var_omega),
        omega_variance=float(omega_var),
        slope=np.asarray(slope, dtype=float),
        noise_scale=float(g),
        limit_law=proc.limit_law,
        ledger=ledger,
    )


def phi_residual_large(delta: float, gamma: float, runs, ns, phis) -> np.ndarray:
    """Phi(n) - T_n + sum_{i<=n} 1 / (gamma delta T_i^(delta-1)); the sum is dropped for delta > 2."""
    if delta <= 1:
        raise ValueError("phi_residual_large needs delta > 1")
    ns = np.asarray(ns, dtype=np.int64)
    times = runs.relocation_times
    out = np.asarray(phis, dtype=float) - times[ns - 1]
    if delta <= 2:
        corr = np.cumsum(1.0 / (gamma * delta * times ** (delta - 1.0)))
        out = out + corr[ns - 1]
    return out
