"""Run-length distributions with exact moments and exponential transforms."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

MAX_MOMENT = 12

_PARAMS = {
    "exponential": ("rate",),
    "geometric": ("q",),
    "deterministic": ("c",),
    "gamma": ("shape", "rate"),
    "uniform": ("a", "b"),
}


def _stirling2(n: int, k: int) -> int:
    # S(n, k) via the standard recurrence; n <= MAX_MOMENT so this stays tiny
    row = [1] + [0] * k
    for i in range(1, n + 1):
        new = [0] * (k + 1)
        for j in range(1, min(i, k) + 1):
            new[j] = j * row[j] + row[j - 1]
        row = new
    return row[k] if n > 0 else int(k == 0)


@dataclass(frozen=True)
class RunLengthDistribution:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _PARAMS:
            raise ValueError(f"unknown run-length kind {self.kind!r}; expected one of {sorted(_PARAMS)}")
        expected = set(_PARAMS[self.kind])
        got = set(self.params)
        if got != expected:
            raise ValueError(f"{self.kind} needs parameters {sorted(expected)}, got {sorted(got)}")
        p = {k: float(v) for k, v in self.params.items()}
        object.__setattr__(self, "params", p)
        if self.kind == "geometric":
            if not 0 < p["q"] <= 1:
                raise ValueError("geometric q must lie in (0, 1]")
        elif self.kind == "uniform":
            if not 0 <= p["a"] < p["b"]:
                raise ValueError("uniform needs 0 <= a < b")
        else:
            for name, v in p.items():
                if not (v > 0 and math.isfinite(v)):
                    raise ValueError(f"{self.kind} parameter {name} must be positive")

    def __hash__(self):
        return hash((self.kind, tuple(sorted(self.params.items()))))

    def __repr__(self):
        args = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"{self.kind}({args})"

    @property
    def integer_valued(self) -> bool:
        if self.kind == "geometric":
            return True
        return self.kind == "deterministic" and float(self.params["c"]).is_integer()

    def sample(self, u):
        """Inverse-CDF draw from uniform variates in (0, 1)."""
        u = np.asarray(u, dtype=float)
        p = self.params
        if self.kind == "exponential":
            out = -np.log1p(-u) / p["rate"]
        elif self.kind == "geometric":
            q = p["q"]
            if q == 1.0:
                out = np.ones_like(u)
            else:
                # smallest n with 1 - (1-q)**n >= u
                out = np.maximum(np.ceil(np.log1p(-u) / np.log1p(-q) - 1e-12), 1.0)
        elif self.kind == "deterministic":
            out = np.full_like(u, p["c"])
        elif self.kind == "gamma":
            out = special.gammaincinv(p["shape"], u) / p["rate"]
        else:
            out = p["a"] + u * (p["b"] - p["a"])
        return float(out) if out.ndim == 0 else out

    def moment(self, k: int) -> float:
        """Exact E[L**k] for 1 <= k <= 12."""
        if not (isinstance(k, (int, np.integer)) and 1 <= k <= MAX_MOMENT):
            raise ValueError(f"moment order must be an integer in [1, {MAX_MOMENT}], got {k}")
        k = int(k)
        p = self.params
        if self.kind == "exponential":
            return math.factorial(k) / p["rate"] ** k
        if self.kind == "deterministic":
            return p["c"] ** k
        if self.kind == "gamma":
            return math.prod(p["shape"] + j for j in range(k)) / p["rate"] ** k
        if self.kind == "uniform":
            a, b = p["a"], p["b"]
            return (b ** (k + 1) - a ** (k + 1)) / ((k + 1) * (b - a))
        # geometric on {1, 2, ...}: M = L - 1 has factorial moments j! (r/q)^j
        q = p["q"]
        ratio = (1.0 - q) / q
        m_pow = [sum(_stirling2(i, j) * math.factorial(j) * ratio**j for j in range(i + 1)) for i in range(k + 1)]
        return float(sum(math.comb(k, i) * m_pow[i] for i in range(k + 1)))

    def mean(self) -> float:
        return self.moment(1)

    def variance(self) -> float:
        return self.moment(2) - self.moment(1) ** 2

    def exp_moment(self, j: int, s: float) -> float:
        """E[L**j * exp(-s L)] for j in {0, 1, 2} and s >= 0."""
        if j not in (0, 1, 2):
            raise ValueError("exp_moment supports j in {0, 1, 2}")
        if s < 0:
            raise ValueError("s must be nonnegative")
        if s == 0:
            return 1.0 if j == 0 else self.moment(j)
        p = self.params
        if self.kind == "exponential":
            r = p["rate"]
            return r * math.factorial(j) / (r + s) ** (j + 1)
        if self.kind == "deterministic":
            c = p["c"]
            return c**j * math.exp(-s * c)
        if self.kind == "gamma":
            a, r = p["shape"], p["rate"]
            base = (r / (r + s)) ** a
            return base * math.prod(a + i for i in range(j)) / (r + s) ** j
        if self.kind == "geometric":
            q = p["q"]
            z = math.exp(-s)
            w = (1.0 - q) * z
            if j == 0:
                return q * z / (1.0 - w)
            if j == 1:
                return q * z / (1.0 - w) ** 2
            return q * z * (1.0 + w) / (1.0 - w) ** 3
        a, b = p["a"], p["b"]

        def antideriv(x):
            # integral of x**j e^{-s x}, up to sign, from the closed forms
            poly = sum(math.factorial(j) / math.factorial(i) * x**i / s ** (j - i + 1) for i in range(j + 1))
            return poly * math.exp(-s * x)

        return (antideriv(a) - antideriv(b)) / (b - a)

    def exp_laplace(self, gamma: float) -> float:
        """E[exp(-gamma L)]."""
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        return self.exp_moment(0, gamma)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, spec: dict) -> "RunLengthDistribution":
        extra = set(spec) - {"kind", "params"}
        if extra:
            raise ValueError(f"unknown run-length keys {sorted(extra)}")
        return cls(spec["kind"], dict(spec.get("params", {})))


def exponential(rate: float = 1.0) -> RunLengthDistribution:
    return RunLengthDistribution("exponential", {"rate": rate})


def geometric(q: float) -> RunLengthDistribution:
    return RunLengthDistribution("geometric", {"q": q})


def deterministic(c: float) -> RunLengthDistribution:
    return RunLengthDistribution("deterministic", {"c": c})


def gamma_dist(shape: float, rate: float) -> RunLengthDistribution:
    return RunLengthDistribution("gamma", {"shape": shape, "rate": rate})


def uniform(a: float, b: float) -> RunLengthDistribution:
    return RunLengthDistribution("uniform", {"a": a, "b": b})


def required_moment_order(delta: float) -> int:
    """Moment order p = max(8, floor(1/(1-delta)) + 1) demanded for 0 < delta < 1."""
    if not 0 < delta < 1:
        raise ValueError("required_moment_order is defined for delta in (0, 1)")
    return max(8, math.floor(1.0 / (1.0 - delta) + 1e-12) + 1)


def check_moments(dist: RunLengthDistribution, delta: float) -> int:
    """Validate that ``dist`` has the moments needed for the delta regime; return the order."""
    order = required_moment_order(delta) if delta < 1 else 4
    if order > MAX_MOMENT:
        raise ValueError(
            f"delta={delta} needs E[L^{order}] but moments are only tracked up to order {MAX_MOMENT}"
        )
    # all built-in kinds have finite moments of every order
    dist.moment(order)
    return order
