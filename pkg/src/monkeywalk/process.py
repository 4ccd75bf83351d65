"""Underlying Markov processes: endpoint and bridge sampling, ergodicity data.

Two kinds are built in: Brownian motion with constant drift on R^d, and the simple
symmetric random walk on Z^d run in discrete time (constant on [n, n+1)).
"""

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class ProcessDescriptor:
    kind: str
    dim: int
    drift: np.ndarray
    center: Callable  # a(t)
    scale: Callable  # b(t)
    shift_response: Callable  # f(x)
    scale_response: Callable  # g(x)
    limit_law: str = "standard-gaussian"
    spec: dict = field(default_factory=dict, compare=False)

    @property
    def discrete(self) -> bool:
        return self.kind == "lattice"

    def sample_endpoint(self, duration: float, rng: np.random.Generator) -> np.ndarray:
        """Displacement after running for ``duration`` from the origin."""
        if duration < 0:
            raise ValueError("duration must be nonnegative")
        if self.kind == "brownian":
            z = rng.standard_normal(self.dim)
            return self.drift * duration + math.sqrt(duration) * z
        return lattice_steps_sum(math.ceil(duration - 1e-12), self.dim, rng)

    def sample_endpoints(self, durations: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Vectorised ``sample_endpoint`` over an array of durations; returns shape (n, dim)."""
        durations = np.asarray(durations, dtype=float)
        if self.kind == "brownian":
            z = rng.standard_normal((durations.size, self.dim))
            return durations[:, None] * self.drift[None, :] + np.sqrt(durations)[:, None] * z
        return np.stack([lattice_steps_sum(math.ceil(d - 1e-12), self.dim, rng) for d in durations])

    def eval_ergodicity(self, t: float, x: float):
        """(a(t), b(t), f(x), g(x))."""
        if t <= 0:
            raise ValueError("t must be positive")
        return self.center(t), self.scale(t), self.shift_response(x), self.scale_response(x)

    def new_path(self, start_time: float, start_pos) -> "RunPath":
        if self.kind == "brownian":
            return BrownianRunPath(self, start_time, start_pos)
        return LatticeRunPath(self, start_time, start_pos)

    def to_dict(self) -> dict:
        return dict(self.spec)


def lattice_steps_sum(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Sum of n i.i.d. uniform unit steps on Z^dim."""
    if n <= 0:
        return np.zeros(dim)
    if dim == 1:
        return np.array([2.0 * rng.binomial(n, 0.5) - n])
    counts = rng.multinomial(n, [1.0 / dim] * dim)
    ups = rng.binomial(counts, 0.5)
    return (2.0 * ups - counts).astype(float)


def brownian_drift(c=0.0, dim: int = 1) -> ProcessDescriptor:
    drift = np.broadcast_to(np.asarray(c, dtype=float), (dim,)).copy()
    return ProcessDescriptor(
        kind="brownian",
        dim=dim,
        drift=drift,
        center=lambda t: drift * t,
        scale=lambda t: math.sqrt(t),
        shift_response=lambda x: drift * x,
        scale_response=lambda x: 1.0,
        spec={"kind": "brownian", "drift": drift.tolist() if dim > 1 else float(drift[0]), "dimension": dim},
    )


def lattice_walk(dim: int = 1) -> ProcessDescriptor:
    zero = np.zeros(dim)
    return ProcessDescriptor(
        kind="lattice",
        dim=dim,
        drift=zero,
        center=lambda t: zero.copy(),
        scale=lambda t: math.sqrt(t / dim),
        shift_response=lambda x: zero.copy(),
        scale_response=lambda x: 1.0,
        spec={"kind": "lattice", "dimension": dim},
    )


def process_from_dict(spec: dict) -> ProcessDescriptor:
    spec = dict(spec)
    kind = spec.pop("kind", None)
    dim = int(spec.pop("dimension", 1))
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    if kind == "brownian":
        drift = spec.pop("drift", 0.0)
        proc = brownian_drift(drift, dim)
    elif kind == "lattice":
        proc = lattice_walk(dim)
    else:
        raise ValueError(f"unknown process kind {kind!r}; expected 'brownian' or 'lattice'")
    if spec:
        raise ValueError(f"unknown process keys {sorted(spec)}")
    return proc


class RunPath:
    """Lazily revealed trajectory of one run, started at (start_time, start_pos)."""

    def __init__(self, proc: ProcessDescriptor, start_time: float, start_pos):
        self.proc = proc
        self.start_time = float(start_time)
        self.start_pos = np.asarray(start_pos, dtype=float).reshape(proc.dim)

    def sample_at(self, t: float, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    @property
    def knots(self):
        raise NotImplementedError


class BrownianRunPath(RunPath):
    def __init__(self, proc, start_time, start_pos):
        super().__init__(proc, start_time, start_pos)
        self.times = [self.start_time]
        self.positions = [self.start_pos]

    @property
    def knots(self):
        return list(zip(self.times, self.positions))

    def sample_at(self, t, rng, z=None):
        """Position at time t, consistent with every knot already revealed.

        ``z`` optionally supplies the standard normal vector to use.
        """
        t = float(t)
        if t < self.start_time:
            raise ValueError(f"query time {t} precedes run start {self.start_time}")
        times = self.times
        k = bisect.bisect_left(times, t)
        if k < len(times) and times[k] == t:
            return self.positions[k]
        if z is None:
            z = rng.standard_normal(self.proc.dim)
        if k == len(times):
            dt = t - times[-1]
            pos = self.positions[-1] + self.proc.drift * dt + math.sqrt(dt) * z
        else:
            s, u = times[k - 1], times[k]
            xs, xu = self.positions[k - 1], self.positions[k]
            w = (t - s) / (u - s)
            # bridge law does not depend on the drift
            pos = xs + w * (xu - xs) + math.sqrt((t - s) * (u - t) / (u - s)) * z
        times.insert(k, t)
        self.positions.insert(k, pos)
        return pos


class LatticeRunPath(RunPath):
    """Discrete-time walk; the path is constant on [n, n+1) and steps at integer times."""

    def __init__(self, proc, start_time, start_pos):
        super().__init__(proc, start_time, start_pos)
        if not float(start_time).is_integer():
            raise ValueError("lattice runs must start at integer times")
        self.cum = [self.start_pos]

    @property
    def knots(self):
        return [(self.start_time + k, p) for k, p in enumerate(self.cum)]

    def sample_at(self, t, rng, z=None):
        t = float(t)
        if t < self.start_time:
            raise ValueError(f"query time {t} precedes run start {self.start_time}")
        k = int(math.floor(t - self.start_time))
        dim = self.proc.dim
        while len(self.cum) <= k:
            step = np.zeros(dim)
            step[rng.integers(dim)] = 1.0 if rng.random() < 0.5 else -1.0
            self.cum.append(self.cum[-1] + step)
        return self.cum[k]
