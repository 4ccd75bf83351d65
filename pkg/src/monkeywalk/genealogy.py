"""Effective-time construction: run sequences, the ancestor line, Phi and S(t).

Runs are indexed from 1 as in the model: run i occupies [T_{i-1}, T_i). Arrays are
0-based, so ``lengths[i - 1]`` is L_i.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate

from .kernel import MemoryKernel
from .rng import open_uniform
from .runlen import RunLengthDistribution

SKIP_PROB = 1e-15


@dataclass(frozen=True, eq=False)
class RunSequence:
    kernel: MemoryKernel
    lengths: np.ndarray
    relocation_times: np.ndarray
    log_weights: np.ndarray

    def __len__(self):
        return len(self.lengths)

    @cached_property
    def starts(self) -> np.ndarray:
        """T_{i-1} for every run."""
        return np.concatenate(([0.0], self.relocation_times[:-1]))

    @cached_property
    def exponent_increments(self) -> np.ndarray:
        """Lambda(T_i) - Lambda(T_{i-1}), as Lambda(T_{i-1}) * expm1(delta * log1p(L_i / T_{i-1}))."""
        lw = self.log_weights
        out = np.empty_like(lw)
        out[0] = lw[0]
        if len(lw) > 1:
            rel = self.lengths[1:] / self.relocation_times[:-1]
            near = rel < 1.0
            with np.errstate(over="ignore", invalid="ignore"):
                inc = lw[:-1] * np.expm1(self.kernel.delta * np.log1p(np.where(near, rel, 0.0)))
            out[1:] = np.where(near, inc, lw[1:] - lw[:-1])
        return out

    @cached_property
    def ancestor_probabilities(self) -> np.ndarray:
        """W_i / Wbar_i for every run, from the exact integrals."""
        return np.expm1(-self.exponent_increments) / np.expm1(-self.log_weights)

    def run_index(self, t: float) -> int:
        """i(t), with ties T_i = t resolved to run i + 1."""
        if t < 0:
            raise ValueError("t must be nonnegative")
        i = int(np.searchsorted(self.relocation_times, t, side="right")) + 1
        if i > len(self):
            raise ValueError(f"t={t} lies beyond the generated horizon {self.relocation_times[-1]}")
        return i


def make_runs(lengths, kernel: MemoryKernel) -> RunSequence:
    lengths = np.asarray(lengths, dtype=float)
    if lengths.ndim != 1 or len(lengths) == 0 or np.any(lengths <= 0):
        raise ValueError("run lengths must be a nonempty sequence of positive numbers")
    times = np.cumsum(lengths)
    return RunSequence(kernel, lengths, times, np.asarray(kernel.exponent(times), dtype=float))


def generate_runs(
    dist: RunLengthDistribution,
    kernel: MemoryKernel,
    horizon: float | None = None,
    rng: np.random.Generator | None = None,
    count: int | None = None,
) -> RunSequence:
    """Draw i.i.d. run lengths until T_n > horizon (or exactly ``count`` runs)."""
    if rng is None:
        raise ValueError("an rng is required")
    if count is not None:
        if count < 1:
            raise ValueError("count must be positive")
        return make_runs(dist.sample(open_uniform(rng, count)), kernel)
    if horizon is None or horizon <= 0:
        raise ValueError("horizon must be positive")
    mean, var = dist.mean(), dist.variance()
    n_guess = horizon / mean
    chunk = int(math.ceil(n_guess + 6.0 * math.sqrt(n_guess * var) / mean + 16))
    lengths = dist.sample(open_uniform(rng, chunk))
    total = float(np.sum(lengths))
    while total <= horizon:
        more = dist.sample(open_uniform(rng, chunk))
        lengths = np.concatenate((lengths, more))
        total += float(np.sum(more))
    times = np.cumsum(lengths)
    n = int(np.searchsorted(times, horizon, side="right")) + 1
    return make_runs(lengths[:n], kernel)


def ancestor_probability(runs: RunSequence, i: int) -> float:
    if not 1 <= i <= len(runs):
        raise IndexError(f"run index {i} outside 1..{len(runs)}")
    return float(runs.ancestor_probabilities[i - 1])


def sample_ancestors(runs: RunSequence, n: int, rng: np.random.Generator) -> np.ndarray:
    """1-based indices i < n with i an ancestor of run n (independent Bernoulli indicators)."""
    if not 1 <= n <= len(runs):
        raise IndexError(f"run index {n} outside 1..{len(runs)}")
    if n == 1:
        return np.empty(0, dtype=np.int64)
    return _draw_indicators(runs.ancestor_probabilities[: n - 1], rng)


def _draw_indicators(p: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # probabilities below SKIP_PROB never fire, those within SKIP_PROB of 1 always do
    u = open_uniform(rng, len(p))
    hit = ((u < p) & (p >= SKIP_PROB)) | (p > 1.0 - SKIP_PROB)
    return np.flatnonzero(hit) + 1


def sample_offsets(runs: RunSequence, idx: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Within-run offsets F_i for the 1-based run indices ``idx``."""
    if len(idx) == 0:
        return np.empty(0)
    j = np.asarray(idx) - 1
    return np.asarray(runs.kernel.sample_within_run(runs.starts[j], runs.lengths[j], open_uniform(rng, len(j))))


def sample_phi(runs: RunSequence, n: int, rng: np.random.Generator, integer_offsets: bool = False) -> float:
    """Phi(n): sum of F_i over the ancestors i < n of run n, so that S(t) = A(t) + Phi(i(t))."""
    anc = sample_ancestors(runs, n, rng)
    f = sample_offsets(runs, anc, rng)
    if integer_offsets:
        f = np.floor(f)
    return float(np.sum(f))


@dataclass(frozen=True)
class EffectiveTime:
    run_index: int
    within_run: float
    phi: float
    total: float
    ancestors: np.ndarray = field(default=None, repr=False, compare=False)


def sample_effective_time(
    runs: RunSequence, t: float, rng: np.random.Generator, integer_offsets: bool = False
) -> EffectiveTime:
    """One draw of S(t) = A(t) + Phi over the ancestors of run i(t).

    ``integer_offsets`` floors every offset (and A(t)) for discrete-time processes, whose
    path is constant on unit intervals; run lengths must then be integers.
    """
    i = runs.run_index(t)
    start = float(runs.starts[i - 1])
    within = t - start
    anc = sample_ancestors(runs, i, rng)
    f = sample_offsets(runs, anc, rng)
    if integer_offsets:
        within = math.floor(t) - start
        f = np.floor(f)
    phi = float(np.sum(f))
    return EffectiveTime(i, within, phi, within + phi, anc)


def sample_parents(runs: RunSequence, n: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Parent of every run j = 2..n, found by drawing the relocation target R_{j-1} explicitly.

    Returns an integer array of shape (size, n + 1) (or (n + 1,)) where entry j is the
    parent of run j; entries 0 and 1 are unused (set to 0).
    """
    if not 1 <= n <= len(runs):
        raise IndexError(f"run index {n} outside 1..{len(runs)}")
    shape = (1 if size is None else size, n - 1)
    horizons = np.broadcast_to(runs.relocation_times[: n - 1], shape)
    out = np.zeros((shape[0], n + 1), dtype=np.int64)
    if n > 1:
        r = runs.kernel.sample_relocation_time(horizons, open_uniform(rng, shape))
        out[:, 2:] = np.searchsorted(runs.relocation_times, r, side="right") + 1
    return out[0] if size is None else out


def brute_force_indicators(runs: RunSequence, n: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """Boolean matrix (size, n - 1): column i - 1 says whether run i is an ancestor of run n."""
    parents = sample_parents(runs, n, rng, size)
    ind = np.zeros((size, n - 1), dtype=bool)
    cur = np.full(size, n, dtype=np.int64)
    rows = np.arange(size)
    while True:
        live = cur > 1
        if not live.any():
            break
        cur = np.where(live, parents[rows, np.maximum(cur, 0)], cur)
        ind[rows[live], cur[live] - 1] = True
    return ind


def sample_genealogy_brute_force(runs: RunSequence, n: int, rng: np.random.Generator) -> frozenset:
    """Ancestors of run n obtained by sampling every parent and tracing the line back."""
    parents = sample_parents(runs, n, rng)
    anc = set()
    cur = n
    while cur > 1:
        cur = int(parents[cur])
        anc.add(cur)
    return frozenset(anc)


def conditional_phi_moments(runs: RunSequence, n: int):
    """Exact mean and variance of Phi(n) given the run lengths, by quadrature.

    Uses E[F_i 1] = p_i E[F_i] and Var = sum p_i E[F_i^2] - (p_i E[F_i])^2 over i = 1..n-1.
    """
    k = runs.kernel
    mean = 0.0
    var = 0.0
    for j in range(n - 1):
        lo, length = float(runs.starts[j]), float(runs.lengths[j])
        top = float(runs.log_weights[j])

        def w(x):
            # mu(lo + x) / exp(Lambda(T_i)), kept finite
            y = lo + x
            if y <= 0:
                return 0.0
            return k.gamma * k.delta * y ** (k.delta - 1) * math.exp(k.exponent(y) - top)

        m1 = integrate.quad(lambda x: x * w(x), 0.0, length, limit=200)[0]
        m2 = integrate.quad(lambda x: x * x * w(x), 0.0, length, limit=200)[0]
        norm = -math.expm1(-top)  # Wbar_i / exp(Lambda(T_i))
        a, b = m1 / norm, m2 / norm  # p_i E[F_i], p_i E[F_i^2]
        mean += a
        var += b - a * a
    return mean, var


def indicator_cell_probabilities(runs: RunSequence, n: int) -> np.ndarray:
    """Product-Bernoulli probability of every indicator vector for runs 1..n-1.

    Cell c encodes the vector with bit i - 1 set when run i is an ancestor.
    """
    p = runs.ancestor_probabilities[: n - 1]
    cells = np.arange(2 ** (n - 1))
    bits = (cells[:, None] >> np.arange(n - 1)[None, :]) & 1
    return np.prod(np.where(bits == 1, p[None, :], 1.0 - p[None, :]), axis=1)


def pool_cells(observed: np.ndarray, expected: np.ndarray, min_expected: float = 5.0):
    """Merge cells with small expectation so the chi-square approximation holds."""
    order = np.argsort(expected)
    obs, exp = observed[order].astype(float), expected[order].astype(float)
    small = exp < min_expected
    out_o, out_e = list(obs[~small]), list(exp[~small])
    so, se = obs[small].sum(), exp[small].sum()
    if se > 0 or so > 0:
        if se < min_expected and out_e:
            # fold the leftovers into the smallest adequate cell
            out_o[0] += so
            out_e[0] += se
        else:
            out_o.append(so)
            out_e.append(se)
    return np.array(out_o), np.array(out_e)


def genealogy_chi_square(runs: RunSequence, n: int, rng: np.random.Generator, samples: int) -> dict:
    """Compare brute-force ancestor lines of run n with the independent-Bernoulli law."""
    from .stats import chi_square_test

    if not 2 <= n <= min(len(runs), 16):
        raise ValueError("n must lie in 2..min(len(runs), 16)")
    ind = brute_force_indicators(runs, n, rng, samples)
    codes = ind.astype(np.int64) @ (1 << np.arange(n - 1))
    observed = np.bincount(codes, minlength=2 ** (n - 1))
    expected = samples * indicator_cell_probabilities(runs, n)
    obs, exp = pool_cells(observed, expected)
    if len(obs) < 2:
        return {"statistic": 0.0, "p_value": 1.0, "cells": int(len(obs)), "samples": samples}
    stat, p = chi_square_test(obs, exp)
    marg = ind.mean(axis=0)
    return {
        "statistic": stat,
        "p_value": p,
        "cells": int(len(obs)),
        "samples": samples,
        "ancestor_probabilities": runs.ancestor_probabilities[: n - 1].tolist(),
        "empirical_frequencies": marg.tolist(),
    }
