import math

import numpy as np
import pytest
from scipy import integrate

from monkeywalk.genealogy import (
    ancestor_probability,
    brute_force_indicators,
    conditional_phi_moments,
    generate_runs,
    genealogy_chi_square,
    indicator_cell_probabilities,
    make_runs,
    pool_cells,
    sample_ancestors,
    sample_effective_time,
    sample_genealogy_brute_force,
    sample_phi,
)
from monkeywalk.kernel import MemoryKernel
from monkeywalk.rng import replicate_rng
from monkeywalk.runlen import deterministic, exponential, geometric
from monkeywalk.theory import centering, sigma_n

E = math.e
K1 = MemoryKernel(1.0, 1.0)


def test_generate_runs_deterministic_lengths():
    runs = generate_runs(deterministic(1.0), K1, 3.5, replicate_rng(0))
    assert runs.lengths.tolist() == [1.0, 1.0, 1.0, 1.0]
    assert runs.relocation_times.tolist() == [1.0, 2.0, 3.0, 4.0]


def test_generate_runs_log_weights():
    runs = generate_runs(deterministic(2.0), K1, 2.0, replicate_rng(0))
    assert runs.log_weights.tolist() == [2.0, 4.0]


def test_generate_runs_renewal_count():
    runs = generate_runs(exponential(1.0), K1, 1000.0, replicate_rng(1))
    inside = np.sum(runs.relocation_times <= 1000.0)
    assert abs(inside - 1000) < 5 * math.sqrt(1000)
    assert runs.relocation_times[-1] > 1000.0 >= runs.relocation_times[-2]


def test_generate_runs_by_count_and_errors():
    assert len(generate_runs(exponential(1.0), K1, rng=replicate_rng(1), count=17)) == 17
    with pytest.raises(ValueError):
        generate_runs(exponential(1.0), K1, 0.0, replicate_rng(1))
    with pytest.raises(ValueError):
        generate_runs(exponential(1.0), K1, 10.0)


def test_run_sequence_invariants():
    runs = generate_runs(exponential(1.0), MemoryKernel(1.0, 0.7), 500.0, replicate_rng(2))
    assert np.all(np.diff(runs.relocation_times) > 0)
    np.testing.assert_allclose(np.diff(runs.relocation_times), runs.lengths[1:], rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(runs.log_weights, runs.relocation_times**0.7, rtol=1e-14)


def test_ancestor_probability_examples():
    runs = make_runs([1.0, 1.0, 1.0], K1)
    assert ancestor_probability(runs, 1) == 1.0
    assert ancestor_probability(runs, 2) == pytest.approx((E**2 - E) / (E**2 - 1), rel=1e-14)
    late = make_runs([50.0, 1.0], K1)
    assert ancestor_probability(late, 2) == pytest.approx(1 - math.exp(-1), abs=1e-10)
    with pytest.raises(IndexError):
        ancestor_probability(runs, 4)


@pytest.mark.parametrize("delta", [0.6, 1.0, 2.5])
def test_ancestor_probability_matches_integral_ratio(delta):
    k = MemoryKernel(0.7, delta)
    runs = make_runs([0.5, 1.2, 0.3, 2.0], k)
    mu = lambda x: 0.7 * delta * x ** (delta - 1) * math.exp(0.7 * x**delta)
    for i in range(1, 5):
        lo, hi = runs.starts[i - 1], runs.relocation_times[i - 1]
        ref = integrate.quad(mu, lo, hi)[0] / integrate.quad(mu, 0, hi)[0]
        assert ancestor_probability(runs, i) == pytest.approx(ref, rel=1e-8)


def test_ancestor_probabilities_stay_finite_with_huge_exponents():
    runs = generate_runs(exponential(1.0), MemoryKernel(1.0, 2.5), 1e5, replicate_rng(3))
    p = runs.ancestor_probabilities
    assert np.all(np.isfinite(p)) and np.all((p >= 0) & (p <= 1))


def test_run_index_ties_and_horizon():
    runs = make_runs([1.0, 1.0, 1.0], K1)
    assert runs.run_index(0.5) == 1
    assert runs.run_index(1.0) == 2
    assert runs.run_index(2.999) == 3
    with pytest.raises(ValueError):
        runs.run_index(3.0)


def test_sample_ancestors_marginals():
    runs = make_runs([0.8, 1.5, 0.4, 2.2, 1.0], MemoryKernel(1.0, 0.8))
    rng = replicate_rng(4)
    n = 20000
    counts = np.zeros(4)
    for _ in range(n):
        counts[sample_ancestors(runs, 5, rng) - 1] += 1
    p = runs.ancestor_probabilities[:4]
    assert np.all(np.abs(counts / n - p) <= 4 * np.sqrt(p * (1 - p) / n) + 1e-12)
    assert counts[0] == n


def test_brute_force_always_contains_run_one():
    runs = make_runs([1.0, 0.5, 2.0, 0.7], MemoryKernel(1.0, 0.6))
    rng = replicate_rng(5)
    for _ in range(200):
        anc = sample_genealogy_brute_force(runs, 4, rng)
        assert 1 in anc and all(i < 4 for i in anc)
    assert sample_genealogy_brute_force(runs, 2, rng) == frozenset({1})


def test_brute_force_marginal_of_run_two():
    runs = make_runs([1.0, 1.0, 1.0], K1)
    ind = brute_force_indicators(runs, 3, replicate_rng(6), 100_000)
    p = (E**2 - E) / (E**2 - 1)
    assert abs(ind[:, 1].mean() - p) < 3 * math.sqrt(p * (1 - p) / 100_000)


@pytest.mark.parametrize("gamma, delta", [(1.0, 0.6), (1.0, 1.0), (0.5, 1.5)])
def test_indicator_vector_is_product_bernoulli(gamma, delta):
    runs = make_runs([0.8, 1.5, 0.4, 2.2, 1.0], MemoryKernel(gamma, delta))
    out = genealogy_chi_square(runs, 5, replicate_rng(7, int(delta * 10)), 40_000)
    assert out["p_value"] > 1e-3


def test_cell_probabilities_sum_to_one_and_pooling():
    runs = make_runs([0.8, 1.5, 0.4, 2.2], MemoryKernel(1.0, 0.6))
    probs = indicator_cell_probabilities(runs, 4)
    assert probs.sum() == pytest.approx(1.0, rel=1e-14)
    obs, exp = pool_cells(np.array([0, 1, 50, 49]), np.array([0.5, 0.5, 50.0, 49.0]))
    assert obs.sum() == 100 and exp.sum() == pytest.approx(100.0)
    assert np.all(exp >= 5)


def test_sample_phi_small_cases():
    runs = make_runs([1.0, 1.0], K1)
    rng = replicate_rng(8)
    assert sample_phi(runs, 1, rng) == 0.0
    draws = np.array([sample_phi(runs, 2, rng) for _ in range(20000)])
    assert np.all((draws > 0) & (draws < 1))
    ref = integrate.quad(lambda x: x * math.exp(x), 0, 1)[0] / (E - 1)  # = 1/(e-1)
    assert ref == pytest.approx(1 / (E - 1))
    assert abs(draws.mean() - ref) < 4 * draws.std() / math.sqrt(len(draws))


def test_conditional_moments_match_monte_carlo():
    runs = make_runs([0.8, 1.5, 0.4, 2.2, 1.0, 0.6], MemoryKernel(1.0, 0.8))
    m, v = conditional_phi_moments(runs, 6)
    rng = replicate_rng(9)
    draws = np.array([sample_phi(runs, 6, rng) for _ in range(40000)])
    assert abs(draws.mean() - m) < 4 * math.sqrt(v / len(draws))
    assert draws.var() == pytest.approx(v, rel=0.05)


FINITE_N_BIAS = (
    "sigma(n) keeps one summand at delta=0.6; the next-order term of the expansion "
    "(about -11 at n=1e4) exceeds 5 SE at these sample sizes"
)


@pytest.mark.xfail(strict=True, reason=FINITE_N_BIAS)
def test_phi_mean_near_sigma_n():
    d, k, n = exponential(1.0), MemoryKernel(1.0, 0.6), 10_000
    vals = []
    for r in range(200):
        rng = replicate_rng(10, r)
        runs = generate_runs(d, k, rng=rng, count=n)
        vals.append(sample_phi(runs, n, rng))
    vals = np.array(vals)
    se = vals.std(ddof=1) / math.sqrt(len(vals))
    gap = vals.mean() - sigma_n(0.6, 1.0, d, n)
    assert abs(gap) < 5 * se, (gap, se)


@pytest.mark.parametrize("delta", [0.6, 1.0, 2.5])
def test_effective_time_invariants(delta):
    k = MemoryKernel(1.0, delta)
    rng = replicate_rng(11, int(10 * delta))
    for t in (0.3, 5.0, 80.0):
        runs = generate_runs(exponential(1.0), k, t, rng)
        et = sample_effective_time(runs, t, rng)
        i = et.run_index
        assert et.total == et.within_run + et.phi
        assert 0 <= et.within_run < runs.lengths[i - 1]
        assert 0 <= et.total <= t
        assert np.all(et.ancestors < i)


def test_effective_time_before_first_relocation():
    runs = make_runs([2.0, 1.0], K1)
    et = sample_effective_time(runs, 1.5, replicate_rng(12))
    assert (et.run_index, et.phi, et.total) == (1, 0.0, 1.5)
    runs = make_runs([1.0, 1.0, 1.0], K1)
    et = sample_effective_time(runs, 1.5, replicate_rng(12))
    assert et.run_index == 2 and et.within_run == 0.5


def test_integer_offsets_for_lattice():
    runs = generate_runs(geometric(0.4), MemoryKernel(1.0, 0.8), 60.0, replicate_rng(13))
    et = sample_effective_time(runs, 60.5, replicate_rng(14), integer_offsets=True)
    assert float(et.total).is_integer() and float(et.within_run).is_integer()


@pytest.mark.xfail(strict=True, reason=FINITE_N_BIAS)
def test_effective_time_mean_near_centering():
    d, k, t = exponential(1.0), MemoryKernel(1.0, 0.6), 2000.0
    vals = np.empty(10_000)
    for r in range(len(vals)):
        rng = replicate_rng(15, r)
        vals[r] = sample_effective_time(generate_runs(d, k, t, rng), t, rng).total
    se = vals.std(ddof=1) / math.sqrt(len(vals))
    gap = vals.mean() - centering(0.6, 1.0, d, t)
    assert abs(gap) < 5 * se, (gap, se)


def test_renewal_quantities():
    d, k = exponential(1.0), MemoryKernel(1.0, 0.6)
    q99 = []
    for t in (1e2, 1e3, 1e4):
        ages = []
        for r in range(2000):
            runs = generate_runs(d, k, t, replicate_rng(16, int(t), r))
            i = runs.run_index(t)
            ages.append(t - runs.starts[i - 1])
            if t == 1e4:
                assert abs(i / t - 1) < 5 * math.sqrt(math.log(t) / t)
        q99.append(np.quantile(ages, 0.99))
    assert q99[1] <= 1.1 * q99[0] + 0.5 and q99[2] <= 1.1 * q99[1] + 0.5
