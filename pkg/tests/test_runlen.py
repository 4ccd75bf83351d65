import math

import numpy as np
import pytest
from scipy import integrate, stats

from monkeywalk.rng import open_uniform, replicate_rng
from monkeywalk.runlen import (
    RunLengthDistribution,
    check_moments,
    deterministic,
    exponential,
    gamma_dist,
    geometric,
    required_moment_order,
    uniform,
)

DISTS = [exponential(1.0), exponential(2.5), geometric(0.3), geometric(1.0), deterministic(1.7), gamma_dist(2.5, 1.5), uniform(0.2, 3.0)]


def scipy_twin(d):
    p = d.params
    if d.kind == "exponential":
        return stats.expon(scale=1 / p["rate"])
    if d.kind == "geometric":
        return stats.geom(p["q"])
    if d.kind == "gamma":
        return stats.gamma(p["shape"], scale=1 / p["rate"])
    if d.kind == "uniform":
        return stats.uniform(p["a"], p["b"] - p["a"])
    return None


def numeric_expect(d, fn):
    if d.kind == "deterministic":
        return fn(d.params["c"])
    if d.kind == "geometric":
        q = d.params["q"]
        n = np.arange(1, 4000)
        return float(np.sum(fn(n.astype(float)) * q * (1 - q) ** (n - 1)))
    tw = scipy_twin(d)
    lo, hi = tw.support()
    return integrate.quad(lambda x: fn(x) * tw.pdf(x), lo, hi, limit=200, epsabs=0, epsrel=1e-12)[0]


@pytest.mark.parametrize("d", DISTS, ids=repr)
@pytest.mark.parametrize("k", [1, 2, 3, 4, 8, 12])
def test_moments_against_numeric_expectation(d, k):
    assert d.moment(k) == pytest.approx(numeric_expect(d, lambda x: x**k), rel=1e-8)


@pytest.mark.parametrize("d", DISTS, ids=repr)
@pytest.mark.parametrize("j", [0, 1, 2])
@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
def test_exp_moments_against_numeric_expectation(d, j, s):
    ref = numeric_expect(d, lambda x: x**j * np.exp(-s * x))
    assert d.exp_moment(j, s) == pytest.approx(ref, rel=1e-9)


def test_exp_laplace_exponential():
    assert exponential(1.0).exp_laplace(1.0) == pytest.approx(0.5, rel=1e-15)


@pytest.mark.parametrize("d", [d for d in DISTS if d.kind not in ("deterministic",) and d.params.get("q") != 1.0], ids=repr)
def test_samples_follow_the_law(d):
    u = open_uniform(replicate_rng(3), 50000)
    x = d.sample(u)
    tw = scipy_twin(d)
    if d.kind == "geometric":
        vals, counts = np.unique(x, return_counts=True)
        probs = tw.pmf(vals)
        # compare the first few cells exactly in distribution
        assert np.all(np.abs(counts[:5] / len(x) - probs[:5]) < 5 * np.sqrt(probs[:5] / len(x)))
        assert np.all(x == np.round(x)) and x.min() >= 1
    else:
        assert stats.kstest(x, tw.cdf).pvalue > 1e-3


def test_geometric_inverse_is_exact_at_cell_edges():
    d = geometric(0.5)
    # P(L <= n) = 1 - 2**-n
    assert d.sample(0.5) == 1.0
    assert d.sample(0.5 + 1e-12) == 2.0
    assert d.sample(0.75) == 2.0
    assert d.sample(0.875) == 3.0


def test_deterministic_sample():
    np.testing.assert_array_equal(deterministic(2.0).sample(np.array([0.1, 0.9])), [2.0, 2.0])


def test_integer_valued():
    assert geometric(0.4).integer_valued
    assert deterministic(3.0).integer_valued
    assert not deterministic(2.5).integer_valued
    assert not exponential(1.0).integer_valued


@pytest.mark.parametrize(
    "kind, params",
    [("weibull", {"k": 1}), ("exponential", {}), ("exponential", {"rate": -1}), ("geometric", {"q": 0}), ("uniform", {"a": 2, "b": 1})],
)
def test_invalid_distributions(kind, params):
    with pytest.raises(ValueError):
        RunLengthDistribution(kind, params)


def test_dict_round_trip_and_unknown_keys():
    d = gamma_dist(2.0, 3.0)
    assert RunLengthDistribution.from_dict(d.to_dict()) == d
    with pytest.raises(ValueError):
        RunLengthDistribution.from_dict({"kind": "exponential", "params": {"rate": 1}, "rat": 2})


@pytest.mark.parametrize("k", [0, 13, 2.0])
def test_moment_order_bounds(k):
    with pytest.raises(ValueError):
        exponential(1.0).moment(k)


@pytest.mark.parametrize("delta, order", [(0.6, 8), (0.9, 11), (0.5, 8), (0.95, 21)])
def test_required_moment_order(delta, order):
    assert required_moment_order(delta) == order


def test_check_moments():
    assert check_moments(exponential(1.0), 0.6) == 8
    assert check_moments(exponential(1.0), 1.5) == 4
    with pytest.raises(ValueError):
        check_moments(exponential(1.0), 0.95)


def test_variance():
    assert exponential(2.0).variance() == pytest.approx(0.25)
    assert geometric(0.25).variance() == pytest.approx(0.75 / 0.25**2)
    assert math.isclose(deterministic(4.0).variance(), 0.0, abs_tol=1e-12)
