import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monkeywalk.kernel import MemoryKernel
from monkeywalk.rng import replicate_rng
from monkeywalk.stats import ks_one_sample

mp.mp.dps = 50


def mp_exponent(g, d, t):
    return mp.mpf(g) * mp.mpf(t) ** mp.mpf(d)


def test_exponent_scalar_and_vector():
    k = MemoryKernel(2.0, 0.5)
    assert k.exponent(4.0) == pytest.approx(4.0, rel=1e-15)
    assert isinstance(k.exponent(4.0), float)
    np.testing.assert_allclose(k.exponent(np.array([1.0, 9.0])), [2.0, 6.0], rtol=1e-15)


@pytest.mark.parametrize("gamma, delta", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (1.0, math.inf)])
def test_rejects_bad_parameters(gamma, delta):
    with pytest.raises(ValueError):
        MemoryKernel(gamma, delta)


@pytest.mark.parametrize("lo, hi", [(1.0, 1.0 + 1e-9), (100.0, 100.5), (0.0, 3.0), (1e4, 1e4 + 1e-6)])
@pytest.mark.parametrize("delta", [0.6, 1.0, 1.7, 2.5])
def test_exponent_increment_against_mpmath(lo, hi, delta):
    k = MemoryKernel(0.8, delta)
    ref = mp_exponent(0.8, delta, hi) - mp_exponent(0.8, delta, lo)
    assert k.exponent_increment(lo, hi) == pytest.approx(float(ref), rel=1e-12)


@pytest.mark.parametrize("t", [1e-8, 1e-3, 0.5, 3.0, 50.0, 400.0, 1e6])
@pytest.mark.parametrize("delta", [0.6, 1.0, 2.5])
def test_log_cumulative_against_mpmath(t, delta):
    k = MemoryKernel(1.0, delta)
    ref = mp.log(mp.expm1(mp_exponent(1.0, delta, t)))
    assert k.log_cumulative(t) == pytest.approx(float(ref), rel=1e-12, abs=1e-12)


def test_log_cumulative_at_zero():
    assert MemoryKernel(1.0, 0.7).log_cumulative(0.0) == -math.inf


@pytest.mark.parametrize("lo, hi", [(0.0, 0.3), (2.0, 2.0001), (5.0, 9.0), (999.0, 1000.0)])
@pytest.mark.parametrize("delta", [0.6, 1.3, 2.5])
def test_log_interval_weight_against_mpmath(lo, hi, delta):
    k = MemoryKernel(1.0, delta)
    ref = mp.log(mp.exp(mp_exponent(1.0, delta, hi)) - mp.exp(mp_exponent(1.0, delta, lo)))
    assert k.log_interval_weight(lo, hi) == pytest.approx(float(ref), rel=1e-12)


def test_log_interval_weight_rejects_empty_interval():
    with pytest.raises(ValueError):
        MemoryKernel(1.0, 1.0).log_interval_weight(2.0, 2.0)


def mp_offset(g, d, start, length, u):
    # solve (e^{Lambda(start+x)} - e^{Lambda(start)}) / (e^{Lambda(start+length)} - e^{Lambda(start)}) = u
    s, L, u = mp.mpf(start), mp.mpf(length), mp.mpf(u)
    lam = lambda y: mp_exponent(g, d, y)
    top = lam(s + L) - lam(s)
    # work relative to e^{Lambda(start)} to stay in range
    target = mp.log1p(u * mp.expm1(top)) + lam(s)
    return mp.findroot(lambda x: lam(s + x) - target, (mp.mpf(0), L), solver="anderson")


@pytest.mark.parametrize(
    "start, length, u",
    [(0.0, 1.0, 0.3), (0.0, 5.0, 0.999), (2.0, 0.5, 1e-6), (50.0, 2.0, 0.5), (300.0, 1.0, 0.01), (1e6 - 1, 1.0, 0.9)],
)
@pytest.mark.parametrize("delta", [0.6, 1.0, 2.5])
def test_sample_within_run_inverts_cdf_mpmath(start, length, u, delta):
    k = MemoryKernel(1.0, delta)
    ref = float(mp_offset(1.0, delta, start, length, u))
    got = k.sample_within_run(start, length, u)
    # offsets pinned against the run end lose absolute precision ~ ulp(start)
    assert got == pytest.approx(ref, rel=1e-9, abs=4 * np.spacing(start + length))


@pytest.mark.parametrize("delta", [0.6, 1.0, 2.5])
def test_within_run_samples_follow_cdf(delta):
    k = MemoryKernel(1.0, delta)
    rng = replicate_rng(1, int(delta * 10))
    x = k.sample_within_run(np.full(20000, 3.0), np.full(20000, 1.5), rng.random(20000))
    rep = ks_one_sample(x, lambda v: k.cdf_within_run(3.0, 1.5, v))
    assert rep.p_value > 1e-3


@given(
    start=st.floats(0.0, 1e5),
    length=st.floats(1e-3, 50.0),
    delta=st.floats(0.55, 3.0),
    u=st.lists(st.floats(1e-12, 1 - 1e-12), min_size=2, max_size=20),
)
@settings(max_examples=200, deadline=None)
def test_within_run_monotone_and_inside(start, length, delta, u):
    k = MemoryKernel(1.0, delta)
    u = np.sort(np.asarray(u))
    x = k.sample_within_run(np.full(len(u), start), np.full(len(u), length), u)
    assert np.all(np.isfinite(x))
    assert np.all(x > 0) and np.all(x < length)
    assert np.all(np.diff(x) >= 0)


def test_relocation_time_inside_horizon_even_when_huge():
    k = MemoryKernel(1.0, 2.5)
    u = np.array([1e-15, 0.5, 1 - 1e-15])
    r = k.sample_relocation_time(np.full(3, 1e6), u)
    assert np.all(np.isfinite(r)) and np.all(r < 1e6) and np.all(r > 0)
    # with Lambda ~ 1e15 the target sits within a sliver of the horizon
    assert r[1] > 1e6 - 1e-6


@pytest.mark.parametrize("u", [0.0, 1.0, -0.1, math.nan])
def test_uniform_outside_open_interval_rejected(u):
    with pytest.raises(ValueError):
        MemoryKernel(1.0, 1.0).sample_within_run(0.0, 1.0, u)


def test_cdf_within_run_endpoints():
    k = MemoryKernel(1.0, 1.5)
    assert k.cdf_within_run(2.0, 1.0, 0.0) == 0.0
    assert k.cdf_within_run(2.0, 1.0, 1.0) == pytest.approx(1.0, rel=1e-14)


def test_log_density_matches_formula():
    k = MemoryKernel(1.3, 0.8)
    x = 2.5
    ref = math.log(1.3 * 0.8 * x ** (-0.2)) + 1.3 * x**0.8
    assert k.log_density(x) == pytest.approx(ref, rel=1e-14)
