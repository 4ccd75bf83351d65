import math

import numpy as np
import pytest
from scipy import stats

from monkeywalk.process import brownian_drift, lattice_steps_sum, lattice_walk, process_from_dict
from monkeywalk.rng import replicate_rng


def test_brownian_endpoints_mean_and_variance():
    proc = brownian_drift(0.7, 2)
    x = proc.sample_endpoints(np.full(40000, 3.0), replicate_rng(1))
    np.testing.assert_allclose(x.mean(axis=0), [2.1, 2.1], atol=4 * math.sqrt(3 / 40000))
    np.testing.assert_allclose(x.var(axis=0), [3.0, 3.0], rtol=0.05)


def test_single_endpoint_shape_and_zero_duration():
    proc = brownian_drift(1.0, 3)
    assert proc.sample_endpoint(0.0, replicate_rng(2)).tolist() == [0.0, 0.0, 0.0]
    with pytest.raises(ValueError):
        proc.sample_endpoint(-1.0, replicate_rng(2))


def test_ergodicity_data():
    a, b, f, g = brownian_drift(2.0, 1).eval_ergodicity(9.0, 0.5)
    assert a.tolist() == [18.0] and b == 3.0 and f.tolist() == [1.0] and g == 1.0
    a, b, f, g = lattice_walk(2).eval_ergodicity(8.0, 1.0)
    assert a.tolist() == [0.0, 0.0] and b == 2.0 and f.tolist() == [0.0, 0.0]
    with pytest.raises(ValueError):
        lattice_walk(1).eval_ergodicity(0.0, 1.0)


def test_bridge_conditional_law():
    # condition on X(1) = 0 and X(3) = 2; then X(2) ~ N(1, 1/2) whatever the drift
    proc = brownian_drift(5.0, 1)
    rng = replicate_rng(4)
    vals = []
    for _ in range(4000):
        path = proc.new_path(1.0, [0.0])
        path.times.append(3.0)
        path.positions.append(np.array([2.0]))
        vals.append(path.sample_at(2.0, rng)[0])
    vals = np.array(vals)
    assert stats.kstest(vals, stats.norm(1.0, math.sqrt(0.5)).cdf).pvalue > 1e-3


def test_path_is_consistent_with_revealed_knots():
    proc = brownian_drift(0.0, 1)
    rng = replicate_rng(5)
    path = proc.new_path(2.0, [1.0])
    x5 = path.sample_at(5.0, rng)
    x3 = path.sample_at(3.0, rng)
    assert path.sample_at(5.0, rng) is x5
    assert path.sample_at(3.0, rng) is x3
    assert path.sample_at(2.0, rng).tolist() == [1.0]
    assert [t for t, _ in path.knots] == [2.0, 3.0, 5.0]
    with pytest.raises(ValueError):
        path.sample_at(1.0, rng)


def test_supplied_normal_is_used():
    path = brownian_drift(1.0, 1).new_path(0.0, [0.0])
    x = path.sample_at(4.0, replicate_rng(0), z=np.array([0.5]))
    assert x.tolist() == [4.0 + 2.0 * 0.5]


def test_lattice_steps_sum_parity_and_variance():
    rng = replicate_rng(6)
    sums = np.array([lattice_steps_sum(25, 1, rng)[0] for _ in range(20000)])
    assert np.all((sums + 25) % 2 == 0)
    assert sums.var() == pytest.approx(25, rel=0.05)
    x = np.array([lattice_steps_sum(10, 3, rng) for _ in range(5000)])
    assert np.all(np.abs(x).sum(axis=1) <= 10)
    assert np.all((np.abs(x).sum(axis=1) - 10) % 2 == 0)


def test_lattice_path_is_constant_between_integers():
    proc = lattice_walk(1)
    rng = replicate_rng(7)
    path = proc.new_path(3.0, [0.0])
    a = path.sample_at(5.0, rng)
    assert path.sample_at(5.99, rng) is a
    assert path.sample_at(3.5, rng).tolist() == [0.0]
    assert abs(path.sample_at(4.0, rng)[0]) == 1.0
    with pytest.raises(ValueError):
        proc.new_path(1.5, [0.0])


def test_lattice_endpoint_rounds_duration_up():
    rng = replicate_rng(8)
    x = lattice_walk(1).sample_endpoint(2.5, rng)
    assert (x[0] + 3) % 2 == 0


def test_process_from_dict():
    p = process_from_dict({"kind": "brownian", "drift": [1.0, 2.0], "dimension": 2})
    assert p.drift.tolist() == [1.0, 2.0] and p.dim == 2
    assert process_from_dict(p.to_dict()).drift.tolist() == [1.0, 2.0]
    assert process_from_dict({"kind": "lattice"}).discrete
    with pytest.raises(ValueError):
        process_from_dict({"kind": "levy"})
    with pytest.raises(ValueError):
        process_from_dict({"kind": "brownian", "drfit": 1.0})
    with pytest.raises(ValueError):
        process_from_dict({"kind": "lattice", "dimension": 0})
