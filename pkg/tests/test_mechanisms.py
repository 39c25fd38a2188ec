from __future__ import annotations

import math

import numpy as np
import pytest

from pview import (
    NoiseFreeStream,
    RandomStream,
    exponential_choice,
    exponential_weights,
    sample_laplace,
    sample_laplace_array,
)
from oracles import FakeStream


def test_stream_replays_by_seed_and_path():
    a = RandomStream(7, (1, 2))
    b = RandomStream(7, (1, 2))
    assert [a.random() for _ in range(5)] == [b.random() for _ in range(5)]


def test_stream_children_differ_from_parent_and_siblings():
    root = RandomStream(7)
    seqs = {
        "root": tuple(RandomStream(7).random_array(4)),
        "c0": tuple(root.child(0).random_array(4)),
        "c1": tuple(root.child(1).random_array(4)),
        "c00": tuple(root.child(0).child(0).random_array(4)),
    }
    assert len(set(seqs.values())) == len(seqs)
    assert root.child(3).path == (3,)


def test_stream_rejects_bad_seeds():
    with pytest.raises(ValueError):
        RandomStream(-1)
    with pytest.raises(ValueError):
        RandomStream(1.5)
    with pytest.raises(ValueError):
        RandomStream(True)


def test_laplace_inverse_cdf_mapping():
    # u = 0.75 maps to u - 1/2 = 1/4, so the draw is scale * ln(2).
    assert sample_laplace(2.0, FakeStream([0.75])) == pytest.approx(2.0 * math.log(2.0))
    assert sample_laplace(2.0, FakeStream([0.25])) == pytest.approx(-2.0 * math.log(2.0))
    assert sample_laplace(5.0, FakeStream([0.5])) == 0.0


def test_laplace_zero_uniform_stays_finite():
    # random() can return exactly 0, the lowest point of [0, 1).
    v = sample_laplace(1.0, FakeStream([0.0]))
    assert math.isfinite(v)
    assert v < 0


def test_laplace_rejects_bad_scale():
    with pytest.raises(ValueError):
        sample_laplace(0.0, RandomStream(0))
    with pytest.raises(ValueError):
        sample_laplace_array(-1.0, RandomStream(0), 3)


def test_laplace_array_matches_scalar_formula():
    us = [0.9, 0.1, 0.5, 0.0, 0.999]
    arr = sample_laplace_array(3.0, FakeStream(us), len(us))
    scalars = [sample_laplace(3.0, FakeStream([u])) for u in us]
    assert np.allclose(arr, scalars)


def test_laplace_sample_statistics():
    draws = sample_laplace_array(2.0, RandomStream(42), 200_000)
    assert abs(float(draws.mean())) < 0.05
    # Laplace(b) has standard deviation b * sqrt(2).
    assert float(draws.std()) == pytest.approx(2.0 * math.sqrt(2.0), rel=0.02)
    assert float(np.abs(draws).mean()) == pytest.approx(2.0, rel=0.02)


def test_noise_free_stream_draws_zero_noise():
    s = NoiseFreeStream()
    assert s.random() == 0.5
    assert sample_laplace(10.0, s) == 0.0
    assert np.all(sample_laplace_array(10.0, s, 4) == 0.0)
    assert s.child(3) is s


def test_exponential_weights_subtract_max():
    w = exponential_weights([1e8, 1e8 - 4.0], epsilon=1.0, sensitivity=1.0)
    assert np.all(np.isfinite(w))
    assert w[0] == 1.0
    assert w[1] == pytest.approx(math.exp(-2.0))


def test_exponential_weights_shift_invariant():
    q = np.array([3.0, -1.0, 0.5])
    a = exponential_weights(q, 0.7, 2.0)
    b = exponential_weights(q + 123.456, 0.7, 2.0)
    assert np.allclose(a / a.sum(), b / b.sum())


def test_exponential_weights_validation():
    with pytest.raises(ValueError):
        exponential_weights([], 1.0, 1.0)
    with pytest.raises(ValueError):
        exponential_weights([1.0, float("nan")], 1.0, 1.0)
    with pytest.raises(ValueError):
        exponential_weights([1.0], 0.0, 1.0)
    with pytest.raises(ValueError):
        exponential_weights([1.0], 1.0, 0.0)


def test_exponential_choice_follows_cumulative_weights():
    # Equal qualities make the cumulative weights (1, 2, 3, 4) / 4.
    q = [0.0, 0.0, 0.0, 0.0]
    assert exponential_choice(q, 1.0, 1.0, FakeStream([0.10])) == 0
    assert exponential_choice(q, 1.0, 1.0, FakeStream([0.26])) == 1
    assert exponential_choice(q, 1.0, 1.0, FakeStream([0.76])) == 3
    assert exponential_choice([5.0], 1.0, 1.0, FakeStream([0.99])) == 0


def test_exponential_choice_consumes_one_draw():
    rng = FakeStream([0.3, 0.9])
    exponential_choice([0.0, 0.0], 1.0, 1.0, rng)
    assert rng.pos == 1
