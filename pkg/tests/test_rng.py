import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcbound.rng import PURPOSE_MAP, PURPOSE_STATIONARY, RngStream


def test_same_key_same_draws():
    a = RngStream(7, 3).uniforms(5, 100, 2)
    b = RngStream(7, 3).uniforms(5, 100, 2)
    assert np.array_equal(a, b)


def test_different_streams_differ():
    a = RngStream(7, 3).uniforms(1, 100)
    b = RngStream(7, 4).uniforms(1, 100)
    c = RngStream(8, 3).uniforms(1, 100)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_steps_and_purposes_are_separate():
    r = RngStream(1)
    assert not np.array_equal(r.uniforms(1, 10), r.uniforms(2, 10))
    assert not np.array_equal(r.uniforms(1, 10, purpose=PURPOSE_MAP),
                              r.uniforms(1, 10, purpose=PURPOSE_STATIONARY))


@settings(max_examples=60, deadline=None)
@given(offset=st.integers(0, 500), count=st.integers(1, 50), dim=st.integers(1, 3),
       step=st.integers(0, 1000))
def test_offset_slices_agree(offset, count, dim, step):
    r = RngStream(20080701, 11)
    full = r.uniforms(step, offset + count, dim)
    part = r.uniforms(step, count, dim, offset=offset)
    assert np.array_equal(full[offset:], part)


def test_uniforms_in_open_interval():
    u = RngStream(0).uniforms(0, 200_000)
    assert u.min() > 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 0.005


def test_child_is_deterministic_and_distinct():
    r = RngStream(5)
    assert r.child(1) == r.child(1)
    assert r.child(1) != r.child(2)
    assert not np.array_equal(r.child(1).uniforms(1, 10), r.child(2).uniforms(1, 10))


def test_generator_reproducible():
    a = RngStream(9).generator().normal(size=5)
    b = RngStream(9).generator().normal(size=5)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("seed", [-1, 2 ** 64, 1.5])
def test_invalid_seed(seed):
    with pytest.raises(ValueError):
        RngStream(seed)


def test_as_dict():
    assert RngStream(3, 4).as_dict() == {"seed": 3, "stream_id": 4}
