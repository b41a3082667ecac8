import numpy as np
import pytest
from hypothesis import given, strategies as st

from reedsim.streams import StreamKey


def test_same_key_bit_identical():
    k = StreamKey(123, (1, 2, 3))
    a = k.generator().standard_normal(100)
    b = k.generator().standard_normal(100)
    assert np.array_equal(a, b)


def test_child_extends_path():
    k = StreamKey(5)
    assert k.child(1, 2).path == (1, 2)
    assert k.child(1).child(2).path == (1, 2)


def test_sibling_paths_differ():
    k = StreamKey(9)
    a = k.child(0).generator().standard_normal(10)
    b = k.child(1).generator().standard_normal(10)
    assert not np.array_equal(a, b)


def test_sibling_independence_correlation():
    k = StreamKey(2024)
    n = 100_000
    a = k.child(0).generator().standard_normal(n)
    b = k.child(1).generator().standard_normal(n)
    corr = np.corrcoef(a, b)[0, 1]
    assert abs(corr) < 0.02


def test_seed_changes_stream():
    a = StreamKey(1, (0,)).generator().standard_normal(10)
    b = StreamKey(2, (0,)).generator().standard_normal(10)
    assert not np.array_equal(a, b)


@given(seed=st.integers(0, 2**63 - 1),
       path=st.lists(st.integers(0, 10_000), max_size=5))
def test_reproducible_for_any_key(seed, path):
    k = StreamKey(seed, tuple(path))
    assert np.array_equal(k.generator().standard_normal(5),
                          k.generator().standard_normal(5))


def test_path_prefix_not_aliased():
    # (1,) and (1, 0) must be distinct streams
    k = StreamKey(77)
    a = k.child(1).generator().standard_normal(10)
    b = k.child(1, 0).generator().standard_normal(10)
    assert not np.array_equal(a, b)
