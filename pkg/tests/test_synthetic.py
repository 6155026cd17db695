import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cnnstereo.synthetic import dot_texture, random_dot_stereogram


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 10))
def test_nonoccluded_pixels_correspond(seed, dmax):
    pair = random_dot_stereogram(np.random.default_rng(seed), height=20, width=30, max_disparity=dmax, noise=0.0)
    assert pair.gt.min() >= 0 and pair.gt.max() <= dmax - 1
    assert np.all(pair.gt == np.round(pair.gt))
    ys, xs = np.nonzero(pair.nonocc)
    d = pair.gt[ys, xs].astype(int)
    # without noise a visible point has the same intensity in both images
    np.testing.assert_array_equal(pair.left[ys, xs], pair.right[ys, xs - d])


def test_value_range_and_dtype():
    pair = random_dot_stereogram(np.random.default_rng(0))
    for img in (pair.left, pair.right):
        assert img.dtype == np.float32 and img.min() >= 0 and img.max() <= 1
    assert pair.nonocc.dtype == bool and pair.nonocc.any()
    assert pair.max_disparity <= 12


def test_seeded_generation_is_reproducible():
    a = random_dot_stereogram(np.random.default_rng(9))
    b = random_dot_stereogram(np.random.default_rng(9))
    np.testing.assert_array_equal(a.left, b.left)
    np.testing.assert_array_equal(a.gt, b.gt)


def test_dot_texture_range():
    tex = dot_texture(np.random.default_rng(1), 10, 12)
    assert tex.shape == (10, 12) and tex.min() == 0 and tex.max() == 1


def test_rejects_tiny_range():
    with pytest.raises(ValueError):
        random_dot_stereogram(np.random.default_rng(0), max_disparity=1)
