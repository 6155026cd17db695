import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cnnstereo.cbca import CrossArms, aggregate, compute_arms
from cnnstereo.costs import INVALID_COST

from oracles import arms_bruteforce, cbca_bruteforce


def _with_sentinels(cost):
    cost = cost.astype(np.float32)
    for d in range(cost.shape[2]):
        cost[:, :d, d] = INVALID_COST
    return cost


def test_constant_image_arms_edge_limited():
    arms = compute_arms(np.full((6, 9), 0.5), intensity=0.1, distance=4)
    xs = np.arange(9)
    ys = np.arange(6)[:, None]
    np.testing.assert_array_equal(arms.left, np.broadcast_to(np.minimum(xs, 3), (6, 9)))
    np.testing.assert_array_equal(arms.right, np.broadcast_to(np.minimum(8 - xs, 3), (6, 9)))
    np.testing.assert_array_equal(arms.top, np.broadcast_to(np.minimum(ys, 3), (6, 9)))
    np.testing.assert_array_equal(arms.bottom, np.broadcast_to(np.minimum(5 - ys, 3), (6, 9)))


def test_step_stops_horizontal_arms():
    img = np.zeros((5, 10))
    img[:, 4:] = 1.0
    arms = compute_arms(img, intensity=0.5, distance=20)
    x = np.arange(10)
    # nothing left of the step reaches x >= 4 and nothing right of it reaches x <= 3
    assert np.all(x[None, :4] + arms.right[:, :4] <= 3)
    assert np.all(x[None, 4:] - arms.left[:, 4:] >= 4)


def test_gradient_fixture_matches_scanner():
    img = np.add.outer(np.arange(5) * 0.1, np.arange(5) * 0.25)
    arms = compute_arms(img, intensity=0.55, distance=4)
    ref = arms_bruteforce(img.astype(np.float32), 0.55, 4)
    for name in ("left", "right", "top", "bottom"):
        np.testing.assert_array_equal(getattr(arms, name), ref[name])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.05, 1.0), st.integers(1, 6))
def test_arms_match_scanner_property(seed, intensity, distance):
    img = np.random.default_rng(seed).random((6, 7)).astype(np.float32)
    arms = compute_arms(img, intensity, distance)
    ref = arms_bruteforce(img, intensity, distance)
    for name in ("left", "right", "top", "bottom"):
        got = getattr(arms, name)
        np.testing.assert_array_equal(got, ref[name])
        assert np.all((got >= 0) & (got < distance))


def test_flipped_arms_match_mirrored_image():
    img = np.random.default_rng(1).random((5, 8)).astype(np.float32)
    a = compute_arms(img, 0.4, 4).flipped()
    b = compute_arms(img[:, ::-1], 0.4, 4)
    for name in ("left", "right", "top", "bottom"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_zero_iterations_identity_and_constant_volume():
    rng = np.random.default_rng(2)
    arms_l = compute_arms(rng.random((6, 6)), 0.5, 4)
    arms_r = compute_arms(rng.random((6, 6)), 0.5, 4)
    cost = _with_sentinels(rng.random((6, 6, 3)))
    np.testing.assert_array_equal(aggregate(cost, arms_l, arms_r, 0), cost)
    const = _with_sentinels(np.full((6, 6, 3), 0.75))
    np.testing.assert_array_equal(aggregate(const, arms_l, arms_r, 3), const)
    with pytest.raises(ValueError):
        aggregate(cost, arms_l, arms_r, -1)


@pytest.mark.parametrize("seed", range(4))
def test_matches_support_set_oracle(seed):
    rng = np.random.default_rng(seed)
    left, right = rng.random((8, 8)), rng.random((8, 8))
    arms_l = compute_arms(left, 0.45, 4)
    arms_r = compute_arms(right, 0.45, 4)
    ref_arms_l = arms_bruteforce(left.astype(np.float32), 0.45, 4)
    ref_arms_r = arms_bruteforce(right.astype(np.float32), 0.45, 4)
    cost = _with_sentinels(rng.random((8, 8, 3)))
    np.testing.assert_allclose(
        aggregate(cost, arms_l, arms_r, 2), cbca_bruteforce(cost, ref_arms_l, ref_arms_r, 2), atol=1e-5
    )


def test_single_pixel_arms_keep_cost():
    zero = np.zeros((4, 5), dtype=np.int32)
    arms = CrossArms(zero, zero, zero, zero)
    cost = _with_sentinels(np.random.default_rng(3).random((4, 5, 3)))
    np.testing.assert_array_equal(aggregate(cost, arms, arms, 2), cost)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 3))
def test_aggregation_preserves_range(seed, iterations):
    rng = np.random.default_rng(seed)
    arms_l = compute_arms(rng.random((7, 7)), 0.5, 5)
    arms_r = compute_arms(rng.random((7, 7)), 0.5, 5)
    cost = _with_sentinels(rng.random((7, 7, 3)))
    out = aggregate(cost, arms_l, arms_r, iterations)
    for d in range(3):
        valid = cost[:, :, d] != INVALID_COST
        lo, hi = cost[:, :, d][valid].min(), cost[:, :, d][valid].max()
        assert np.all(out[:, :, d][valid] >= lo - 1e-6)
        assert np.all(out[:, :, d][valid] <= hi + 1e-6)
        assert np.all(out[:, :, d][~valid] == INVALID_COST)
