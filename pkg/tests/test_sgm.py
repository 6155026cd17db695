import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cnnstereo.costs import INVALID_COST
from cnnstereo.sgm import DIRECTIONS, SgmParams, penalties, semiglobal, sweep_direction

from oracles import scanline_energy_bruteforce, sgm_sweep_reference

PARAMS = SgmParams(P1=1.0, P2=8.0, Q1=2.0, Q2=4.0, V=2.0, D=0.3)
# dyadic penalties keep every sum exact, so ties are real ties
DYADIC = SgmParams(P1=2.0, P2=8.0, Q1=2.0, Q2=4.0, V=2.0, D=0.5)


def test_params_validation():
    with pytest.raises(ValueError):
        SgmParams(P1=3, P2=2, Q1=2, Q2=4, V=2, D=0.1)
    with pytest.raises(ValueError):
        SgmParams(P1=1, P2=2, Q1=1, Q2=4, V=2, D=0.1)
    with pytest.raises(ValueError):
        SgmParams(P1=1, P2=2, Q1=3, Q2=2, V=2, D=0.1)


def test_penalty_rules():
    assert penalties(0, 0, PARAMS, (1, 0)) == (1.0, 8.0)
    assert penalties(0.5, 0.5, PARAMS, (1, 0)) == (0.25, 2.0)
    assert penalties(0.5, 0.0, PARAMS, (1, 0)) == (0.5, 4.0)
    assert penalties(0.0, 0.5, PARAMS, (-1, 0)) == (0.5, 4.0)
    assert penalties(0.5, 0.0, PARAMS, (0, 1)) == (0.25, 4.0)
    assert penalties(0.0, 0.0, PARAMS, (0, -1)) == (0.5, 8.0)
    # the threshold itself counts as a strong gradient
    assert penalties(0.3, 0.3, PARAMS, (1, 0)) == (0.25, 2.0)


def test_zero_volume_fixed_point():
    rng = np.random.default_rng(0)
    left, right = rng.random((5, 6)), rng.random((5, 6))
    zero = np.zeros((5, 6, 4), np.float32)
    for r in DIRECTIONS:
        np.testing.assert_array_equal(sweep_direction(zero, left, right, r, PARAMS), 0)
    np.testing.assert_array_equal(semiglobal(zero, left, right, PARAMS), 0)


def test_hand_scanline():
    cost = np.array([[[2, 0, 1], [0, 3, 1], [1, 1, 0], [4, 0, 2]]], np.float32)
    flat = np.zeros((1, 4))
    params = SgmParams(P1=1, P2=3, Q1=2, Q2=4, V=2, D=0.5)
    # x1: d0 1+0, d1 3+0, d2 1+1 (minus previous min 0)
    # x2: d0 1+1-1, d1 1+2-1, d2 0+2-1
    # x3: d0 4+1-1, d1 0+2-1, d2 2+1-1
    expected = [[2, 0, 1], [1, 3, 2], [1, 2, 1], [4, 1, 2]]
    np.testing.assert_array_equal(sweep_direction(cost, flat, flat, (1, 0), params)[0], expected)


def test_single_pixel_sweeps_agree():
    cost = np.array([[[0.3, 0.1, 0.7]]], np.float32)
    img = np.zeros((1, 1))
    sweeps = [sweep_direction(cost, img, img, r, PARAMS) for r in DIRECTIONS]
    for s in sweeps:
        np.testing.assert_array_equal(s, sweeps[0])
    np.testing.assert_array_equal(semiglobal(cost, img, img, PARAMS), sweeps[0])


def _random_instance(rng, h, w, dmax):
    left = rng.random((h, w)).astype(np.float32)
    right = rng.random((h, w)).astype(np.float32)
    cost = rng.random((h, w, dmax)).astype(np.float32)
    for d in range(dmax):
        cost[:, :d, d] = INVALID_COST
    return cost, left, right


@pytest.mark.parametrize("seed", range(4))
def test_matches_reference_sweeps(seed):
    rng = np.random.default_rng(seed)
    cost, left, right = _random_instance(rng, 6, 4, 3)
    refs = []
    for r in DIRECTIONS:
        ref = sgm_sweep_reference(cost, left, right, PARAMS, r)
        got = sweep_direction(cost, left, right, r, PARAMS)
        np.testing.assert_allclose(got, ref, atol=1e-5)
        refs.append(ref)
    mean = sum(refs) / 4
    mean[cost == INVALID_COST] = INVALID_COST
    np.testing.assert_allclose(semiglobal(cost, left, right, PARAMS), mean, atol=1e-5)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_sentinels_propagate_and_rest_finite(seed):
    rng = np.random.default_rng(seed)
    cost, left, right = _random_instance(rng, 5, 7, 4)
    out = semiglobal(cost, left, right, PARAMS)
    invalid = cost == INVALID_COST
    assert np.all(out[invalid] == INVALID_COST)
    assert np.all(np.isfinite(out[~invalid])) and np.all(out[~invalid] < 1e6)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 6), st.integers(2, 4))
def test_final_pixel_argmin_is_energy_minimizer(seed, n, dmax):
    rng = np.random.default_rng(seed)
    cost = rng.integers(0, 12, size=(1, n, dmax)).astype(np.float32)
    for d in range(dmax):
        cost[:, :d, d] = INVALID_COST
    left = rng.choice([0.0, 0.5, 1.0], size=(1, n)).astype(np.float32)
    right = rng.choice([0.0, 0.5, 1.0], size=(1, n)).astype(np.float32)
    swept = sweep_direction(cost, left, right, (1, 0), DYADIC)[0, -1]
    best, _ = scanline_energy_bruteforce(cost[0], left[0], right[0], DYADIC)
    valid = cost[0, -1] != INVALID_COST
    # the swept cost equals the minimum energy up to one constant
    offset = swept[valid] - np.array(best)[valid]
    assert np.all(offset == offset[0])
    assert int(np.argmin(np.where(valid, swept, np.inf))) == int(np.argmin(best))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(-50, 50), st.sampled_from(DIRECTIONS))
def test_column_offset_keeps_argmin(seed, c, direction):
    rng = np.random.default_rng(seed)
    cost = rng.integers(0, 20, size=(4, 5, 3)).astype(np.float32)
    flat = np.zeros((4, 5))
    y, x = int(rng.integers(0, 4)), int(rng.integers(0, 5))
    shifted = cost.copy()
    shifted[y, x] += c
    a = sweep_direction(cost, flat, flat, direction, DYADIC)
    b = sweep_direction(shifted, flat, flat, direction, DYADIC)
    np.testing.assert_array_equal(np.argmin(a, axis=2), np.argmin(b, axis=2))
    np.testing.assert_array_equal(b[y, x] - a[y, x], np.full(3, c, np.float32))


def test_direction_and_shape_errors():
    cost = np.zeros((2, 3, 2), np.float32)
    img = np.zeros((2, 3))
    with pytest.raises(ValueError):
        sweep_direction(cost, img, img, (1, 1), PARAMS)
    with pytest.raises(ValueError):
        sweep_direction(cost, np.zeros((3, 3)), img, (1, 0), PARAMS)
