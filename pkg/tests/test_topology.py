import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magimage import BettiCurve, betti_curve, betti_norm, betti_numbers
from magimage.topology import count_components, euler_characteristic


def test_empty_mask():
    assert betti_numbers(np.zeros((5, 5), dtype=bool)) == (0, 0)


def test_single_square():
    m = np.zeros((5, 5), dtype=bool)
    m[2, 2] = True
    assert betti_numbers(m) == (1, 0)
    assert euler_characteristic(m) == 1


def test_ring_has_one_cycle():
    m = np.zeros((8, 8), dtype=bool)
    m[2:6, 2:6] = True
    m[3:5, 3:5] = False
    assert betti_numbers(m) == (1, 1)
    assert euler_characteristic(m) == 0


def test_two_disjoint_squares():
    m = np.zeros((8, 8), dtype=bool)
    m[1:3, 1:3] = True
    m[5:7, 5:7] = True
    assert betti_numbers(m) == (2, 0)


def test_diagonal_touch_is_connected():
    m = np.zeros((4, 4), dtype=bool)
    m[0, 0] = m[1, 1] = True
    assert count_components(m, connectivity=8) == 1
    assert count_components(m, connectivity=4) == 2
    # closed squares touching at a corner: one component, no hole
    assert betti_numbers(m) == (1, 0)
    assert euler_characteristic(m) == 1


def test_full_frame_cycle():
    m = np.ones((6, 6), dtype=bool)
    m[1:5, 1:5] = False
    assert betti_numbers(m) == (1, 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(3, 9), st.integers(3, 9),
       st.floats(0.2, 0.8))
def test_euler_oracle_matches_union_find(seed, h, w, density):
    mask = np.random.default_rng(seed).uniform(0, 1, (h, w)) < density
    b0, b1 = betti_numbers(mask)
    assert b0 - b1 == euler_characteristic(mask)


# ---------------- curves ----------------

def test_zero_map_curve_is_zero():
    c = betti_curve(np.zeros((6, 6)), levels=16)
    assert c.betti0.sum() == 0 and c.betti1.sum() == 0


def test_ring_curve_constant():
    v = np.zeros((8, 8))
    v[2:6, 2:6] = 1.0
    v[3:5, 3:5] = 0.0
    c = betti_curve(v, levels=8)
    assert np.all(c.betti0 == 1) and np.all(c.betti1 == 1)


def test_threshold_sweep_monotone_foreground(rng):
    v = rng.uniform(0, 1, (10, 10))
    c = betti_curve(v, levels=10)
    sizes = [(v >= t).sum() for t in c.thresholds]
    assert all(a >= b for a, b in zip(sizes, sizes[1:]))


def test_levels_validation():
    with pytest.raises(ValueError):
        betti_curve(np.zeros((4, 4)), levels=1)


def test_curve_validation():
    with pytest.raises(ValueError):
        BettiCurve(np.array([0.5, 0.2]), np.array([1, 1]), np.array([0, 0]))
    with pytest.raises(ValueError):
        BettiCurve(np.array([0.2, 0.5]), np.array([1, -1]), np.array([0, 0]))


def test_norm_values():
    c = BettiCurve(np.linspace(0.1, 1.0, 10), np.full(10, 3), np.zeros(10, dtype=int))
    n0, n1 = betti_norm(c)
    assert n0 == pytest.approx(3.0)
    assert n1 == 0.0


def test_norm_zero_curve():
    c = betti_curve(np.zeros((4, 4)), levels=4)
    assert betti_norm(c) == (0.0, 0.0)
