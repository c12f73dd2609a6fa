import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from homlab.medium import (
    coefficient_at,
    constant,
    hash_cells,
    iid_cells,
    laminate,
    mixture,
    sample_medium,
    shift,
    window,
)

ints = st.integers(-10**6, 10**6)


def test_hash_is_deterministic_and_in_unit_interval():
    cells = np.arange(-500, 500).reshape(-1, 2)
    u = hash_cells(7, cells)
    assert np.array_equal(u, hash_cells(7, cells))
    assert u.min() >= 0.0 and u.max() < 1.0
    assert not np.array_equal(u, hash_cells(8, cells))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31), ints, ints, ints, ints)
def test_shift_is_translation(seed, zx, zy, ax, ay):
    f = sample_medium(iid_cells((1, 3)), seed)
    z = np.array([[zx, zy]])
    assert f.values(z + [ax, ay])[0] == shift(f, (ax, ay)).values(z)[0]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), ints, ints, ints, ints)
def test_shift_group_law(seed, ax, ay, bx, by):
    f = sample_medium(mixture(iid_cells((1, 2)), laminate()), seed)
    block = window(shift(shift(f, (ax, ay)), (bx, by)), (5, 5))
    assert np.array_equal(block, window(shift(f, (ax + bx, ay + by)), (5, 5)))


def test_iid_frequency_within_clt_band():
    f = sample_medium(iid_cells((1.0, 3.0), prob=0.3), 11)
    vals = window(f, (200, 200))
    n = vals.size
    freq = np.mean(vals == 1.0)
    assert abs(freq - 0.3) <= 4 * np.sqrt(0.3 * 0.7 / n)


def test_laminate_pattern():
    f = sample_medium(laminate(axis=0, period=2, values=(1.0, 4.0)), 0)
    assert window(f, (4, 2), (-2, 0)).tolist() == [[1.0, 1.0], [4.0, 4.0], [1.0, 1.0], [4.0, 4.0]]


def test_mixture_picks_one_component_per_seed():
    kind = mixture(constant(1.0), constant(3.0))
    seen = set()
    for s in range(40):
        vals = np.unique(window(sample_medium(kind, s), (8, 8)))
        assert len(vals) == 1
        seen.add(float(vals[0]))
    assert seen == {1.0, 3.0}
    assert not kind.ergodic and iid_cells().ergodic


def test_shift_does_not_move_the_mixture_coin():
    kind = mixture(constant(1.0), constant(3.0))
    f = sample_medium(kind, 5)
    assert coefficient_at(f, (0, 0)) == coefficient_at(shift(f, (1000, -7)), (0, 0))


def test_value_range_and_mean():
    assert iid_cells((1, 4), prob=0.5).mean() == 2.5
    assert mixture(constant(1), constant(3)).value_range() == (1.0, 3.0)


def test_large_coordinates_rejected():
    f = sample_medium(constant(1), 0)
    with pytest.raises(OverflowError):
        f.values(np.array([[2**31, 0]]))


@pytest.mark.parametrize("factory", [
    lambda: iid_cells((1, 2), probs=(0.5, 0.6)),
    lambda: laminate(period=3, values=(1, 2)),
    lambda: iid_cells((1, 2, 3)),
])
def test_invalid_kinds(factory):
    with pytest.raises(ValueError):
        factory()
