"""Тесты пространств с малым смещением и 4-wise почти независимых последовательностей."""

from itertools import combinations

import numpy as np
import pytest

from processors.covering import iter_four_subsets
from processors.errors import InvalidInputError
from processors.small_bias import (
    ExplicitSpace,
    KwiseLinearMap,
    KwiseSequenceSpace,
    SmallBiasSpace,
    four_subsets_independent,
    marginal_distance,
    realizes_all_patterns,
    rows_independent,
)


def test_field_degree_for_bias():
    assert SmallBiasSpace.for_bias(17, 1 / 256).m == 12
    assert KwiseSequenceSpace(2, 1 / 16).seed_space.m == 10
    assert KwiseSequenceSpace(4, 1 / 16).seed_space.m == 11
    assert KwiseSequenceSpace(8, 1 / 16).seed_space.m == 12
    assert KwiseSequenceSpace(2, 0.9).seed_space.m == 7


def test_parity_bias_within_bound():
    space = SmallBiasSpace(ell=5, m=4)
    for size in range(1, 6):
        for positions in combinations(range(5), size):
            assert space.parity_bias(positions) <= space.bias_bound


def test_bits_match_powers_table():
    space = SmallBiasSpace(ell=6, m=5)
    table = space.powers_table()
    for x in (0, 1, 7, 30):
        for y in (0, 5, 31):
            bits = space.bits(x, y)
            for j in range(space.ell):
                expected = bin(int(table[x, j]) & y).count("1") & 1
                assert bits >> j & 1 == expected


@pytest.mark.parametrize(
    "n",
    [2, 3, 4, pytest.param(5, marks=pytest.mark.slow), pytest.param(6, marks=pytest.mark.slow)],
)
def test_any_four_rows_independent(n):
    linear_map = KwiseLinearMap(n)
    rows = linear_map.rows(np.arange(1 << n))
    for subsets in iter_four_subsets(n):
        assert four_subsets_independent(rows, subsets).all()
    assert [int(r) for r in rows[:4]] == [linear_map.row(i) for i in range(4)]


def test_rows_independent_detects_dependency():
    assert rows_independent([0b001, 0b010, 0b100])
    assert not rows_independent([0b011, 0b101, 0b110])


def test_marginal_matches_enumeration():
    space = KwiseSequenceSpace(2, 0.9)
    subset = (0, 1, 2, 3)
    counts = np.zeros(16)
    indices = np.array(subset, dtype=np.int64)
    size = space.seed_space.field_size
    for x in range(size):
        for y in range(size):
            bits = space.values(space.seed_bits(x, y), indices)
            counts[int(sum(int(b) << t for t, b in enumerate(bits)))] += 1
    np.testing.assert_allclose(space.marginal(subset), counts / space.size, atol=1e-12)


def test_marginal_distance_within_delta():
    delta = 1 / 16
    space = KwiseSequenceSpace(4, delta)
    for subset in [(0,), (3, 9), (1, 2, 15), (0, 5, 10, 15), (4, 6, 7, 12), (0, 1, 2, 3)]:
        report = marginal_distance(space, subset)
        assert report.l1_distance <= delta
        assert realizes_all_patterns(space, subset)


@pytest.mark.parametrize("n", [2, 3, pytest.param(4, marks=pytest.mark.slow)])
def test_every_small_subset_close_to_uniform(n):
    delta = 1 / 16
    space = KwiseSequenceSpace(n, delta)
    worst = 0.0
    for size in range(1, 5):
        for subset in combinations(range(space.length), size):
            worst = max(worst, marginal_distance(space, subset).l1_distance)
    assert worst <= delta


@pytest.mark.parametrize("n", [2, 3, pytest.param(4, marks=pytest.mark.slow)])
def test_every_four_subset_realizes_all_symbols(n):
    # Символ 2 X + Y, где X и Y из независимых копий пространства
    space = KwiseSequenceSpace(n, 1 / 16)
    for subset in combinations(range(space.length), 4):
        assert realizes_all_patterns(space, subset)


def test_explicit_space_point_mass():
    space = ExplicitSpace(points=((0, 0, 0, 0),))
    assert marginal_distance(space, (0, 1, 2, 3)).l1_distance == pytest.approx(1.875)
    assert not realizes_all_patterns(space, (0, 1))


def test_explicit_space_full_cube_is_uniform():
    points = tuple(tuple(v >> t & 1 for t in range(4)) for v in range(16))
    space = ExplicitSpace(points=points)
    assert marginal_distance(space, (0, 1, 2, 3)).l1_distance == pytest.approx(0.0)


@pytest.mark.parametrize("subset", [(0, 0), (0, 1, 2, 3, 4), (16,)])
def test_bad_subsets_rejected(subset):
    with pytest.raises(InvalidInputError):
        KwiseSequenceSpace(4, 1 / 16).marginal(subset)


def test_delta_range():
    with pytest.raises(InvalidInputError):
        KwiseSequenceSpace(4, 0.0)
    with pytest.raises(InvalidInputError):
        SmallBiasSpace.for_bias(9, 1.5)
