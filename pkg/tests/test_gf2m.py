"""Тесты арифметики GF(2^m)."""

import numpy as np
import pytest

from processors.errors import InvalidInputError
from processors.gf2m import (
    IRREDUCIBLE_POLYNOMIALS,
    gf_mul,
    gf_mul_array,
    gf_pow,
    is_irreducible,
    modulus_for,
    parity_array,
)


@pytest.mark.parametrize("m", sorted(IRREDUCIBLE_POLYNOMIALS))
def test_table_polynomials_are_irreducible(m):
    poly = IRREDUCIBLE_POLYNOMIALS[m]
    assert poly.bit_length() - 1 == m
    assert is_irreducible(poly)


@pytest.mark.parametrize("poly", [0b100, 0b101, 0b10101, 0b1111])
def test_reducible_polynomials_rejected(poly):
    # x^2, x^2+1, (x^2+x+1)^2, (x+1)^3
    assert not is_irreducible(poly)


def test_mul_reduces_by_modulus():
    assert gf_mul(0x80, 2, 8, 0x11D) == 0x1D
    assert gf_mul(0, 0x57, 8, 0x11D) == 0
    assert gf_mul(1, 0x57, 8, 0x11D) == 0x57


@pytest.mark.parametrize("m", [2, 3, 5, 8, 13])
def test_multiplicative_group_order(m):
    modulus = modulus_for(m)
    for a in range(1, min(1 << m, 64)):
        assert gf_pow(a, (1 << m) - 1, m, modulus) == 1


def test_mul_is_commutative():
    modulus = modulus_for(7)
    for a in range(0, 128, 5):
        for b in range(0, 128, 7):
            assert gf_mul(a, b, 7, modulus) == gf_mul(b, a, 7, modulus)


def test_mul_array_matches_scalar():
    m = 12
    modulus = modulus_for(m)
    rng = np.random.default_rng(7)
    a = rng.integers(0, 1 << m, size=200, dtype=np.uint64)
    b = rng.integers(0, 1 << m, size=200, dtype=np.uint64)
    expected = [gf_mul(int(x), int(y), m, modulus) for x, y in zip(a, b)]
    assert gf_mul_array(a, b, m, modulus).tolist() == expected


def test_parity_array():
    values = np.array([0, 1, 3, 7, 0xFFFF, 2 ** 40 + 1, 2 ** 63], dtype=np.uint64)
    expected = [bin(int(v)).count("1") & 1 for v in values]
    assert parity_array(values).tolist() == expected


def test_unknown_degree():
    with pytest.raises(InvalidInputError):
        modulus_for(40)
