"""Арифметика в полях GF(2^m) с фиксированными неприводимыми многочленами.

Элементы поля - целые числа, бит i соответствует коэффициенту при x^i.
Таблица многочленов приведена в docs/gf2m_polynomials.md.
"""

from typing import Dict

import numpy as np

from processors.errors import InvalidInputError

# Примитивные многочлены (стандартные таблицы LFSR), старший бит включен
IRREDUCIBLE_POLYNOMIALS: Dict[int, int] = {
    1: 0x3,
    2: 0x7,
    3: 0xB,
    4: 0x13,
    5: 0x25,
    6: 0x43,
    7: 0x83,
    8: 0x11D,
    9: 0x211,
    10: 0x409,
    11: 0x805,
    12: 0x1053,
    13: 0x201B,
    14: 0x4443,
    15: 0x8003,
    16: 0x1100B,
    17: 0x20009,
    18: 0x40081,
    19: 0x80027,
    20: 0x100009,
    21: 0x200005,
    22: 0x400003,
    23: 0x800021,
    24: 0x1000087,
    25: 0x2000009,
    26: 0x4000047,
    27: 0x8000027,
    28: 0x10000009,
    29: 0x20000005,
    30: 0x40800007,
    31: 0x80000009,
}

MAX_DEGREE = max(IRREDUCIBLE_POLYNOMIALS)


def modulus_for(m: int) -> int:
    """
    Неприводимый многочлен степени m из таблицы.

    Args:
        m: Степень расширения поля

    Returns:
        Многочлен в виде целого числа
    """
    if m not in IRREDUCIBLE_POLYNOMIALS:
        raise InvalidInputError(f"Степень поля {m} вне таблицы (1..{MAX_DEGREE})")
    return IRREDUCIBLE_POLYNOMIALS[m]


def gf_mul(a: int, b: int, m: int, modulus: int) -> int:
    """Умножение двух элементов GF(2^m)."""
    result = 0
    top = 1 << m
    while b:
        if b & 1:
            result ^= a
        b >>= 1
        a <<= 1
        if a & top:
            a ^= modulus
    return result


def gf_pow(a: int, e: int, m: int, modulus: int) -> int:
    """Возведение в степень в GF(2^m); 0^0 = 1."""
    result = 1
    base = a
    while e:
        if e & 1:
            result = gf_mul(result, base, m, modulus)
        base = gf_mul(base, base, m, modulus)
        e >>= 1
    return result


def gf_mul_array(a: np.ndarray, b: np.ndarray, m: int, modulus: int) -> np.ndarray:
    """
    Поэлементное умножение массивов элементов GF(2^m) (m <= 31).

    Args:
        a: Массив uint64
        b: Массив uint64 (или скаляр)
        m: Степень поля
        modulus: Неприводимый многочлен

    Returns:
        Массив произведений
    """
    a = np.array(a, dtype=np.uint64, copy=True)
    b = np.broadcast_to(np.asarray(b, dtype=np.uint64), a.shape)
    result = np.zeros(a.shape, dtype=np.uint64)
    top = np.uint64(1 << m)
    reduction = np.uint64(modulus)
    one = np.uint64(1)
    for bit in range(m):
        mask = ((b >> np.uint64(bit)) & one).astype(bool)
        result[mask] ^= a[mask]
        a <<= one
        overflow = (a & top).astype(bool)
        a[overflow] ^= reduction
    return result


def parity_array(values: np.ndarray) -> np.ndarray:
    """Четность числа единичных битов каждого элемента uint64."""
    v = np.array(values, dtype=np.uint64, copy=True)
    for shift in (32, 16, 8, 4, 2, 1):
        v ^= v >> np.uint64(shift)
    return (v & np.uint64(1)).astype(np.uint8)


def _poly_mod(a: int, b: int) -> int:
    db = b.bit_length() - 1
    while a and a.bit_length() - 1 >= db:
        a ^= b << (a.bit_length() - 1 - db)
    return a


def _poly_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, _poly_mod(a, b)
    return a


def is_irreducible(poly: int) -> bool:
    """
    Тест неприводимости Бен-Ора над GF(2).

    Args:
        poly: Многочлен в виде целого числа

    Returns:
        True, если многочлен неприводим
    """
    m = poly.bit_length() - 1
    if m < 1:
        return False
    x_power = 0b10
    for _ in range(m // 2):
        # x^(2^i) mod poly
        x_power = gf_mul(x_power, x_power, m, poly)
        if _poly_gcd(poly, x_power ^ 0b10) != 1:
            return False
    return True
