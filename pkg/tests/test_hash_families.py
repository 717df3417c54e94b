"""Тесты семейств хеш-функций."""

from itertools import product

import numpy as np
import pytest

from processors.errors import InvalidInputError
from processors.gf2m import gf_mul
from processors.hash_families import (
    KIND_DERANDOMIZED,
    TableHash,
    build_derandomized_family,
    build_full_family,
    build_matrix_family,
    build_table_family,
    eval_hash,
    family_from_json,
    family_to_json,
    seed_bits_of,
    select_members,
)


def test_table_hash_lookup():
    h = TableHash(n=2, values=(0, 1, 2, 3))
    assert eval_hash(h, 2) == 2
    with pytest.raises(InvalidInputError):
        eval_hash(h, 4)


def test_table_hash_validation():
    with pytest.raises(InvalidInputError):
        TableHash(n=2, values=(0, 1, 2))
    with pytest.raises(InvalidInputError):
        TableHash(n=1, values=(0, 4))


def test_zero_seed_is_constant():
    family = build_derandomized_family(4, 1 / 16)
    assert family.members[0].table().tolist() == [0] * 16


def test_family_size_and_seed_index():
    family = build_derandomized_family(8, 1 / 16)
    assert family.kind == KIND_DERANDOMIZED
    assert family.space.seed_space.m == 12
    assert family.m_count == 2 ** 48
    assert seed_bits_of(family) == 48
    index = 0x0123456789AB
    assert family.members[index].seed_index == index


@pytest.mark.parametrize("delta", [1 / 8, 0.2, 0.0])
def test_delta_outside_covering_range(delta):
    with pytest.raises(InvalidInputError):
        build_derandomized_family(4, delta)


def _reference_value(space, x_seed, y_seed, x):
    """Значение X_x по полной последовательности бит пространства степеней."""
    n = space.n
    modulus = space.linear_map.modulus
    cube = gf_mul(gf_mul(x, x, n, modulus), x, n, modulus)
    row = 1 | x << 1 | cube << (n + 1)
    seed_space = space.seed_space
    power, bit = 1, 0
    for j in range(seed_space.ell):
        s_j = bin(power & y_seed).count("1") & 1
        bit ^= (row >> j & 1) & s_j
        power = gf_mul(power, x_seed, seed_space.m, seed_space.modulus)
    return bit


def test_derandomized_member_matches_reference():
    family = build_derandomized_family(4, 1 / 16)
    h = family.members[0x2F1C0A91B57]
    xs = np.arange(16)
    many = h.evaluate_many(xs).tolist()
    for x in range(16):
        hi = _reference_value(family.space, h.x_hi, h.y_hi, x)
        lo = _reference_value(family.space, h.x_lo, h.y_lo, x)
        assert h.evaluate(x) == 2 * hi + lo
        assert many[x] == 2 * hi + lo


def test_matrix_family_digits():
    family = build_matrix_family(4, range(16), n=4)
    assert family.m_count == 2
    first, second = (member.table().tolist() for member in family.members)
    assert first == [i // 4 for i in range(16)]
    assert second == [i % 4 for i in range(16)]


def test_matrix_family_joint_output_uniform():
    support = [3 * i + 1 for i in range(64)]
    family = build_matrix_family(6, support, n=8)
    joint = {tuple(h.evaluate(s) for h in family.members) for s in support}
    assert joint == set(product(range(4), repeat=3))


def test_matrix_family_rejects_bad_support():
    with pytest.raises(InvalidInputError):
        build_matrix_family(4, range(15))
    with pytest.raises(InvalidInputError):
        build_matrix_family(3, range(8))


def test_full_family_limits():
    family = build_full_family(2)
    assert family.m_count == 256
    assert family.members[0].table().tolist() == [0, 0, 0, 0]
    assert family.members[255].table().tolist() == [3, 3, 3, 3]
    with pytest.raises(InvalidInputError):
        build_full_family(4)


def test_selected_members_serialize():
    family = build_derandomized_family(3, 1 / 16)
    subfamily = select_members(family, [5, 77, 4096])
    restored = family_from_json(family_to_json(subfamily))
    assert restored.m_count == 3
    assert not restored.lazy
    assert [h.seed_index for h in restored.members] == [5, 77, 4096]
    for original, copy in zip(subfamily.members, restored.members):
        assert original.table().tolist() == copy.table().tolist()


def test_table_family_serialize():
    family = build_table_family(2, [[0, 1, 2, 3], [3, 3, 0, 1]])
    payload = family_to_json(family)
    assert payload["members"] == [{"table": "0123"}, {"table": "3301"}]
    assert family_from_json(payload).members[1].values == (3, 3, 0, 1)


def test_unknown_family_kind():
    with pytest.raises(InvalidInputError):
        family_from_json({"kind": "mystery", "n": 2})


def test_bad_hex_seed_rejected():
    payload = family_to_json(select_members(build_derandomized_family(2, 1 / 16), [3]))
    payload["members"][0]["x_hi"] = "zz"
    with pytest.raises(InvalidInputError):
        family_from_json(payload)
