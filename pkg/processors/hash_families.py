"""Семейства хеш-функций h: {0..N-1} -> {0,1,2,3} для входов устройств Мермина."""

from collections.abc import Sequence as SequenceABC
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from logger import get_logger
from processors.errors import InvalidInputError
from processors.small_bias import KwiseSequenceSpace

logger = get_logger("hash_families")

SYMBOLS = 4
# Предел для полного семейства H_full (4^N функций)
FULL_FAMILY_MAX_N = 3
COVERING_DELTA_LIMIT = 2.0 ** -3

KIND_DERANDOMIZED = "derandomized"
KIND_MATRIX = "matrix"
KIND_TABLE = "explicit-table"
KIND_FULL = "full"


class HashFunctionDescriptor:
    """Базовый класс компактного описания хеш-функции."""

    kind: str = ""
    n: int

    def evaluate(self, x: int) -> int:
        raise NotImplementedError

    def evaluate_many(self, xs: np.ndarray) -> np.ndarray:
        """Значения на массиве входов (uint8)."""
        return np.fromiter((self.evaluate(int(x)) for x in np.ravel(xs)), dtype=np.uint8).reshape(np.shape(xs))

    def table(self) -> np.ndarray:
        """Полная таблица значений на {0..N-1}."""
        return self.evaluate_many(np.arange(1 << self.n, dtype=np.int64))

    def to_json(self) -> Dict:
        raise NotImplementedError


@dataclass(frozen=True)
class TableHash(HashFunctionDescriptor):
    """Функция, заданная явной таблицей из N символов."""

    n: int
    values: Tuple[int, ...]
    kind: str = field(default=KIND_TABLE, init=False)

    def __post_init__(self) -> None:
        if len(self.values) != 1 << self.n:
            raise InvalidInputError(f"Таблица должна содержать 2^{self.n} значений, получено {len(self.values)}")
        if any(v not in (0, 1, 2, 3) for v in self.values):
            raise InvalidInputError("Значения таблицы должны лежать в {0,1,2,3}")

    def evaluate(self, x: int) -> int:
        return self.values[x]

    def evaluate_many(self, xs: np.ndarray) -> np.ndarray:
        return np.asarray(self.values, dtype=np.uint8)[np.asarray(xs, dtype=np.int64)]

    def to_json(self) -> Dict:
        return {"table": "".join(str(v) for v in self.values)}


@dataclass(frozen=True)
class MatrixHash(HashFunctionDescriptor):
    """
    Строка j матрицы M: h_j(s_i) = j-я (от старшей) цифра i в системе по основанию 4.

    Строки вне носителя отображаются в 0 (их вероятность равна 0).
    """

    n: int
    row: int
    digits: int
    support: Tuple[int, ...]
    kind: str = field(default=KIND_MATRIX, init=False)
    _positions: Dict[int, int] = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        if not 0 <= self.row < self.digits:
            raise InvalidInputError(f"Номер строки {self.row} вне диапазона 0..{self.digits - 1}")
        object.__setattr__(self, "_positions", {s: i for i, s in enumerate(self.support)})

    def evaluate(self, x: int) -> int:
        position = self._positions.get(x)
        if position is None:
            return 0
        return (position // SYMBOLS ** (self.digits - 1 - self.row)) % SYMBOLS

    def to_json(self) -> Dict:
        return {"row": self.row}


@dataclass(frozen=True)
class DerandomizedHash(HashFunctionDescriptor):
    """
    Z_x = 2 X_x + Y_x, где X и Y - две независимые 4-wise delta-зависимые
    последовательности с точками выборки (x_hi, y_hi) и (x_lo, y_lo).
    """

    space: KwiseSequenceSpace
    x_hi: int
    y_hi: int
    x_lo: int
    y_lo: int
    kind: str = field(default=KIND_DERANDOMIZED, init=False)
    _bits: Tuple[int, int] = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        hi = self.space.seed_bits(self.x_hi, self.y_hi)
        lo = self.space.seed_bits(self.x_lo, self.y_lo)
        object.__setattr__(self, "_bits", (hi, lo))

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def seed_index(self) -> int:
        m = self.space.seed_space.m
        return self.x_hi | self.y_hi << m | self.x_lo << 2 * m | self.y_lo << 3 * m

    def evaluate(self, x: int) -> int:
        row = self.space.linear_map.row(x)
        hi, lo = self._bits
        return 2 * (bin(row & hi).count("1") & 1) + (bin(row & lo).count("1") & 1)

    def evaluate_many(self, xs: np.ndarray) -> np.ndarray:
        hi, lo = self._bits
        high = self.space.values(hi, xs)
        low = self.space.values(lo, xs)
        return (2 * high + low).astype(np.uint8)

    def to_json(self) -> Dict:
        return {
            "x_hi": hex(self.x_hi),
            "y_hi": hex(self.y_hi),
            "x_lo": hex(self.x_lo),
            "y_lo": hex(self.y_lo),
        }


class LazyMembers(SequenceABC):
    """Ленивая последовательность членов семейства: член строится по индексу."""

    def __init__(self, count: int, factory: Callable[[int], HashFunctionDescriptor]):
        self._count = count
        self._factory = factory

    def __len__(self) -> int:
        return self._count

    def __getitem__(self, index):
        if isinstance(index, slice):
            return [self[i] for i in range(*index.indices(self._count))]
        if index < 0:
            index += self._count
        if not 0 <= index < self._count:
            raise IndexError(index)
        return self._factory(index)


@dataclass(frozen=True)
class HashFamily:
    """Семейство H = {h_1..h_m}; m_count = |members|."""

    n: int
    kind: str
    members: Sequence[HashFunctionDescriptor]
    space: Optional[KwiseSequenceSpace] = None
    lazy: bool = False

    def __post_init__(self) -> None:
        if not self.lazy:
            for member in self.members:
                if member.n != self.n:
                    raise InvalidInputError("Все члены семейства должны иметь одинаковое n")

    @property
    def m_count(self) -> int:
        return len(self.members)


def eval_hash(h: HashFunctionDescriptor, x: int) -> int:
    """
    Значение хеш-функции на n-битной строке.

    Args:
        h: Описание функции
        x: Вход, 0 <= x < 2^n

    Returns:
        Символ из {0,1,2,3}
    """
    if not 0 <= x < (1 << h.n):
        raise InvalidInputError(f"Вход {x} вне диапазона 0..2^{h.n}-1")
    return h.evaluate(x)


def build_derandomized_family(n: int, delta: float) -> HashFamily:
    """
    Дерандомизированное семейство: по члену на каждую пару точек выборки.

    Args:
        n: Длина входа в битах (2..31)
        delta: Параметр зависимости, 0 < delta < 1/8

    Returns:
        Ленивое семейство размера 2^(4m)
    """
    if not 0 < delta < COVERING_DELTA_LIMIT:
        raise InvalidInputError(f"delta должна лежать в (0, 1/8), иначе покрытие не гарантировано; получено {delta}")
    if n < 2:
        raise InvalidInputError("Длина входа n должна быть не меньше 2")

    space = KwiseSequenceSpace(n=n, delta=delta)
    m = space.seed_space.m
    mask = (1 << m) - 1

    def factory(index: int) -> DerandomizedHash:
        return DerandomizedHash(
            space=space,
            x_hi=index & mask,
            y_hi=index >> m & mask,
            x_lo=index >> 2 * m & mask,
            y_lo=index >> 3 * m & mask,
        )

    count = 1 << (4 * m)
    logger.info(f"Построено дерандомизированное семейство: n={n}, delta={delta}, m={m}, размер 2^{4 * m}")
    return HashFamily(n=n, kind=KIND_DERANDOMIZED, members=LazyMembers(count, factory), space=space, lazy=True)


def seed_bits_of(family: HashFamily) -> int:
    """Число бит seed члена семейства (log2 размера)."""
    return (family.m_count - 1).bit_length()


def build_matrix_family(rn: int, flat_support: Sequence[int], n: Optional[int] = None) -> HashFamily:
    """
    Матричное семейство для однократного протокола.

    Args:
        rn: Min-энтропия плоского источника (четное положительное)
        flat_support: Упорядоченный носитель s_0..s_{4^(rn/2)-1}
        n: Длина строк (по умолчанию - по максимальному элементу)

    Returns:
        Семейство из rn/2 функций
    """
    if rn <= 0 or rn % 2:
        raise InvalidInputError(f"Rn должно быть четным положительным, получено {rn}")
    digits = rn // 2
    support = tuple(int(s) for s in flat_support)
    if len(support) != SYMBOLS ** digits:
        raise InvalidInputError(f"Размер носителя {len(support)} не равен 4^{digits}")
    if len(set(support)) != len(support):
        raise InvalidInputError("Строки носителя должны быть различны")
    if n is None:
        n = max(rn, max(support).bit_length())
    if any(not 0 <= s < (1 << n) for s in support):
        raise InvalidInputError(f"Строка носителя вне диапазона {n}-битных строк")
    members = [MatrixHash(n=n, row=j, digits=digits, support=support) for j in range(digits)]
    return HashFamily(n=n, kind=KIND_MATRIX, members=members)


def build_full_family(n: int) -> HashFamily:
    """Полное семейство H_full = {0,1,2,3}^N (лениво, n <= 3)."""
    if not 1 <= n <= FULL_FAMILY_MAX_N:
        raise InvalidInputError(f"Полное семейство доступно для n <= {FULL_FAMILY_MAX_N}")
    size = 1 << n

    def factory(index: int) -> TableHash:
        values = tuple((index // SYMBOLS ** position) % SYMBOLS for position in range(size))
        return TableHash(n=n, values=values)

    return HashFamily(n=n, kind=KIND_FULL, members=LazyMembers(SYMBOLS ** size, factory), lazy=True)


def build_table_family(n: int, tables: Sequence[Sequence[int]]) -> HashFamily:
    """Семейство из явных таблиц."""
    members = [TableHash(n=n, values=tuple(int(v) for v in table)) for table in tables]
    return HashFamily(n=n, kind=KIND_TABLE, members=members)


def select_members(family: HashFamily, indices: Sequence[int]) -> HashFamily:
    """
    Явное подсемейство из членов с указанными индексами.

    Args:
        family: Исходное семейство
        indices: Индексы членов (порядок сохраняется)

    Returns:
        Неленивое семейство того же вида
    """
    members: List[HashFunctionDescriptor] = [family.members[i] for i in indices]
    return HashFamily(n=family.n, kind=family.kind, members=members, space=family.space, lazy=False)


def family_to_json(family: HashFamily) -> Dict:
    """
    Сериализация семейства: {"kind", "n", "m_count", "members": [...]}.

    Ленивые семейства сохраняются параметрами построения без списка членов.
    """
    payload: Dict = {"kind": family.kind, "n": family.n, "m_count": family.m_count}
    if family.space is not None:
        payload.update(
            {
                "delta": family.space.delta,
                "field_degree": family.space.seed_space.m,
                "modulus": hex(family.space.seed_space.modulus),
                "index_modulus": hex(family.space.linear_map.modulus),
            }
        )
    if family.kind == KIND_MATRIX and family.members:
        first = family.members[0]
        payload["support"] = [hex(s) for s in first.support]
    payload["lazy"] = family.lazy
    payload["members"] = [] if family.lazy else [member.to_json() for member in family.members]
    return payload


def family_from_json(payload: Dict) -> HashFamily:
    """
    Восстановление семейства из JSON.

    Args:
        payload: Словарь формата family_to_json

    Returns:
        Семейство
    """
    try:
        kind = payload["kind"]
        n = int(payload["n"])
        lazy = bool(payload.get("lazy", False))
        raw_members = payload.get("members", [])

        if kind == KIND_FULL:
            return build_full_family(n)

        if kind == KIND_DERANDOMIZED:
            family = build_derandomized_family(n, float(payload["delta"]))
            if int(payload.get("field_degree", family.space.seed_space.m)) != family.space.seed_space.m:
                raise InvalidInputError("Степень поля в файле не совпадает с вычисленной")
            if lazy:
                return family
            members = [
                DerandomizedHash(
                    space=family.space,
                    x_hi=int(item["x_hi"], 16),
                    y_hi=int(item["y_hi"], 16),
                    x_lo=int(item["x_lo"], 16),
                    y_lo=int(item["y_lo"], 16),
                )
                for item in raw_members
            ]
            return HashFamily(n=n, kind=kind, members=members, space=family.space)

        if kind == KIND_MATRIX:
            support = [int(s, 16) for s in payload["support"]]
            digits = (len(support).bit_length() - 1) // 2
            family = build_matrix_family(2 * digits, support, n=n)
            rows = [int(item["row"]) for item in raw_members]
            return HashFamily(n=n, kind=kind, members=[family.members[j] for j in rows])

        if kind == KIND_TABLE:
            return build_table_family(n, [[int(c) for c in item["table"]] for item in raw_members])
    except InvalidInputError:
        raise
    except (KeyError, TypeError) as e:
        raise InvalidInputError(f"Некорректный файл семейства: отсутствует или неверно поле {e}")
    except ValueError as e:
        raise InvalidInputError(f"Некорректный файл семейства: {e}")

    raise InvalidInputError(f"Неизвестный вид семейства: {payload.get('kind')}")
