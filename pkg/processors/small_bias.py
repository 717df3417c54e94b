"""Пространства с малым смещением и 4-wise почти независимые битовые последовательности.

Конструкция: точка (x, y) из GF(2^m)^2 задает биты s_j = <x^j, y> (степени x),
затем линейное отображение i -> v_i = (1, a_i, a_i^3), a_i из GF(2^n),
дает переменные X_i = <v_i, s>. Любые 4 строки v_i линейно независимы,
поэтому любая непустая четность по <= 4 переменным - это четность битов s
с ненулевым вектором коэффициентов, и ее смещение ограничено смещением
пространства.
"""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence, Tuple

import numpy as np

from logger import get_logger
from processors.errors import InvalidInputError
from processors.gf2m import (
    MAX_DEGREE,
    gf_mul,
    gf_mul_array,
    gf_pow,
    modulus_for,
    parity_array,
)

logger = get_logger("small_bias")

MAX_SUBSET = 4


def _popcount_parity(value: int) -> int:
    return bin(value).count("1") & 1


@dataclass(frozen=True)
class SmallBiasSpace:
    """
    Пространство степеней: ell бит, точка выборки (x, y) из GF(2^m)^2.

    Смещение (корреляционное, |E(-1)^parity|) любой непустой четности
    не превышает (ell - 1) / 2^m.
    """

    ell: int
    m: int
    modulus: int = field(init=False)

    def __post_init__(self) -> None:
        if self.ell < 1:
            raise InvalidInputError("Число генерируемых бит должно быть положительным")
        object.__setattr__(self, "modulus", modulus_for(self.m))

    @classmethod
    def for_bias(cls, ell: int, bias: float) -> "SmallBiasSpace":
        """
        Наименьшее поле, для которого (ell - 1) / 2^m <= bias.

        Args:
            ell: Число генерируемых бит
            bias: Требуемое корреляционное смещение

        Returns:
            Пространство с малым смещением
        """
        if not 0 < bias < 1:
            raise InvalidInputError(f"Смещение должно лежать в (0, 1), получено {bias}")
        m = 1
        while (ell - 1) / 2 ** m > bias:
            m += 1
        if m > MAX_DEGREE:
            raise InvalidInputError(f"Требуемая степень поля {m} превышает {MAX_DEGREE}")
        return cls(ell=ell, m=m)

    @property
    def field_size(self) -> int:
        return 1 << self.m

    @property
    def size(self) -> int:
        """Число точек выборки."""
        return 1 << (2 * self.m)

    @property
    def bias_bound(self) -> float:
        return (self.ell - 1) / self.field_size

    def bits(self, x: int, y: int) -> int:
        """
        Вектор s для точки (x, y), бит j = <x^j, y>.

        Args:
            x: Элемент GF(2^m)
            y: Элемент GF(2^m)

        Returns:
            ell-битное целое
        """
        if not (0 <= x < self.field_size and 0 <= y < self.field_size):
            raise InvalidInputError("Точка выборки вне GF(2^m)")
        result = 0
        power = 1
        for j in range(self.ell):
            result |= _popcount_parity(power & y) << j
            power = gf_mul(power, x, self.m, self.modulus)
        return result

    def powers_table(self) -> np.ndarray:
        """Таблица x^j для всех x из поля, форма (2^m, ell)."""
        xs = np.arange(self.field_size, dtype=np.uint64)
        table = np.empty((self.field_size, self.ell), dtype=np.uint64)
        table[:, 0] = 1
        for j in range(1, self.ell):
            table[:, j] = gf_mul_array(table[:, j - 1], xs, self.m, self.modulus)
        return table

    def parity_bias(self, positions: Sequence[int]) -> float:
        """
        Точное корреляционное смещение четности битов с номерами positions.

        При фиксированном x четность равна <p(x), y>, где p(x) = sum x^j;
        она несмещена по y, если p(x) != 0, и тождественно равна 0 иначе.

        Args:
            positions: Непустой набор номеров бит

        Returns:
            Доля x, для которых p(x) = 0
        """
        positions = sorted(set(positions))
        if not positions or positions[0] < 0 or positions[-1] >= self.ell:
            raise InvalidInputError("Некорректный набор бит для четности")
        table = self.powers_table()
        combined = np.bitwise_xor.reduce(table[:, positions], axis=1)
        return float(np.count_nonzero(combined == 0)) / self.field_size


@dataclass(frozen=True)
class KwiseLinearMap:
    """Отображение индекса i в строку v_i = (1, a_i, a_i^3) длины 2n + 1."""

    n: int
    modulus: int = field(init=False)

    def __post_init__(self) -> None:
        if not 2 <= self.n <= MAX_DEGREE:
            raise InvalidInputError(f"Длина индекса n должна лежать в 2..{MAX_DEGREE}")
        object.__setattr__(self, "modulus", modulus_for(self.n))

    @property
    def ell(self) -> int:
        return 2 * self.n + 1

    def row(self, index: int) -> int:
        if not 0 <= index < (1 << self.n):
            raise InvalidInputError(f"Индекс {index} вне диапазона 0..2^{self.n}-1")
        cube = gf_pow(index, 3, self.n, self.modulus)
        return 1 | (index << 1) | (cube << (self.n + 1))

    def rows(self, indices: np.ndarray) -> np.ndarray:
        alpha = np.asarray(indices, dtype=np.uint64)
        square = gf_mul_array(alpha, alpha, self.n, self.modulus)
        cube = gf_mul_array(square, alpha, self.n, self.modulus)
        return np.uint64(1) | (alpha << np.uint64(1)) | (cube << np.uint64(self.n + 1))


def rows_independent(rows: Sequence[int]) -> bool:
    """Линейная независимость векторов над GF(2): ни одна непустая сумма не равна 0."""
    rows = list(rows)
    for size in range(1, len(rows) + 1):
        for subset in combinations(rows, size):
            acc = 0
            for value in subset:
                acc ^= value
            if acc == 0:
                return False
    return True


def four_subsets_independent(rows: np.ndarray, subsets: np.ndarray) -> np.ndarray:
    """
    Векторизованная проверка независимости для массива 4-подмножеств.

    Args:
        rows: Строки отображения (uint64), индексируемые номерами из subsets
        subsets: Массив формы (k, 4)

    Returns:
        Булев массив длины k
    """
    picked = rows[subsets]
    ok = np.ones(len(subsets), dtype=bool)
    for mask in range(1, 16):
        acc = np.zeros(len(subsets), dtype=np.uint64)
        for t in range(4):
            if mask >> t & 1:
                acc ^= picked[:, t]
        ok &= acc != 0
    return ok


@dataclass(frozen=True)
class KwiseSequenceSpace:
    """
    N = 2^n бинарных переменных X_i, 4-wise delta-зависимых.

    Требуемое смещение пространства степеней - delta / 2^4
    (консервативная оценка L1 <= 2^k * смещение при k = 4).
    """

    n: int
    delta: float
    linear_map: KwiseLinearMap = field(init=False)
    seed_space: SmallBiasSpace = field(init=False)

    def __post_init__(self) -> None:
        if not 0 < self.delta < 1:
            raise InvalidInputError(f"delta должна лежать в (0, 1), получено {self.delta}")
        linear_map = KwiseLinearMap(self.n)
        object.__setattr__(self, "linear_map", linear_map)
        object.__setattr__(
            self, "seed_space", SmallBiasSpace.for_bias(linear_map.ell, self.delta / 2 ** MAX_SUBSET)
        )

    @property
    def length(self) -> int:
        return 1 << self.n

    @property
    def size(self) -> int:
        return self.seed_space.size

    def seed_bits(self, x: int, y: int) -> int:
        return self.seed_space.bits(x, y)

    def value(self, x: int, y: int, index: int) -> int:
        """Значение X_index в точке выборки (x, y)."""
        return _popcount_parity(self.linear_map.row(index) & self.seed_bits(x, y))

    def values(self, seed_bits: int, indices: np.ndarray) -> np.ndarray:
        rows = self.linear_map.rows(indices)
        return parity_array(rows & np.uint64(seed_bits))

    def marginal(self, subset: Sequence[int]) -> np.ndarray:
        """
        Точное маргинальное распределение (X_s для s из subset).

        Для фиксированного x вектор (X_s) = (<w_s(x), y>) линеен по y и
        равномерен на образе; образ задается соотношениями между w_s(x).

        Args:
            subset: До 4 различных индексов

        Returns:
            Массив вероятностей длины 2^k, бит t номера - значение X_subset[t]
        """
        subset = _check_subset(subset, self.length)
        k = len(subset)
        table = self.seed_space.powers_table()
        weights = np.zeros((self.seed_space.field_size, k), dtype=np.uint64)
        for t, index in enumerate(subset):
            row = self.linear_map.row(index)
            columns = [j for j in range(self.linear_map.ell) if row >> j & 1]
            weights[:, t] = np.bitwise_xor.reduce(table[:, columns], axis=1)

        patterns = 1 << k
        valid = np.ones((patterns, self.seed_space.field_size), dtype=bool)
        for mask in range(1, patterns):
            acc = np.zeros(self.seed_space.field_size, dtype=np.uint64)
            for t in range(k):
                if mask >> t & 1:
                    acc ^= weights[:, t]
            relation = acc == 0
            for pattern in range(patterns):
                if _popcount_parity(pattern & mask):
                    valid[pattern] &= ~relation
        image_size = valid.sum(axis=0)
        return (valid / image_size).mean(axis=1)


@dataclass(frozen=True)
class ExplicitSpace:
    """Пространство, заданное явным списком равновероятных точек (строки бит)."""

    points: Tuple[Tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if not self.points:
            raise InvalidInputError("Пустое пространство выборки")
        widths = {len(point) for point in self.points}
        if len(widths) != 1:
            raise InvalidInputError("Точки пространства имеют разную длину")

    @property
    def length(self) -> int:
        return len(self.points[0])

    @property
    def size(self) -> int:
        return len(self.points)

    def marginal(self, subset: Sequence[int]) -> np.ndarray:
        subset = _check_subset(subset, self.length)
        data = np.asarray(self.points, dtype=np.int64)[:, subset]
        codes = (data << np.arange(len(subset))).sum(axis=1)
        counts = np.bincount(codes, minlength=1 << len(subset))
        return counts / self.size


def _check_subset(subset: Sequence[int], length: int) -> Tuple[int, ...]:
    subset = tuple(int(i) for i in subset)
    if len(subset) > MAX_SUBSET:
        raise InvalidInputError(f"Поддерживаются подмножества размера <= {MAX_SUBSET}")
    if len(set(subset)) != len(subset):
        raise InvalidInputError("Индексы подмножества должны быть различны")
    if any(not 0 <= i < length for i in subset):
        raise InvalidInputError("Индекс подмножества вне диапазона")
    return subset


@dataclass(frozen=True)
class DependenceReport:
    """Расстояние L1 маргинала на S от равномерного распределения."""

    subset: Tuple[int, ...]
    l1_distance: float


def marginal_distance(space, subset: Sequence[int]) -> DependenceReport:
    """
    Точное расстояние L1 между маргиналом на subset и равномерным.

    Args:
        space: Пространство с методом marginal(subset)
        subset: До 4 индексов

    Returns:
        Отчет с расстоянием
    """
    subset = tuple(int(i) for i in subset)
    if len(subset) > MAX_SUBSET:
        raise InvalidInputError(f"Поддерживаются подмножества размера <= {MAX_SUBSET}")
    distribution = space.marginal(subset)
    uniform = 1.0 / len(distribution)
    distance = float(np.abs(distribution - uniform).sum())
    logger.debug(f"Маргинал на {subset}: L1 = {distance:.6g}")
    return DependenceReport(subset=subset, l1_distance=distance)


def realizes_all_patterns(space, subset: Sequence[int]) -> bool:
    """Каждая битовая строка на subset имеет положительную вероятность."""
    return bool(np.all(space.marginal(subset) > 0))
