"""Проверка свойства покрытия: для каждого 4-подмножества S найдется h с h(S) = {0,1,2,3}."""

import math
from dataclasses import dataclass, field
from itertools import chain, combinations
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from config import Config
from logger import get_logger
from processors.bounds_stats import wilson_interval
from processors.errors import BudgetExceededError, InvalidInputError
from processors.hash_families import (
    DerandomizedHash,
    HashFamily,
    HashFunctionDescriptor,
    select_members,
)
from utils.rng import master_stream

logger = get_logger("covering")

MODE_EXHAUSTIVE = "exhaustive"
MODE_SAMPLED = "sampled"
FULL_COVER = 0b1111
# Порог N, до которого значения членов кешируются полными таблицами
TABLE_LIMIT = 1 << 16
# Сколько членов лениво перебирается подряд при точном разрешении остатка
MEMBER_SWEEP_CAP = 1 << 20
CHUNK_ROWS = 1 << 20
PATTERN_SEARCH_BATCH = 4096
PATTERN_SEARCH_ROUNDS = 64


@dataclass
class CoveringReport:
    """Результат проверки покрытия."""

    mode: str
    n: int
    subsets_checked: int
    uncovered: int
    uncovered_fraction: float
    confidence_interval: Tuple[float, float]
    witness_indices: List[int] = field(default_factory=list)

    @property
    def covering(self) -> bool:
        return self.uncovered == 0

    def to_json(self) -> Dict:
        return {
            "mode": self.mode,
            "n": self.n,
            "subsets_checked": self.subsets_checked,
            "uncovered": self.uncovered,
            "uncovered_fraction": self.uncovered_fraction,
            "confidence_interval": list(self.confidence_interval),
            "witnesses": len(self.witness_indices),
        }


def count_four_subsets(n: int) -> int:
    return math.comb(1 << n, 4)


def _check_budget(n: int, budget: int) -> int:
    total = count_four_subsets(n)
    if total > budget:
        raise BudgetExceededError(
            f"Полный перебор C(2^{n}, 4) = {total} превышает бюджет {budget}; используйте режим sampled"
        )
    return total


def iter_four_subsets(n: int, chunk_rows: int = CHUNK_ROWS) -> Iterator[np.ndarray]:
    """
    Все 4-подмножества {0..2^n-1} в лексикографическом порядке, блоками.

    Args:
        n: Длина входа в битах
        chunk_rows: Примерный размер блока

    Returns:
        Итератор массивов формы (k, 4)
    """
    size = 1 << n
    if size < 4:
        return
    count = math.comb(size, 3)
    triples = np.fromiter(chain.from_iterable(combinations(range(size), 3)), dtype=np.int64, count=3 * count)
    triples = triples.reshape(-1, 3)
    pending: List[np.ndarray] = []
    pending_rows = 0
    for first in range(size - 3):
        start = int(np.searchsorted(triples[:, 0], first + 1))
        tail = triples[start:]
        block = np.empty((len(tail), 4), dtype=np.int64)
        block[:, 0] = first
        block[:, 1:] = tail
        pending.append(block)
        pending_rows += len(block)
        if pending_rows >= chunk_rows:
            yield np.concatenate(pending)
            pending, pending_rows = [], 0
    if pending:
        yield np.concatenate(pending)


def sample_four_subsets(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Равномерная выборка 4-подмножеств (различных элементов) с возвращением."""
    size = 1 << n
    if size < 4:
        raise InvalidInputError("Для n < 2 4-подмножеств нет")
    result = rng.integers(0, size, size=(count, 4), dtype=np.int64)
    while True:
        ordered = np.sort(result, axis=1)
        bad = np.any(ordered[:, 1:] == ordered[:, :-1], axis=1)
        if not bad.any():
            return ordered
        result[bad] = rng.integers(0, size, size=(int(bad.sum()), 4), dtype=np.int64)


def _covered(values: np.ndarray) -> np.ndarray:
    masks = np.left_shift(np.uint8(1), values.astype(np.uint8))
    return np.bitwise_or.reduce(masks, axis=1) == FULL_COVER


class _MemberSweep:
    """Порядок просмотра членов семейства и кеш их значений."""

    def __init__(self, family: HashFamily, witness_limit: int, rng: np.random.Generator):
        self.family = family
        if family.m_count <= witness_limit:
            self.order = list(range(family.m_count))
        else:
            self.order = [int(i) for i in self._random_indices(witness_limit, rng)]
        self._tables: Dict[int, np.ndarray] = {}
        self._members: Dict[int, HashFunctionDescriptor] = {}

    def _random_indices(self, count: int, rng: np.random.Generator) -> List[int]:
        # Индекс может превышать int64, поэтому собирается из 32-битных частей
        bits = (self.family.m_count - 1).bit_length()
        words = (bits + 31) // 32
        result = []
        for _ in range(count):
            value = 0
            for word in rng.integers(0, 1 << 32, size=words, dtype=np.uint64):
                value = value << 32 | int(word)
            result.append(value % self.family.m_count)
        return result

    def member(self, index: int) -> HashFunctionDescriptor:
        if index not in self._members:
            self._members[index] = self.family.members[index]
        return self._members[index]

    def values(self, index: int, subsets: np.ndarray) -> np.ndarray:
        member = self.member(index)
        if (1 << self.family.n) <= TABLE_LIMIT:
            if index not in self._tables:
                self._tables[index] = member.table()
            return self._tables[index][subsets]
        return member.evaluate_many(subsets)


def _sweep(sweep: _MemberSweep, indices: List[int], subsets: np.ndarray, used: Dict[int, None]) -> np.ndarray:
    """Просмотр членов по порядку; возвращает непокрытые подмножества."""
    remaining = subsets
    for index in indices:
        if len(remaining) == 0:
            break
        covered = _covered(sweep.values(index, remaining))
        if covered.any():
            used.setdefault(index, None)
            remaining = remaining[~covered]
    return remaining


def _find_seed(space, subset: Tuple[int, ...], pattern: int, rng: np.random.Generator) -> Optional[Tuple[int, int]]:
    """Поиск точки (x, y), на которой X_subset совпадает с заданным шаблоном."""
    field_size = space.seed_space.field_size
    indices = np.asarray(subset, dtype=np.int64)
    for _ in range(PATTERN_SEARCH_ROUNDS):
        xs = rng.integers(0, field_size, size=PATTERN_SEARCH_BATCH)
        ys = rng.integers(0, field_size, size=PATTERN_SEARCH_BATCH)
        for x, y in zip(xs, ys):
            bits = space.values(space.seed_bits(int(x), int(y)), indices)
            code = int(sum(int(b) << t for t, b in enumerate(bits)))
            if code == pattern:
                return int(x), int(y)
    return None


def _resolve_exactly(
    family: HashFamily,
    subset: Tuple[int, ...],
    rng: np.random.Generator,
) -> Optional[int]:
    """
    Точное решение для подмножества через маргинал 4-wise пространства.

    S покрыто, если существуют шаблоны px, py положительной вероятности,
    для которых символы 2 px_t + py_t попарно различны.

    Returns:
        Индекс члена-свидетеля или None, если S не покрыто
    """
    space = family.space
    distribution = space.marginal(subset)
    positive = [p for p in range(16) if distribution[p] > 0]
    for px in positive:
        for py in positive:
            symbols = {2 * (px >> t & 1) + (py >> t & 1) for t in range(4)}
            if len(symbols) < 4:
                continue
            hi = _find_seed(space, subset, px, rng)
            lo = _find_seed(space, subset, py, rng)
            if hi is None or lo is None:
                continue
            witness = DerandomizedHash(space=space, x_hi=hi[0], y_hi=hi[1], x_lo=lo[0], y_lo=lo[1])
            return witness.seed_index
    return None


def _resolve_remaining(
    family: HashFamily,
    sweep: _MemberSweep,
    remaining: np.ndarray,
    used: Dict[int, None],
    rng: np.random.Generator,
) -> int:
    """Точная обработка подмножеств, не покрытых просмотренными членами."""
    if len(remaining) == 0:
        return 0
    swept = set(sweep.order)
    if len(swept) == family.m_count:
        return len(remaining)

    # Маргиналы описывают все пространство семян, а не явный список членов
    if family.space is not None and family.lazy:
        logger.info(f"Точное разрешение {len(remaining)} подмножеств через маргиналы")
        uncovered = 0
        for row in remaining:
            witness = _resolve_exactly(family, tuple(int(v) for v in row), rng)
            if witness is None:
                uncovered += 1
            else:
                used.setdefault(witness, None)
        return uncovered

    if family.m_count <= MEMBER_SWEEP_CAP:
        logger.info(f"Последовательный просмотр всех {family.m_count} членов для {len(remaining)} подмножеств")
        rest = [i for i in range(family.m_count) if i not in swept]
        return len(_sweep(sweep, rest, remaining, used))

    raise BudgetExceededError(
        f"Семейство из {family.m_count} членов нельзя просмотреть полностью для {len(remaining)} подмножеств"
    )


def verify_covering(
    family: HashFamily,
    mode: str = MODE_EXHAUSTIVE,
    trials: int = 10 ** 6,
    budget: Optional[int] = None,
    witness_limit: Optional[int] = None,
    seed: Optional[int] = None,
) -> CoveringReport:
    """
    Проверка покрытия 4-подмножеств семейством.

    Args:
        family: Семейство хеш-функций
        mode: exhaustive (точный подсчет) или sampled (оценка по выборке)
        trials: Размер выборки в режиме sampled
        budget: Предел числа подмножеств для exhaustive (по умолчанию Config.COVERING_BUDGET)
        witness_limit: Сколько членов просматривать (по умолчанию Config.WITNESS_LIMIT)
        seed: Seed для выбора членов и выборки подмножеств

    Returns:
        Отчет о покрытии
    """
    budget = Config.COVERING_BUDGET if budget is None else budget
    witness_limit = Config.WITNESS_LIMIT if witness_limit is None else witness_limit
    rng = master_stream(Config.DEFAULT_SEED if seed is None else seed)
    n = family.n
    if n < 2:
        raise InvalidInputError("Для n < 2 4-подмножеств нет")

    sweep = _MemberSweep(family, witness_limit, rng)
    used: Dict[int, None] = {}
    logger.info(f"Проверка покрытия: n={n}, семейство из {family.m_count} членов, режим {mode}")

    if mode == MODE_EXHAUSTIVE:
        total = _check_budget(n, budget)
        uncovered = 0
        for chunk in iter_four_subsets(n):
            remaining = _sweep(sweep, sweep.order, chunk, used)
            uncovered += _resolve_remaining(family, sweep, remaining, used, rng)
        fraction = uncovered / total
        report = CoveringReport(mode, n, total, uncovered, fraction, (fraction, fraction), list(used))
    elif mode == MODE_SAMPLED:
        if trials <= 0:
            raise InvalidInputError("Размер выборки должен быть положительным")
        subsets = sample_four_subsets(n, trials, rng)
        remaining = _sweep(sweep, sweep.order, subsets, used)
        uncovered = _resolve_remaining(family, sweep, remaining, used, rng)
        report = CoveringReport(
            mode, n, trials, uncovered, uncovered / trials, wilson_interval(uncovered, trials), list(used)
        )
    else:
        raise InvalidInputError(f"Неизвестный режим проверки: {mode}")

    logger.info(
        f"Проверено подмножеств: {report.subsets_checked}, непокрытых: {report.uncovered}, "
        f"свидетелей: {len(report.witness_indices)}"
    )
    return report


def prune_family(family: HashFamily, report: CoveringReport) -> HashFamily:
    """
    Явное подсемейство из членов-свидетелей проверки.

    После полной проверки без непокрытых подмножеств результат покрывает
    все 4-подмножества.
    """
    if not report.witness_indices:
        raise InvalidInputError("Отчет не содержит свидетелей покрытия")
    return select_members(family, sorted(report.witness_indices))


def covered_fraction_single(
    h: HashFunctionDescriptor,
    mode: str = MODE_EXHAUSTIVE,
    trials: int = 10 ** 6,
    budget: Optional[int] = None,
    seed: Optional[int] = None,
) -> float:
    """
    Доля 4-подмножеств S с h(S) = {0,1,2,3}.

    Args:
        h: Хеш-функция
        mode: exhaustive или sampled
        trials: Размер выборки для sampled
        budget: Предел числа подмножеств для exhaustive
        seed: Seed выборки

    Returns:
        Доля покрытых подмножеств
    """
    budget = Config.COVERING_BUDGET if budget is None else budget
    rng = master_stream(Config.DEFAULT_SEED if seed is None else seed)
    if mode == MODE_EXHAUSTIVE:
        total = _check_budget(h.n, budget)
        table = h.table()
        covered = sum(int(_covered(table[chunk]).sum()) for chunk in iter_four_subsets(h.n))
        return covered / total
    if mode == MODE_SAMPLED:
        subsets = sample_four_subsets(h.n, trials, rng)
        return float(_covered(h.evaluate_many(subsets)).mean())
    raise InvalidInputError(f"Неизвестный режим проверки: {mode}")


def covered_count_formula(h: HashFunctionDescriptor) -> int:
    """Число покрытых 4-подмножеств: произведение размеров прообразов символов."""
    counts = np.bincount(h.table(), minlength=4)
    return int(np.prod(counts.astype(object)))
