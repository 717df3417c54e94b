"""Модели слабых источников: распределения, плоские и блочные источники, разложение на плоские компоненты."""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from logger import get_logger
from processors.errors import (
    CannotAmplifyError,
    InvalidInputError,
    NotDecomposableError,
    SourceContractError,
)

logger = get_logger("source_models")

NORMALIZATION_TOL = 1e-12
FLAT_TOL = 1e-9
RECONSTRUCTION_TOL = 1e-9
ENTROPY_TOL = 1e-9
ZERO_TOL = 1e-12
FLAT_SUPPORT = 4


@dataclass(frozen=True)
class OutcomeDistribution:
    """Распределение на n-битных строках; probs - разреженный словарь outcome -> p."""

    n: int
    probs: Dict[int, float]

    def __post_init__(self) -> None:
        if self.n <= 0:
            raise InvalidInputError(f"Длина строки n должна быть положительной, получено {self.n}")
        cleaned: Dict[int, float] = {}
        for outcome, p in self.probs.items():
            outcome = int(outcome)
            p = float(p)
            if not 0 <= outcome < (1 << self.n):
                raise InvalidInputError(f"Исход {outcome} не является {self.n}-битной строкой")
            if not 0 <= p <= 1:
                raise InvalidInputError(f"Вероятность исхода {outcome} вне [0, 1]: {p}")
            if p > 0:
                cleaned[outcome] = p
        if not cleaned:
            raise InvalidInputError("Пустое распределение")
        total = math.fsum(cleaned.values())
        if abs(total - 1) > NORMALIZATION_TOL:
            raise InvalidInputError(f"Сумма вероятностей {total!r} отличается от 1")
        object.__setattr__(self, "probs", dict(sorted(cleaned.items())))

    def support(self) -> Tuple[int, ...]:
        return tuple(self.probs)

    @classmethod
    def uniform(cls, n: int, outcomes: Iterable[int]) -> "OutcomeDistribution":
        outcomes = sorted(set(int(o) for o in outcomes))
        if not outcomes:
            raise InvalidInputError("Пустой носитель")
        return cls(n=n, probs={o: 1.0 / len(outcomes) for o in outcomes})

    @classmethod
    def point_mass(cls, n: int, outcome: int) -> "OutcomeDistribution":
        return cls(n=n, probs={int(outcome): 1.0})

    @classmethod
    def from_json(cls, payload: Dict) -> "OutcomeDistribution":
        """
        Чтение формата {"n": int, "probs": {"<десятичный исход>": p}}.

        Args:
            payload: Разобранный JSON

        Returns:
            Распределение
        """
        try:
            n = int(payload["n"])
            probs = {int(key): float(value) for key, value in payload["probs"].items()}
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise InvalidInputError(f"Некорректный файл распределения: {e}")
        return cls(n=n, probs=probs)

    def to_json(self) -> Dict:
        return {"n": self.n, "probs": {str(o): p for o, p in self.probs.items()}}


@dataclass(frozen=True)
class SourceSpec:
    """Параметры (n, k) источника: длина блока и нижняя граница min-энтропии."""

    n: int
    k: float

    def __post_init__(self) -> None:
        if self.n <= 0:
            raise InvalidInputError("Длина блока должна быть положительной")
        if not 0 <= self.k <= self.n:
            raise InvalidInputError(f"Min-энтропия k={self.k} вне [0, {self.n}]")

    @property
    def rate(self) -> float:
        """Скорость min-энтропии R = k / n."""
        return self.k / self.n


@dataclass(frozen=True)
class FlatComponent:
    """Равномерное распределение на носителе (4 строки, либо 4^j в обобщенном разложении) с весом."""

    support: Tuple[int, ...]
    weight: float

    def __post_init__(self) -> None:
        size = len(self.support)
        if size < FLAT_SUPPORT or 4 ** round(math.log(size, 4)) != size:
            raise InvalidInputError(f"Носитель плоской компоненты должен иметь размер 4^j, получено {size}")
        if len(set(self.support)) != size:
            raise InvalidInputError("Строки носителя должны быть различны")
        if not 0 < self.weight <= 1 + NORMALIZATION_TOL:
            raise InvalidInputError(f"Вес компоненты вне (0, 1]: {self.weight}")

    def to_distribution(self, n: int) -> OutcomeDistribution:
        return OutcomeDistribution.uniform(n, self.support)

    def to_json(self) -> Dict:
        return {"support": list(self.support), "weight": self.weight}


def min_entropy(dist: OutcomeDistribution) -> float:
    """-log2 максимальной вероятности."""
    if not dist.probs:
        raise InvalidInputError("Пустое распределение")
    return -math.log2(max(dist.probs.values()))


def is_flat(dist: OutcomeDistribution, support_size: int = FLAT_SUPPORT) -> bool:
    """Ровно support_size исходов, каждый с вероятностью 1/support_size."""
    if len(dist.probs) != support_size:
        return False
    return all(abs(p - 1 / support_size) <= FLAT_TOL for p in dist.probs.values())


def caratheodory_decompose(dist: OutcomeDistribution, support_size: int = FLAT_SUPPORT) -> List[FlatComponent]:
    """
    Разложение распределения в выпуклую комбинацию плоских компонент.

    Жадное снятие слоев: берутся support_size самых вероятных исходов
    (при равенстве - по номеру), снимается наибольший вес w, при котором
    максимум остатка не превышает 1/support_size его массы.

    Args:
        dist: Распределение с max p <= 1/support_size
        support_size: Размер носителя компонент (4 или 4^j)

    Returns:
        Список компонент, веса в сумме дают 1

    Raises:
        NotDecomposableError: Если min-энтропия меньше log2(support_size)
    """
    s = support_size
    largest = max(dist.probs.values())
    if largest > 1 / s + FLAT_TOL:
        raise NotDecomposableError(
            f"Min-энтропия {min_entropy(dist):.6g} меньше {math.log2(s):g}: разложение невозможно"
        )
    if len(dist.probs) < s:
        raise NotDecomposableError(f"Носитель из {len(dist.probs)} исходов меньше {s}")

    residual = dict(dist.probs)
    mass = 1.0
    components: List[FlatComponent] = []
    max_steps = 4 * len(residual) + 16
    for _ in range(max_steps):
        if mass < ZERO_TOL:
            break
        ranked = sorted(residual.items(), key=lambda item: (-item[1], item[0]))
        if len(ranked) < s:
            # Остаток численного шума: переносится на последнюю компоненту
            logger.debug(f"Отброшен остаток массы {mass:.3g} на {len(ranked)} исходах")
            break
        top = ranked[:s]
        r_s = top[-1][1]
        r_next = ranked[s][1] if len(ranked) > s else 0.0
        weight = min(s * r_s, mass - s * r_next)
        if weight <= ZERO_TOL:
            weight = s * r_s
        components.append(FlatComponent(support=tuple(sorted(o for o, _ in top)), weight=weight))
        for outcome, p in top:
            remaining = p - weight / s
            if remaining < ZERO_TOL:
                residual.pop(outcome)
            else:
                residual[outcome] = remaining
        mass = math.fsum(residual.values())
    else:
        raise NotDecomposableError("Разложение не сошлось за отведенное число шагов")

    total = math.fsum(c.weight for c in components)
    components = [FlatComponent(support=c.support, weight=c.weight / total) for c in components]
    logger.debug(f"Разложение на {len(components)} плоских компонент (носитель {s})")
    return components


def reconstruct(components: Sequence[FlatComponent], n: int) -> Dict[int, float]:
    """Сумма w_i * uniform(support_i) как словарь вероятностей."""
    result: Dict[int, float] = {}
    for component in components:
        share = component.weight / len(component.support)
        for outcome in component.support:
            result[outcome] = result.get(outcome, 0.0) + share
    return result


def reconstruction_error(dist: OutcomeDistribution, components: Sequence[FlatComponent]) -> float:
    """Максимальное отклонение восстановленного распределения от исходного по исходам."""
    rebuilt = reconstruct(components, dist.n)
    outcomes = set(rebuilt) | set(dist.probs)
    return max(abs(rebuilt.get(o, 0.0) - dist.probs.get(o, 0.0)) for o in outcomes)


def block_concat(spec: SourceSpec) -> SourceSpec:
    """
    Склейка ceil(2/k') блоков (n', k')-источника в блок с k >= 2.

    Args:
        spec: Параметры исходного источника

    Returns:
        Параметры склеенного источника

    Raises:
        CannotAmplifyError: Если k' = 0
    """
    if spec.k <= 0:
        raise CannotAmplifyError("Источник с нулевой min-энтропией нельзя усилить")
    copies = math.ceil(2 / spec.k)
    return SourceSpec(n=copies * spec.n, k=copies * spec.k)


def concat_copies(spec: SourceSpec) -> int:
    if spec.k <= 0:
        raise CannotAmplifyError("Источник с нулевой min-энтропией нельзя усилить")
    return math.ceil(2 / spec.k)


def product_distribution(dists: Sequence[OutcomeDistribution]) -> OutcomeDistribution:
    """Независимое произведение: блок j занимает биты [j*n_j, ...), первый блок - младшие биты."""
    if not dists:
        raise InvalidInputError("Пустой список распределений")
    probs: Dict[int, float] = {0: 1.0}
    shift = 0
    for dist in dists:
        merged: Dict[int, float] = {}
        for prefix, p in probs.items():
            for outcome, q in dist.probs.items():
                merged[prefix | outcome << shift] = p * q
        probs = merged
        shift += dist.n
    total = math.fsum(probs.values())
    return OutcomeDistribution(n=shift, probs={o: p / total for o, p in probs.items()})


def sample(dist: OutcomeDistribution, rng: np.random.Generator) -> int:
    """
    Выборка исхода; детерминирована при фиксированном состоянии rng.

    Args:
        dist: Распределение
        rng: Поток случайных чисел

    Returns:
        Исход (целое)
    """
    outcomes = list(dist.probs)
    if len(outcomes) == 1:
        return outcomes[0]
    cumulative = np.cumsum(np.fromiter(dist.probs.values(), dtype=float, count=len(outcomes)))
    position = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
    return outcomes[min(position, len(outcomes) - 1)]


def sv_min_entropy(eps: float) -> float:
    """Min-энтропия бита eps-SV источника: -log2(1/2 + eps)."""
    if not 0 <= eps < 0.5:
        raise InvalidInputError(f"eps должна лежать в [0, 1/2), получено {eps}")
    return -math.log2(0.5 + eps)


def sv_epsilon(h: float) -> float:
    """Обратное к sv_min_entropy: eps = 2^(-h) - 1/2."""
    if not 0 < h <= 1:
        raise InvalidInputError(f"Min-энтропия бита должна лежать в (0, 1], получено {h}")
    return 2.0 ** -h - 0.5


Strategy = Callable[[Tuple[int, ...], Dict], OutcomeDistribution]


class BlockSourceOracle:
    """
    Блочный источник: стратегия противника по истории блоков и своему
    состоянию E выбирает распределение следующего блока.

    Каждое выданное распределение проверяется на min-энтропию >= spec.k.
    """

    def __init__(self, spec: SourceSpec, strategy: Strategy, name: str = "custom"):
        self.spec = spec
        self.strategy = strategy
        self.name = name
        self.history: List[int] = []
        self.state: Dict = {}

    def fresh(self) -> "BlockSourceOracle":
        """Копия с пустой историей (для нового испытания)."""
        return BlockSourceOracle(self.spec, self.strategy, self.name)

    def _checked(self, dist: OutcomeDistribution) -> OutcomeDistribution:
        if dist.n != self.spec.n:
            raise SourceContractError(f"Блок длины {dist.n} вместо {self.spec.n}")
        entropy = min_entropy(dist)
        if entropy < self.spec.k - ENTROPY_TOL:
            raise SourceContractError(
                f"Блок {len(self.history)} имеет min-энтропию {entropy:.6g} < {self.spec.k:g}"
            )
        return dist

    def next_distribution(self) -> OutcomeDistribution:
        return self._checked(self.strategy(tuple(self.history), self.state))

    def next_block(self, rng: np.random.Generator) -> int:
        """Следующий блок источника."""
        outcome = sample(self.next_distribution(), rng)
        self.history.append(outcome)
        return outcome

    def verify_strategy(self, histories: Iterable[Sequence[int]]) -> bool:
        """
        Проверка контракта на тестовых историях.

        Raises:
            SourceContractError: Если хотя бы одно распределение нарушает min-энтропию
        """
        for history in histories:
            replay = self.fresh()
            replay.history = list(history)
            replay.next_distribution()
        return True


class ConcatOracle(BlockSourceOracle):
    """Блоки (n, k) из ceil(2/k') последовательных блоков (n', k')-источника."""

    def __init__(self, inner: BlockSourceOracle):
        self.inner = inner
        self.copies = concat_copies(inner.spec)
        super().__init__(block_concat(inner.spec), strategy=None, name=f"concat({inner.name})")

    def fresh(self) -> "ConcatOracle":
        return ConcatOracle(self.inner.fresh())

    def next_block(self, rng: np.random.Generator) -> int:
        outcome = 0
        for j in range(self.copies):
            outcome |= self.inner.next_block(rng) << (j * self.inner.spec.n)
        self.history.append(outcome)
        return outcome

    def next_distribution(self) -> OutcomeDistribution:
        raise InvalidInputError("Склеенный источник не задает распределение блока целиком")

    def verify_strategy(self, histories: Iterable[Sequence[int]]) -> bool:
        return self.inner.verify_strategy(histories)


def concat_oracle(oracle: BlockSourceOracle) -> BlockSourceOracle:
    """Склейка блоков, если k' < 2; иначе исходный источник."""
    if oracle.spec.k >= 2:
        return oracle
    return ConcatOracle(oracle)


def uniform_oracle(n: int) -> BlockSourceOracle:
    """Идеальный источник: равномерное распределение на всех n-битных строках."""
    dist = OutcomeDistribution.uniform(n, range(1 << n))
    return BlockSourceOracle(SourceSpec(n=n, k=float(n)), lambda history, state: dist, name="uniform")


def flat_oracle(n: int, support: Optional[Sequence[int]] = None) -> BlockSourceOracle:
    """(n, 2) плоский источник с фиксированным носителем из 4 строк."""
    support = tuple(range(FLAT_SUPPORT)) if support is None else tuple(support)
    dist = OutcomeDistribution.uniform(n, support)
    if not is_flat(dist):
        raise InvalidInputError("Носитель плоского источника должен содержать 4 различные строки")
    return BlockSourceOracle(SourceSpec(n=n, k=2.0), lambda history, state: dist, name="flat")


def adaptive_flat_oracle(n: int) -> BlockSourceOracle:
    """
    (n, 2) источник, сдвигающий плоский носитель по предыдущему блоку.

    Носитель следующего блока - 4 строки, начиная с (4 * предыдущий + 1) mod 2^n.
    """
    if n < 2:
        raise InvalidInputError("Для плоского источника нужно n >= 2")
    size = 1 << n

    def strategy(history: Tuple[int, ...], state: Dict) -> OutcomeDistribution:
        start = (4 * history[-1] + 1) % size if history else 0
        state["start"] = start
        return OutcomeDistribution.uniform(n, ((start + i) % size for i in range(FLAT_SUPPORT)))

    return BlockSourceOracle(SourceSpec(n=n, k=2.0), strategy, name="adaptive-flat")


def sv_oracle(eps: float) -> BlockSourceOracle:
    """
    eps-SV источник как блочный (n = 1, k = -log2(1/2 + eps)).

    Противник смещает каждый бит на eps в сторону предыдущего бита
    (первый бит - в сторону 0).
    """
    k = sv_min_entropy(eps)

    def strategy(history: Tuple[int, ...], state: Dict) -> OutcomeDistribution:
        favored = history[-1] if history else 0
        return OutcomeDistribution(n=1, probs={favored: 0.5 + eps, 1 - favored: 0.5 - eps})

    return BlockSourceOracle(SourceSpec(n=1, k=k), strategy, name=f"sv({eps:g})")


def parse_source_spec(text: str, n: int) -> BlockSourceOracle:
    """
    Источник по строке: uniform | flat | adaptive | sv:<eps>.

    Args:
        text: Описание источника
        n: Длина блока (для sv игнорируется, блоки склеиваются)

    Returns:
        Блочный источник
    """
    kind, _, argument = text.partition(":")
    if kind == "uniform":
        return uniform_oracle(n)
    if kind == "flat":
        return flat_oracle(n)
    if kind == "adaptive":
        return adaptive_flat_oracle(n)
    if kind == "sv":
        try:
            eps = float(argument)
        except ValueError:
            raise InvalidInputError(f"Некорректное eps в описании источника: {text}")
        return concat_oracle(sv_oracle(eps))
    raise InvalidInputError(f"Неизвестный вид источника: {text}")
