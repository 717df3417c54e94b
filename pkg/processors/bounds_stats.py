"""Аналитические величины: значение Мермина, кривая f(eps), число раундов, оценки Чернова и Хёфдинга."""

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from processors.errors import InvalidInputError, OutOfRangeError, UndefinedRoundsError

CLASSICAL_BOUND = 0.75
ROBUST_FACTOR = 8.0
SETTINGS = ("111", "100", "010", "001")
NORMALIZATION_TOL = 1e-9
FLOOR_TOL = 1e-9


@dataclass(frozen=True)
class FCurve:
    """
    Табулированная кривая f(eps): точки (eps_i, v_i), eps по возрастанию.

    Значения получаются внешним SDP и задаются пользователем; правило
    интерполяции - ступенька вниз (берется точка с наибольшим eps_i <= eps).
    """

    points: Tuple[Tuple[float, float], ...]

    def __post_init__(self) -> None:
        if not self.points:
            raise InvalidInputError("Кривая f(eps) не содержит точек")
        epsilons = [p[0] for p in self.points]
        values = [p[1] for p in self.points]
        if any(b <= a for a, b in zip(epsilons, epsilons[1:])):
            raise InvalidInputError("eps в кривой должны строго возрастать")
        if any(not CLASSICAL_BOUND <= v <= 1 for v in values):
            raise InvalidInputError("Значения f(eps) должны лежать в [3/4, 1]")
        if any(b > a for a, b in zip(values, values[1:])):
            raise InvalidInputError("f(eps) должна не возрастать по eps")

    @property
    def epsilons(self) -> Tuple[float, ...]:
        return tuple(p[0] for p in self.points)

    @classmethod
    def constant(cls, eps: float, value: float) -> "FCurve":
        """Кривая из одной точки (удобно для расчетов при заданном f)."""
        return cls(points=((eps, value),))


@dataclass(frozen=True)
class MerminStats:
    """Условные вероятности прохождения теста, распределение входов, v и w = 1 - v."""

    cond_probs: Tuple[float, float, float, float]
    input_dist: Tuple[float, float, float, float]
    v: float

    @property
    def w(self) -> float:
        return 1.0 - self.v


def mermin_value(cond_probs: Sequence[float], input_dist: Sequence[float]) -> float:
    """
    Значение Мермина v = sum P(тест пройден | s) P(s).

    Порядок настроек: 111, 100, 010, 001. Для 111 условная вероятность -
    P(A^B^C = 1 | 111), для остальных - P(A^B^C = 0 | s).

    Args:
        cond_probs: Четыре условные вероятности прохождения
        input_dist: Распределение на четырех настройках

    Returns:
        Значение v
    """
    if len(cond_probs) != 4 or len(input_dist) != 4:
        raise InvalidInputError("Ожидается по 4 значения для условных вероятностей и распределения входов")
    if any(not 0 <= p <= 1 for p in cond_probs):
        raise InvalidInputError("Условные вероятности должны лежать в [0, 1]")
    if any(p < 0 for p in input_dist) or abs(sum(input_dist) - 1) > NORMALIZATION_TOL:
        raise InvalidInputError("Распределение входов не нормировано")
    return float(sum(c * p for c, p in zip(cond_probs, input_dist)))


def mermin_stats(cond_probs: Sequence[float], input_dist: Sequence[float] = (0.25,) * 4) -> MerminStats:
    """Сборка MerminStats с вычисленным v."""
    value = mermin_value(cond_probs, input_dist)
    return MerminStats(cond_probs=tuple(cond_probs), input_dist=tuple(input_dist), v=value)


def f_of_eps(curve: FCurve, eps: float) -> float:
    """
    Порог f(eps) по таблице (консервативная ступенька вниз, без экстраполяции).

    Args:
        curve: Кривая f(eps)
        eps: Требуемое смещение

    Returns:
        Значение v для наибольшего eps_i <= eps
    """
    epsilons = curve.epsilons
    if eps < epsilons[0] or eps > epsilons[-1]:
        raise OutOfRangeError(f"eps={eps} вне диапазона таблицы [{epsilons[0]}, {epsilons[-1]}]")
    position = bisect_right(epsilons, eps) - 1
    return curve.points[position][1]


def _check_rate(f: float) -> None:
    if f >= 1:
        raise UndefinedRoundsError("При f = 1 число раундов не определено")
    if f <= 0:
        raise InvalidInputError(f"f должна лежать в (0, 1), получено {f}")


def _check_delta(delta: float) -> None:
    if not 0 < delta < 1:
        raise InvalidInputError(f"delta должна лежать в (0, 1), получено {delta}")


def rounds_for_value(f: float, delta: float) -> int:
    """
    Наименьшее l с f^l < delta (эквивалентно l > log delta / log f).

    Строгое неравенство проверяется напрямую, а не только через потолок.
    """
    _check_rate(f)
    _check_delta(delta)
    rounds = max(1, math.floor(math.log(delta) / math.log(f)))
    while f ** rounds >= delta:
        rounds += 1
    while rounds > 1 and f ** (rounds - 1) < delta:
        rounds -= 1
    return rounds


def robust_rounds_for_value(f: float, delta: float) -> int:
    """
    Наименьшее целое l > 8 ln(delta) / (f - 1), то есть exp(-(1 - f) l / 8) < delta.

    Как и в rounds_for_value, строгое неравенство проверяется напрямую.
    """
    _check_rate(f)
    _check_delta(delta)

    def escapes(rounds: int) -> bool:
        return math.exp(-(1 - f) * rounds / ROBUST_FACTOR) < delta

    rounds = max(1, math.floor(ROBUST_FACTOR * math.log(delta) / (f - 1)))
    while not escapes(rounds):
        rounds += 1
    while rounds > 1 and escapes(rounds - 1):
        rounds -= 1
    return rounds


def one_shot_length_for_value(rate: float, f: float, delta: float) -> int:
    """Наименьшее n с f^(R n / 2) < delta."""
    if not 0 < rate <= 1:
        raise InvalidInputError(f"R должна лежать в (0, 1], получено {rate}")
    _check_rate(f)
    _check_delta(delta)
    length = max(1, math.floor(2 / rate * math.log(delta) / math.log(f)))
    while f ** (rate * length / 2) >= delta:
        length += 1
    while length > 1 and f ** (rate * (length - 1) / 2) < delta:
        length -= 1
    return length


def required_rounds(eps: float, delta: float, curve: FCurve) -> int:
    """
    Число раундов многораундового протокола: l > log delta / log f(eps).

    Args:
        eps: Целевое смещение
        delta: Допустимая вероятность неудачи
        curve: Кривая f(eps)

    Returns:
        Число раундов l
    """
    return rounds_for_value(f_of_eps(curve, eps), delta)


def required_rounds_robust(eps: float, delta: float, curve: FCurve) -> int:
    """Число раундов устойчивого протокола: l > 8 ln delta / (f(eps) - 1)."""
    return robust_rounds_for_value(f_of_eps(curve, eps), delta)


def one_shot_length(rate: float, eps: float, delta: float, curve: FCurve) -> int:
    """Длина строки однократного протокола: n > (2/R) log delta / log f(eps)."""
    return one_shot_length_for_value(rate, f_of_eps(curve, eps), delta)


def scaling_factor(f: float) -> float:
    """
    Во сколько раз устойчивый протокол длиннее: s = 8 ln f / (f - 1).

    При f = 1 возвращается предел 8.
    """
    if f == 1:
        return ROBUST_FACTOR
    if not 0 < f < 1:
        raise InvalidInputError(f"f должна лежать в (0, 1], получено {f}")
    return ROBUST_FACTOR * math.log(f) / (f - 1)


def robust_threshold(f: float, rounds: int) -> int:
    """Допустимое число отказов T = floor(l (1 - f) / 2)."""
    # Допуск гасит ошибку округления 1 - f (например, 100 * (1 - 0.9) / 2)
    return int(math.floor(rounds * (1 - f) / 2 + FLOOR_TOL))


@dataclass(frozen=True)
class TailBound:
    """Аналитическая оценка и точное биномиальное значение для сравнения."""

    bound: float
    exact: float


def chernoff_abort_bound(f: float, rounds: int) -> TailBound:
    """
    Вероятность, что обманывающий противник не обнаружен:
    F(floor((1-f) l / 2); l; 1-f) <= exp(-(1-f) l / 8).

    Args:
        f: Значение f(eps), 0 <= f < 1
        rounds: Число раундов l (l = 0 дает 1.0)

    Returns:
        Оценка Чернова и точное значение CDF
    """
    if not 0 <= f < 1:
        raise InvalidInputError(f"f должна лежать в [0, 1), получено {f}")
    if rounds < 0:
        raise InvalidInputError("Число раундов не может быть отрицательным")
    bound = math.exp(-(1 - f) * rounds / ROBUST_FACTOR)
    exact = float(stats.binom.cdf(robust_threshold(f, rounds), rounds, 1 - f)) if rounds else 1.0
    return TailBound(bound=bound, exact=exact)


def honest_failure_budget(f: float, m: int) -> float:
    """Допустимая вероятность отказа честного устройства mu = (1 - f) / (4m)."""
    if m < 1:
        raise InvalidInputError("Число устройств в раунде должно быть >= 1")
    return (1 - f) / (4 * m)


def hoeffding_false_abort_bound(f: float, m: int, rounds: int) -> TailBound:
    """
    Вероятность ложного прерывания честного протокола:
    P(sum Z_i > (1-f) l / 2) <= exp(-(1-f)^2 l / (8m)), Z_i ~ Bernoulli(mu).

    Args:
        f: Значение f(eps)
        m: Устройств в раунде
        rounds: Число раундов l

    Returns:
        Оценка Хёфдинга и точная вероятность хвоста
    """
    if not 0 <= f < 1:
        raise InvalidInputError(f"f должна лежать в [0, 1), получено {f}")
    if m < 1 or rounds < 1:
        raise InvalidInputError("Требуется m >= 1 и l >= 1")
    bound = math.exp(-((1 - f) ** 2) * rounds / (ROBUST_FACTOR * m))
    mu = honest_failure_budget(f, m)
    exact = float(stats.binom.sf(robust_threshold(f, rounds), m * rounds, mu))
    return TailBound(bound=bound, exact=exact)


def devices_required(m: int, rounds: int) -> int:
    """Общее число устройств: новые устройства в каждом раунде."""
    return m * rounds


def wilson_interval(successes: int, trials: int, confidence: float = 0.99) -> Tuple[float, float]:
    """
    Доверительный интервал Уилсона для доли.

    Args:
        successes: Число успехов
        trials: Число испытаний
        confidence: Уровень доверия

    Returns:
        (нижняя, верхняя) граница
    """
    if trials <= 0:
        raise InvalidInputError("Число испытаний должно быть положительным")
    z = float(stats.norm.ppf(0.5 + confidence / 2))
    p = successes / trials
    denominator = 1 + z * z / trials
    center = (p + z * z / (2 * trials)) / denominator
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denominator
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class BiasEstimate:
    """Эмпирическое смещение |mean - 1/2| и интервал для него."""

    bias: float
    lower: float
    upper: float
    mean: float
    count: int


def estimate_bias(bits: Iterable[int], confidence: float = 0.99) -> BiasEstimate:
    """
    Оценка смещения выходного бита по выборке.

    Args:
        bits: Выборка битов
        confidence: Уровень доверия интервала Уилсона

    Returns:
        Оценка смещения с интервалом
    """
    sample = np.fromiter((int(b) for b in bits), dtype=np.int64)
    if sample.size == 0:
        raise InvalidInputError("Пустая выборка битов")
    ones = int(sample.sum())
    mean = ones / sample.size
    low, high = wilson_interval(ones, int(sample.size), confidence)
    distances = (abs(low - 0.5), abs(high - 0.5))
    lower = 0.0 if low <= 0.5 <= high else min(distances)
    return BiasEstimate(
        bias=abs(mean - 0.5),
        lower=lower,
        upper=max(distances),
        mean=mean,
        count=int(sample.size),
    )


def sigma_of_rate(p: float, trials: int) -> float:
    """Стандартное отклонение эмпирической доли."""
    return math.sqrt(max(p * (1 - p), 0.0) / trials)


def classical_escape_probability(rounds: int, detection: Optional[float] = None) -> float:
    """Вероятность пройти l раундов классическими устройствами: (1 - detection)^l."""
    detection = 1 - CLASSICAL_BOUND if detection is None else detection
    return (1 - detection) ** rounds
