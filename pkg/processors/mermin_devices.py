"""Поведенческие модели трехсторонних устройств Мермина: честное GHZ, классические стратегии, шум, противник с памятью."""

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from logger import get_logger
from processors.bounds_stats import MerminStats, mermin_stats
from processors.errors import ContractViolationError, InvalidInputError

logger = get_logger("mermin_devices")

CONSTRAINT_A_CONSTANT = "output-A-constant"
LHV_STRATEGIES = 64
# Однобитные функции стратегии: const0, const1, id, not
RESPONSE_FUNCTIONS: Tuple[Callable[[int], int], ...] = (
    lambda bit: 0,
    lambda bit: 1,
    lambda bit: bit,
    lambda bit: 1 - bit,
)
RESPONSE_NAMES = ("const0", "const1", "id", "not")


@dataclass(frozen=True)
class MerminInput:
    """Входы X, Y, Z; допустимы только 111, 100, 010, 001."""

    x: int
    y: int
    z: int

    def __post_init__(self) -> None:
        if any(bit not in (0, 1) for bit in (self.x, self.y, self.z)):
            raise ContractViolationError("Входы устройства должны быть битами")
        if self.x ^ self.y ^ self.z != 1:
            raise ContractViolationError(f"Недопустимый вход {self.label}: требуется X^Y^Z = 1")

    @property
    def label(self) -> str:
        return f"{self.x}{self.y}{self.z}"

    @property
    def product(self) -> int:
        return self.x & self.y & self.z

    @property
    def setting(self) -> int:
        """Символ 0..3, кодирующий этот вход."""
        return SETTING_LABELS.index(self.label)


@dataclass(frozen=True)
class MerminOutput:
    a: int
    b: int
    c: int

    def to_json(self) -> List[int]:
        return [self.a, self.b, self.c]


SETTING_LABELS = ("111", "100", "010", "001")


def encode_setting(symbol: int) -> MerminInput:
    """
    Символ хеш-функции во вход устройства: 0->111, 1->100, 2->010, 3->001.

    Args:
        symbol: Значение из {0,1,2,3}

    Returns:
        Вход устройства
    """
    if symbol not in (0, 1, 2, 3):
        raise InvalidInputError(f"Символ {symbol} вне {{0,1,2,3}}")
    label = SETTING_LABELS[symbol]
    return MerminInput(int(label[0]), int(label[1]), int(label[2]))


def passes_test(inp: MerminInput, out: MerminOutput) -> bool:
    """A ^ B ^ C = X * Y * Z."""
    return (out.a ^ out.b ^ out.c) == inp.product


@dataclass(frozen=True)
class TranscriptEntry:
    device_id: int
    input: MerminInput
    output: MerminOutput

    def to_json(self) -> Dict:
        return {"device": self.device_id, "input": self.input.label, "output": self.output.to_json()}


@dataclass
class Transcript:
    """Упорядоченная история (device_id, вход, выход); только добавление."""

    entries: List[TranscriptEntry] = field(default_factory=list)

    def append(self, entry: TranscriptEntry) -> None:
        if self.entries and entry.device_id <= self.entries[-1].device_id:
            raise ContractViolationError(
                f"Устройство {entry.device_id} не может идти после устройства {self.entries[-1].device_id}"
            )
        self.entries.append(entry)

    def view(self) -> Tuple[TranscriptEntry, ...]:
        """Неизменяемый снимок для передачи следующему устройству."""
        return tuple(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def to_json_lines(self) -> List[Dict]:
        return [entry.to_json() for entry in self.entries]


class DeviceModel:
    """Базовая модель устройства; respond видит только историю предшественников."""

    name: str = "device"

    def respond(
        self,
        inp: MerminInput,
        history: Sequence[TranscriptEntry],
        rng: np.random.Generator,
    ) -> MerminOutput:
        raise NotImplementedError

    def fresh(self) -> "DeviceModel":
        """Новый экземпляр той же модели (новое устройство для следующего раунда)."""
        return self

    @property
    def stateful(self) -> bool:
        return False


class HonestGHZ(DeviceModel):
    """A, B равномерны и независимы, C = A ^ B ^ XYZ."""

    name = "ghz"

    def respond(self, inp, history, rng):
        a, b = (int(bit) for bit in rng.integers(0, 2, size=2))
        return MerminOutput(a, b, a ^ b ^ inp.product)


@dataclass(frozen=True)
class DeterministicLHV(DeviceModel):
    """
    Детерминированная классическая стратегия, index = 16a + 4b + c;
    a, b, c выбирают функцию (const0, const1, id, not) для сторон A, B, C.
    """

    index: int

    def __post_init__(self) -> None:
        if not 0 <= self.index < LHV_STRATEGIES:
            raise InvalidInputError(f"Номер стратегии {self.index} вне 0..63")

    @property
    def name(self) -> str:
        return f"lhv:{self.index}"

    @property
    def functions(self) -> Tuple[int, int, int]:
        return self.index // 16, self.index // 4 % 4, self.index % 4

    def answer(self, inp: MerminInput) -> MerminOutput:
        fa, fb, fc = self.functions
        return MerminOutput(RESPONSE_FUNCTIONS[fa](inp.x), RESPONSE_FUNCTIONS[fb](inp.y), RESPONSE_FUNCTIONS[fc](inp.z))

    def respond(self, inp, history, rng):
        return self.answer(inp)

    def describe(self) -> str:
        return "A={}, B={}, C={}".format(*(RESPONSE_NAMES[f] for f in self.functions))


@dataclass(frozen=True)
class NoisyHonest(DeviceModel):
    """Честное устройство, которое с вероятностью mu инвертирует C (тест не пройден)."""

    mu: float

    def __post_init__(self) -> None:
        if not 0 <= self.mu <= 1:
            raise InvalidInputError(f"Вероятность сбоя mu вне [0, 1]: {self.mu}")

    @property
    def name(self) -> str:
        return f"noisy:{self.mu:g}"

    def respond(self, inp, history, rng):
        a, b = (int(bit) for bit in rng.integers(0, 2, size=2))
        c = a ^ b ^ inp.product
        if rng.random() < self.mu:
            c ^= 1
        return MerminOutput(a, b, c)


AdversaryRule = Callable[[MerminInput, Sequence[TranscriptEntry], Dict], MerminOutput]


class MemoryAdversary(DeviceModel):
    """
    Противник с памятью: детерминированная функция своего входа, истории
    предшественников и собственной памяти.

    Экземпляр хранит состояние, поэтому в каждом раунде нужен новый (fresh).
    """

    def __init__(self, rule: AdversaryRule, name: str = "custom"):
        self.rule = rule
        self._name = name
        self.memory: Dict = {}

    @property
    def name(self) -> str:
        return f"adversary:{self._name}"

    @property
    def stateful(self) -> bool:
        return True

    def fresh(self) -> "MemoryAdversary":
        return MemoryAdversary(self.rule, self._name)

    def respond(self, inp, history, rng):
        output = self.rule(inp, tuple(history), self.memory)
        self.memory["seen"] = self.memory.get("seen", 0) + 1
        return output


def _pin_zero(inp: MerminInput, history: Sequence[TranscriptEntry], memory: Dict) -> MerminOutput:
    # A делает XOR раунда равным 0 вместе с предшественниками; B = 0; C проходит 111, 100, 010
    a = 0
    for entry in history:
        a ^= entry.output.a
    return MerminOutput(a, 0, inp.z ^ a)


def _copy_last(inp: MerminInput, history: Sequence[TranscriptEntry], memory: Dict) -> MerminOutput:
    a = history[-1].output.a if history else 0
    b = history[-1].output.b if history else 0
    return MerminOutput(a, b, a ^ b ^ inp.product)


def _classical_best(inp: MerminInput, history: Sequence[TranscriptEntry], memory: Dict) -> MerminOutput:
    return MerminOutput(0, 0, inp.z)


ADVERSARY_RULES: Dict[str, AdversaryRule] = {
    # Фиксирует бит раунда ценой провала на входе 001
    "pin-zero": _pin_zero,
    # Всегда проходит тест, копируя A, B предшественника (ведет себя как GHZ с памятью)
    "copy-last": _copy_last,
    "classical": _classical_best,
}


def respond(
    device: DeviceModel,
    inp: MerminInput,
    history: Sequence[TranscriptEntry],
    rng: np.random.Generator,
) -> MerminOutput:
    """
    Ответ устройства на вход при истории предшественников.

    Args:
        device: Модель устройства
        inp: Допустимый вход
        history: Записи предшественников (только они)
        rng: Поток случайных чисел испытания

    Returns:
        Выход устройства
    """
    if not isinstance(inp, MerminInput):
        raise ContractViolationError("Ожидается вход MerminInput")
    return device.respond(inp, history, rng)


def parse_device_spec(text: str) -> DeviceModel:
    """
    Модель устройства по описанию: ghz | lhv:<i> | noisy:<mu> | adversary:<name>.

    Args:
        text: Описание из флага --device или поля конфигурации

    Returns:
        Шаблон модели устройства
    """
    kind, _, argument = text.strip().partition(":")
    try:
        if kind == "ghz":
            return HonestGHZ()
        if kind == "lhv":
            return DeterministicLHV(int(argument))
        if kind == "noisy":
            return NoisyHonest(float(argument))
    except ValueError as e:
        raise InvalidInputError(f"Некорректное описание устройства '{text}': {e}")
    if kind == "adversary":
        if argument not in ADVERSARY_RULES:
            raise InvalidInputError(
                f"Неизвестный противник '{argument}'; доступны: {', '.join(sorted(ADVERSARY_RULES))}"
            )
        return MemoryAdversary(ADVERSARY_RULES[argument], argument)
    raise InvalidInputError(f"Неизвестная модель устройства: {text}")


def lhv_pass_pattern(strategy: DeterministicLHV) -> Tuple[bool, bool, bool, bool]:
    """Прохождение теста на настройках 111, 100, 010, 001."""
    return tuple(passes_test(encode_setting(s), strategy.answer(encode_setting(s))) for s in range(4))


def brute_force_classical_max(constraint: Optional[str] = None) -> Tuple[float, List[int]]:
    """
    Перебор всех 64 детерминированных стратегий при равномерных входах.

    Args:
        constraint: None или "output-A-constant" (только стратегии с постоянным A)

    Returns:
        (максимальное v_u, номера стратегий-максимизаторов)
    """
    if constraint not in (None, CONSTRAINT_A_CONSTANT):
        raise InvalidInputError(f"Неизвестное ограничение: {constraint}")
    values: Dict[int, float] = {}
    for fa, fb, fc in product(range(4), repeat=3):
        if constraint == CONSTRAINT_A_CONSTANT and fa > 1:
            continue
        strategy = DeterministicLHV(16 * fa + 4 * fb + fc)
        values[strategy.index] = sum(lhv_pass_pattern(strategy)) / 4
    best = max(values.values())
    maximizers = [index for index, value in values.items() if value == best]
    logger.debug(f"Классический максимум v_u = {best} ({len(maximizers)} стратегий)")
    return best, maximizers


def estimate_mermin(
    device: DeviceModel,
    trials: int,
    rng: np.random.Generator,
    input_dist: Sequence[float] = (0.25, 0.25, 0.25, 0.25),
) -> MerminStats:
    """
    Эмпирические вероятности прохождения по настройкам и значение Мермина.

    Args:
        device: Модель устройства (для каждого испытания берется fresh())
        trials: Число испытаний
        rng: Поток случайных чисел
        input_dist: Распределение настроек 111, 100, 010, 001

    Returns:
        Статистика Мермина
    """
    if trials <= 0:
        raise InvalidInputError("Число испытаний должно быть положительным")
    settings = rng.choice(4, size=trials, p=np.asarray(input_dist, dtype=float))
    passed = np.zeros(4, dtype=np.int64)
    seen = np.zeros(4, dtype=np.int64)
    for symbol in settings:
        inp = encode_setting(int(symbol))
        out = respond(device.fresh(), inp, (), rng)
        seen[symbol] += 1
        passed[symbol] += passes_test(inp, out)
    cond = tuple(float(p / s) if s else 1.0 for p, s in zip(passed, seen))
    return mermin_stats(cond, tuple(input_dist))
