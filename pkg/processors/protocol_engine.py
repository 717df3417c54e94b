"""Выполнение протоколов извлечения: один раунд, многораундовый, однократный и устойчивый."""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from logger import get_logger
from processors.bounds_stats import (
    CLASSICAL_BOUND,
    FCurve,
    f_of_eps,
    required_rounds,
    required_rounds_robust,
    robust_threshold,
)
from processors.errors import ConfigError, InvalidInputError, NotDecomposableError
from processors.hash_families import HashFamily, build_matrix_family
from processors.mermin_devices import (
    DeviceModel,
    Transcript,
    TranscriptEntry,
    encode_setting,
    passes_test,
    respond,
)
from processors.source_models import (
    BlockSourceOracle,
    OutcomeDistribution,
    caratheodory_decompose,
    is_flat,
    min_entropy,
    sample,
)
from utils.rng import RNG_ALGORITHM

logger = get_logger("protocol_engine")

MODE_SINGLE = "single"
MODE_MULTI = "multi"
MODE_ONE_SHOT = "one-shot"
MODE_ROBUST = "robust"
MODES = (MODE_SINGLE, MODE_MULTI, MODE_ONE_SHOT, MODE_ROBUST)


@dataclass
class ProtocolConfig:
    """
    Параметры протокола.

    devices - шаблоны устройств по одному на член семейства; в каждом
    раунде используются новые экземпляры (fresh()). В режиме one-shot
    семейство строится по носителю источника, и шаблонов должно быть
    столько, сколько цифр в матрице M.
    """

    epsilon: float
    delta: float
    devices: List[DeviceModel]
    family: Optional[HashFamily] = None
    mode: str = MODE_MULTI
    rounds: Optional[int] = None
    fcurve: Optional[FCurve] = None
    threshold: Optional[int] = None

    def __post_init__(self) -> None:
        if not 0 < self.epsilon < 0.5:
            raise ConfigError(f"epsilon должна лежать в (0, 1/2), получено {self.epsilon}")
        if not 0 < self.delta < 1:
            raise ConfigError(f"delta должна лежать в (0, 1), получено {self.delta}")
        if self.mode not in MODES:
            raise ConfigError(f"Неизвестный режим протокола: {self.mode}")
        if not self.devices:
            raise ConfigError("Не задано ни одного устройства")
        stateful = [id(d) for d in self.devices if d.stateful]
        if len(stateful) != len(set(stateful)):
            raise ConfigError("Один и тот же экземпляр устройства с памятью указан несколько раз")
        if self.rounds is not None and self.rounds < 1:
            raise ConfigError("Число раундов должно быть >= 1")
        if self.threshold is not None and self.threshold < 0:
            raise ConfigError("Порог отказов не может быть отрицательным")
        if self.mode == MODE_ONE_SHOT:
            return
        if self.family is None:
            raise ConfigError("Для этого режима требуется семейство хеш-функций")
        if self.family.lazy:
            raise ConfigError(
                f"Семейство из {self.family.m_count} членов задано лениво; используйте подсемейство свидетелей"
            )
        if len(self.devices) != self.family.m_count:
            raise ConfigError(
                f"Число устройств {len(self.devices)} не равно размеру семейства {self.family.m_count}"
            )

    @property
    def f(self) -> Optional[float]:
        return None if self.fcurve is None else f_of_eps(self.fcurve, self.epsilon)

    def resolved_rounds(self) -> int:
        """Число раундов: явное значение или формула по f(eps)."""
        if self.mode in (MODE_SINGLE, MODE_ONE_SHOT):
            return 1
        if self.rounds is not None:
            return self.rounds
        if self.fcurve is None:
            raise ConfigError("Не заданы ни число раундов, ни кривая f(eps)")
        if self.mode == MODE_ROBUST:
            return required_rounds_robust(self.epsilon, self.delta, self.fcurve)
        return required_rounds(self.epsilon, self.delta, self.fcurve)

    def resolved_threshold(self, rounds: int) -> int:
        """Допустимое число отказов T (0 для неустойчивых режимов)."""
        if self.mode != MODE_ROBUST:
            return 0
        if self.threshold is not None:
            return self.threshold
        if self.fcurve is None:
            raise ConfigError("Для устойчивого режима нужен порог T или кривая f(eps)")
        return robust_threshold(self.f, rounds)


@dataclass
class RoundResult:
    """Результат раунда: бит b_j = XOR всех A_i, флаги прохождения, записи раунда."""

    bit: int
    passes: List[bool]
    entries: List[TranscriptEntry]
    first_failure: Optional[int] = None

    @property
    def failures(self) -> int:
        return self.passes.count(False)

    @property
    def aborted(self) -> bool:
        return self.failures > 0

    def to_dict(self, include_transcript: bool = False) -> Dict:
        payload = {"bit": self.bit, "failures": self.failures, "first_failure": self.first_failure}
        if include_transcript:
            payload["transcript"] = [entry.to_json() for entry in self.entries]
        return payload


@dataclass
class RunReport:
    """Итог запуска; при прерывании бит отсутствует."""

    bit: Optional[int]
    aborted: bool
    failures: int
    rounds_executed: int
    mode: str
    threshold: int
    rounds: List[RoundResult] = field(default_factory=list)
    seed: Optional[int] = None
    first_failure: Optional[int] = None
    rng_algorithm: str = RNG_ALGORITHM

    def __post_init__(self) -> None:
        if self.aborted and self.bit is not None:
            raise ValueError("Прерванный запуск не может выдавать бит")

    def to_dict(self, include_transcripts: bool = False) -> Dict:
        return {
            "mode": self.mode,
            "bit": self.bit,
            "aborted": self.aborted,
            "failures": self.failures,
            "threshold": self.threshold,
            "rounds_executed": self.rounds_executed,
            "first_failure": self.first_failure,
            "seed": self.seed,
            "rng": self.rng_algorithm,
            "rounds": [r.to_dict(include_transcripts) for r in self.rounds],
        }


def run_single_round(
    x: int,
    config: ProtocolConfig,
    rng: np.random.Generator,
    round_index: int = 0,
    transcript: Optional[Transcript] = None,
    family: Optional[HashFamily] = None,
    devices: Optional[Sequence[DeviceModel]] = None,
) -> RoundResult:
    """
    Один раунд: устройство i получает encode_setting(h_i(x)) по возрастанию i.

    Args:
        x: Блок источника (n-битная строка)
        config: Конфигурация протокола
        rng: Поток случайных чисел испытания
        round_index: Номер раунда (для глобальных номеров устройств)
        transcript: Общая история запуска; записи раунда добавляются в нее
        family: Семейство (по умолчанию config.family)
        devices: Шаблоны устройств (по умолчанию config.devices)

    Returns:
        Результат раунда
    """
    family = config.family if family is None else family
    templates = config.devices if devices is None else devices
    if family is None:
        raise ConfigError("Семейство хеш-функций не задано")
    if len(templates) != family.m_count:
        raise ConfigError(f"Число устройств {len(templates)} не равно размеру семейства {family.m_count}")
    if not 0 <= x < (1 << family.n):
        raise ConfigError(f"Блок {x} не является {family.n}-битной строкой семейства")

    transcript = Transcript() if transcript is None else transcript
    start = len(transcript)
    m = family.m_count
    passes: List[bool] = []
    bit = 0
    first_failure = None
    for i, (h, template) in enumerate(zip(family.members, templates)):
        device = template.fresh()
        inp = encode_setting(h.evaluate(x))
        # Устройства без памяти историю не читают
        history = transcript.view() if device.stateful else ()
        out = respond(device, inp, history, rng)
        device_id = round_index * m + i
        transcript.append(TranscriptEntry(device_id, inp, out))
        ok = passes_test(inp, out)
        passes.append(ok)
        if not ok and first_failure is None:
            first_failure = device_id
        bit ^= out.a
    return RoundResult(bit=bit, passes=passes, entries=transcript.entries[start:], first_failure=first_failure)


def _run_rounds(
    next_block: Callable[[], int],
    rounds: int,
    threshold: int,
    config: ProtocolConfig,
    rng: np.random.Generator,
    seed: Optional[int],
) -> RunReport:
    transcript = Transcript()
    results: List[RoundResult] = []
    failures = 0
    first_failure = None
    aborted = False
    for j in range(rounds):
        result = run_single_round(next_block(), config, rng, round_index=j, transcript=transcript)
        results.append(result)
        failures += result.failures
        if first_failure is None:
            first_failure = result.first_failure
        if failures > threshold:
            aborted = True
            logger.debug(f"Прерывание в раунде {j}: отказов {failures} > {threshold}")
            break

    bit = None
    if not aborted:
        bit = 0
        for result in results:
            bit ^= result.bit
    return RunReport(
        bit=bit,
        aborted=aborted,
        failures=failures,
        rounds_executed=len(results),
        mode=config.mode,
        threshold=threshold,
        rounds=results,
        seed=seed,
        first_failure=first_failure,
    )


def _check_oracle(oracle: BlockSourceOracle, config: ProtocolConfig) -> None:
    if config.family is not None and oracle.spec.n != config.family.n:
        raise ConfigError(f"Длина блока источника {oracle.spec.n} не совпадает с n семейства {config.family.n}")


def run_block_protocol(
    oracle: BlockSourceOracle,
    rounds: int,
    config: ProtocolConfig,
    rng: np.random.Generator,
    seed: Optional[int] = None,
) -> RunReport:
    """
    Многораундовый протокол: l раундов на последовательных блоках, b = XOR b_j.

    Прерывается при первом отказе любого устройства.

    Args:
        oracle: Блочный источник
        rounds: Число раундов l
        config: Конфигурация протокола
        rng: Поток случайных чисел
        seed: Seed для отчета

    Returns:
        Отчет запуска
    """
    if rounds < 1:
        raise ConfigError("Число раундов должно быть >= 1")
    _check_oracle(oracle, config)
    return _run_rounds(lambda: oracle.next_block(rng), rounds, 0, config, rng, seed)


def run_robust(
    oracle: BlockSourceOracle,
    rounds: int,
    config: ProtocolConfig,
    rng: np.random.Generator,
    seed: Optional[int] = None,
    threshold: Optional[int] = None,
) -> RunReport:
    """
    Устойчивый протокол: прерывание, только когда суммарное число отказов превышает T.

    Args:
        oracle: Блочный источник
        rounds: Число раундов l
        config: Конфигурация протокола
        rng: Поток случайных чисел
        seed: Seed для отчета
        threshold: T (по умолчанию из конфигурации или floor(l (1 - f) / 2))

    Returns:
        Отчет запуска
    """
    if rounds < 1:
        raise ConfigError("Число раундов должно быть >= 1")
    _check_oracle(oracle, config)
    if threshold is None:
        threshold = config.threshold
    if threshold is None:
        if config.fcurve is None:
            raise ConfigError("Для устойчивого режима нужен порог T или кривая f(eps)")
        threshold = robust_threshold(config.f, rounds)
    if threshold < 0:
        raise ConfigError("Порог отказов не может быть отрицательным")
    return _run_rounds(lambda: oracle.next_block(rng), rounds, threshold, config, rng, seed)


def _flat_digits(dist: OutcomeDistribution) -> int:
    size = len(dist.probs)
    digits = round(math.log(size, 4)) if size > 1 else 0
    if digits < 1 or 4 ** digits != size or not is_flat(dist, size):
        raise InvalidInputError(
            "Однократный протокол требует плоского источника на 4^k строках; "
            "общие источники анализируются через analyze_one_shot"
        )
    return digits


def one_shot_family(dist: OutcomeDistribution) -> HashFamily:
    """Матричное семейство над упорядоченным носителем плоского источника."""
    digits = _flat_digits(dist)
    return build_matrix_family(2 * digits, dist.support(), n=dist.n)


def run_one_shot(
    dist: OutcomeDistribution,
    config: ProtocolConfig,
    rng: np.random.Generator,
    seed: Optional[int] = None,
) -> RunReport:
    """
    Однократный протокол: одна строка плоского источника, Rn/2 устройств.

    Args:
        dist: Плоское распределение на 4^(Rn/2) строках
        config: Конфигурация (шаблонов устройств - Rn/2)
        rng: Поток случайных чисел
        seed: Seed для отчета

    Returns:
        Отчет запуска
    """
    family = one_shot_family(dist)
    if len(config.devices) != family.m_count:
        raise ConfigError(f"Однократному протоколу нужно {family.m_count} устройств, задано {len(config.devices)}")
    x = sample(dist, rng)
    result = run_single_round(x, config, rng, family=family)
    aborted = result.aborted
    return RunReport(
        bit=None if aborted else result.bit,
        aborted=aborted,
        failures=result.failures,
        rounds_executed=1,
        mode=MODE_ONE_SHOT,
        threshold=0,
        rounds=[result],
        seed=seed,
        first_failure=result.first_failure,
    )


@dataclass
class ComponentAnalysis:
    support_size: int
    weight: float
    non_abort: float


@dataclass
class OneShotAnalysis:
    """Вероятность не прерваться для общего источника: сумма по плоским компонентам."""

    digits: int
    components: List[ComponentAnalysis]
    non_abort: float
    bound: float

    def to_dict(self) -> Dict:
        return {
            "devices": self.digits,
            "components": len(self.components),
            "non_abort": self.non_abort,
            "bound": self.bound,
        }


def analyze_one_shot(
    dist: OutcomeDistribution,
    config: ProtocolConfig,
    rng: np.random.Generator,
) -> OneShotAnalysis:
    """
    Анализ однократного протокола для неплоского источника.

    Источник раскладывается на плоские компоненты размера 4^floor(H/2);
    для каждой перебираются все строки носителя и считается доля раундов
    без отказа; итог - взвешенная сумма рядом с оценкой f^k (или (3/4)^k
    без кривой).

    Args:
        dist: Распределение с min-энтропией >= 2
        config: Конфигурация (шаблонов устройств - floor(H/2))
        rng: Поток случайных чисел для рандомизированных устройств

    Returns:
        Результат анализа
    """
    digits = int(math.floor(min_entropy(dist) / 2 + 1e-9))
    if digits < 1:
        raise NotDecomposableError("Min-энтропия источника меньше 2")
    if len(config.devices) != digits:
        raise ConfigError(f"Анализу нужно {digits} устройств, задано {len(config.devices)}")
    components = caratheodory_decompose(dist, support_size=4 ** digits)
    analyses: List[ComponentAnalysis] = []
    for component in components:
        flat = component.to_distribution(dist.n)
        family = one_shot_family(flat)
        passed = 0
        for x in flat.support():
            if not run_single_round(x, config, rng, family=family).aborted:
                passed += 1
        analyses.append(ComponentAnalysis(len(component.support), component.weight, passed / len(component.support)))
    non_abort = math.fsum(a.weight * a.non_abort for a in analyses)
    per_device = config.f if config.fcurve is not None else CLASSICAL_BOUND
    logger.info(f"Однократный анализ: {len(analyses)} компонент, P(не прервано) = {non_abort:.6g}")
    return OneShotAnalysis(digits=digits, components=analyses, non_abort=non_abort, bound=per_device ** digits)


def extract_bits(
    oracle: BlockSourceOracle,
    count: int,
    rounds: int,
    config: ProtocolConfig,
    rng: np.random.Generator,
    seed: Optional[int] = None,
) -> List[RunReport]:
    """Несколько бит: протокол повторяется целиком с новыми устройствами на продолжении источника."""
    if count < 1:
        raise ConfigError("Число бит должно быть >= 1")
    runner = run_robust if config.mode == MODE_ROBUST else run_block_protocol
    return [runner(oracle, rounds, config, rng, seed) for _ in range(count)]


def run_protocol(
    config: ProtocolConfig,
    rng: np.random.Generator,
    oracle: Optional[BlockSourceOracle] = None,
    dist: Optional[OutcomeDistribution] = None,
    seed: Optional[int] = None,
) -> RunReport:
    """
    Запуск в режиме config.mode.

    Args:
        config: Конфигурация протокола
        rng: Поток случайных чисел испытания
        oracle: Блочный источник (single, multi, robust)
        dist: Плоское распределение (one-shot; иначе берется следующее распределение источника)
        seed: Seed для отчета

    Returns:
        Отчет запуска
    """
    if config.mode == MODE_ONE_SHOT:
        if dist is None:
            if oracle is None:
                raise ConfigError("Для однократного режима нужен источник")
            dist = oracle.next_distribution()
        return run_one_shot(dist, config, rng, seed)
    if oracle is None:
        raise ConfigError("Для блочного режима нужен источник")
    rounds = config.resolved_rounds()
    if config.mode == MODE_ROBUST:
        return run_robust(oracle, rounds, config, rng, seed, config.resolved_threshold(rounds))
    return run_block_protocol(oracle, rounds, config, rng, seed)
