"""Оркестрация экспериментов Monte Carlo и построение таблиц оценок."""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from config import Config
from logger import get_logger
from processors import bounds_stats
from processors.bounds_stats import FCurve
from processors.covering import MODE_EXHAUSTIVE, MODE_SAMPLED, count_four_subsets, prune_family, verify_covering
from processors.errors import (
    ConfigError,
    InvalidInputError,
    SourceContractError,
    UndefinedRoundsError,
)
from processors.fcurve_reader import read_fcurve
from processors.hash_families import (
    HashFamily,
    build_derandomized_family,
    build_table_family,
    family_from_json,
    family_to_json,
)
from processors.mermin_devices import DeterministicLHV, parse_device_spec
from processors.protocol_engine import (
    MODE_MULTI,
    MODE_ONE_SHOT,
    MODE_ROBUST,
    MODES,
    ProtocolConfig,
    RunReport,
    one_shot_family,
    run_protocol,
    run_robust,
)
from processors.source_models import (
    BlockSourceOracle,
    OutcomeDistribution,
    SourceSpec,
    min_entropy,
    parse_source_spec,
    uniform_oracle,
)
from utils.cache import get_cache
from utils.rng import RNG_ALGORITHM, trial_stream

logger = get_logger("experiment")

TRIAL_COLUMNS = ("trial", "aborted", "failures", "bit")
DEFAULT_FAMILY_DELTA = 1.0 / 16
# Классический обманщик для эмпирического столбца: A=0, B=0, C=Z (проходит 3 настройки из 4)
CHEATER_STRATEGY = 2


@dataclass
class ProtocolSection:
    mode: str = MODE_MULTI
    epsilon: float = 0.1
    delta: float = 1e-3
    n: int = 4
    rounds: Optional[int] = None
    threshold: Optional[int] = None
    device: str = "ghz"
    source: str = "flat"
    family_delta: float = DEFAULT_FAMILY_DELTA
    family_file: Optional[Path] = None
    source_file: Optional[Path] = None
    fcurve_file: Optional[Path] = None


@dataclass
class OutputSection:
    json: Optional[Path] = None
    csv: Optional[Path] = None
    xlsx: Optional[Path] = None


@dataclass
class ExperimentConfig:
    """
    Конфигурация эксперимента (один JSON документ).

    Испытание i использует поток trial_stream(seed, i); пути файлов
    задаются относительно директории конфигурации.
    """

    seed: int = field(default_factory=lambda: Config.DEFAULT_SEED)
    trials: int = 1000
    threads: int = field(default_factory=lambda: Config.THREADS)
    protocol: ProtocolSection = field(default_factory=ProtocolSection)
    output: OutputSection = field(default_factory=OutputSection)
    verbosity: str = field(default_factory=lambda: Config.LOG_LEVEL)
    witness_limit: int = field(default_factory=lambda: Config.WITNESS_LIMIT)

    def validate(self) -> None:
        """Проверка до начала вычислений; ошибки называют поле."""
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("Поле seed: ожидается 64-битное неотрицательное число")
        if self.trials < 1:
            raise ConfigError("Поле trials: должно быть >= 1")
        if self.threads < 1:
            raise ConfigError("Поле threads: должно быть >= 1")
        if self.witness_limit < 1:
            raise ConfigError("Поле witness_limit: должно быть >= 1")
        p = self.protocol
        if p.mode not in MODES:
            raise ConfigError(f"Поле protocol.mode: неизвестный режим {p.mode}")
        if not 0 < p.epsilon < 0.5:
            raise ConfigError("Поле protocol.epsilon: должно лежать в (0, 1/2)")
        if not 0 < p.delta < 1:
            raise ConfigError("Поле protocol.delta: должно лежать в (0, 1)")
        if p.n < 2:
            raise ConfigError("Поле protocol.n: должно быть >= 2")
        if p.rounds is not None and p.rounds < 1:
            raise ConfigError("Поле protocol.rounds: должно быть >= 1")
        if p.threshold is not None and p.threshold < 0:
            raise ConfigError("Поле protocol.threshold: не может быть отрицательным")
        for name in ("family_file", "source_file", "fcurve_file"):
            path = getattr(p, name)
            if path is not None and not path.exists():
                raise ConfigError(f"Поле protocol.{name}: файл не найден: {path}")
        if p.fcurve_file is None and p.rounds is None and p.mode in (MODE_MULTI, MODE_ROBUST):
            raise ConfigError("Поле protocol.rounds: задайте число раундов или protocol.fcurve_file")
        if p.mode == MODE_ROBUST and p.threshold is None and p.fcurve_file is None:
            raise ConfigError("Поле protocol.threshold: для robust нужен порог или кривая f(eps)")
        if p.mode == MODE_ONE_SHOT and p.source_file is None and p.source not in ("uniform", "flat"):
            raise ConfigError("Поле protocol.source: однократный режим требует source_file, uniform или flat")


def _typed(section: str, key: str, value: Any, kind: type) -> Any:
    try:
        if kind is bool or value is None:
            return value
        if kind is int and isinstance(value, float) and not value.is_integer():
            raise ValueError(value)
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"Поле {section}{key}: ожидается {kind.__name__}, получено {value!r}")


_PROTOCOL_TYPES = {
    "mode": str, "epsilon": float, "delta": float, "n": int, "rounds": int, "threshold": int,
    "device": str, "source": str, "family_delta": float,
}
_PATH_FIELDS = ("family_file", "source_file", "fcurve_file")


def parse_experiment_config(payload: Dict, base_dir: Path) -> ExperimentConfig:
    """
    Разбор словаря конфигурации.

    Args:
        payload: Разобранный JSON
        base_dir: Директория, относительно которой разрешаются пути

    Returns:
        Конфигурация эксперимента
    """
    if not isinstance(payload, dict):
        raise ConfigError("Конфигурация должна быть JSON объектом")
    known = {"seed", "trials", "threads", "protocol", "output", "verbosity", "witness_limit"}
    unknown = set(payload) - known
    if unknown:
        raise ConfigError(f"Неизвестные поля конфигурации: {', '.join(sorted(unknown))}")

    config = ExperimentConfig()
    for key in ("seed", "trials", "threads", "witness_limit"):
        if key in payload:
            setattr(config, key, _typed("", key, payload[key], int))
    if "verbosity" in payload:
        config.verbosity = str(payload["verbosity"]).upper()

    protocol = payload.get("protocol", {})
    if not isinstance(protocol, dict):
        raise ConfigError("Поле protocol: ожидается объект")
    for key, value in protocol.items():
        if key in _PROTOCOL_TYPES:
            setattr(config.protocol, key, _typed("protocol.", key, value, _PROTOCOL_TYPES[key]))
        elif key in _PATH_FIELDS:
            setattr(config.protocol, key, None if value is None else (base_dir / str(value)).resolve())
        else:
            raise ConfigError(f"Неизвестное поле protocol.{key}")

    output = payload.get("output", {})
    if not isinstance(output, dict):
        raise ConfigError("Поле output: ожидается объект")
    for key, value in output.items():
        if key not in ("json", "csv", "xlsx"):
            raise ConfigError(f"Неизвестное поле output.{key}")
        setattr(config.output, key, None if value is None else (base_dir / str(value)).resolve())
    return config


def load_experiment_config(path: Path) -> ExperimentConfig:
    """
    Чтение конфигурации из JSON файла.

    Raises:
        ConfigError: С номером строки при синтаксической ошибке или именем поля
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Файл конфигурации не найден: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path.name}: строка {e.lineno}, столбец {e.colno}: {e.msg}")
    return parse_experiment_config(payload, path.resolve().parent)


def resolve_family(n: int, delta: float, seed: int, witness_limit: int, family_file: Optional[Path] = None) -> HashFamily:
    """
    Явное покрывающее семейство для протокола.

    Из файла, из кэша или построением: дерандомизированное семейство,
    проверка покрытия и сужение до свидетелей.
    """
    if family_file is not None:
        try:
            payload = json.loads(Path(family_file).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{Path(family_file).name}: строка {e.lineno}: {e.msg}")
        family = family_from_json(payload)
        if not family.lazy:
            return family
        if family.space is None:
            return _prune(family, seed, witness_limit)
        n, delta = family.n, family.space.delta

    cache = get_cache()
    cached = cache.get(n, delta, seed, witness_limit)
    if cached is not None:
        return family_from_json(cached)

    pruned = _prune(build_derandomized_family(n, delta), seed, witness_limit)
    cache.set(n, delta, seed, witness_limit, family_to_json(pruned))
    return pruned


def _prune(family: HashFamily, seed: int, witness_limit: int) -> HashFamily:
    n = family.n
    mode = MODE_EXHAUSTIVE if count_four_subsets(n) <= Config.COVERING_BUDGET else MODE_SAMPLED
    if mode == MODE_SAMPLED:
        logger.warning(f"n={n}: полный перебор вне бюджета, свидетели выбираются по выборке подмножеств")
    report = verify_covering(family, mode=mode, witness_limit=witness_limit, seed=seed)
    if not report.covering:
        raise ConfigError(f"Семейство не покрывает {report.uncovered} из {report.subsets_checked} подмножеств")
    return prune_family(family, report)


def oracle_from_distribution(dist: OutcomeDistribution) -> BlockSourceOracle:
    """Источник, выдающий одно и то же распределение в каждом блоке."""
    spec = SourceSpec(n=dist.n, k=min_entropy(dist))
    return BlockSourceOracle(spec, lambda history, state: dist, name="file")


def read_distribution(path: Path) -> OutcomeDistribution:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{Path(path).name}: строка {e.lineno}: {e.msg}")
    return OutcomeDistribution.from_json(payload)


@dataclass
class SummaryReport:
    """Строки испытаний, агрегаты и аналитические столбцы."""

    rows: List[Dict]
    aggregates: Dict
    analytic: Dict
    settings: Dict

    def to_dict(self) -> Dict:
        return {"settings": self.settings, "aggregates": self.aggregates, "analytic": self.analytic}

    def json_records(self) -> List[Dict]:
        """Строки для JSON lines: испытания, затем итог."""
        return list(self.rows) + [{"summary": self.to_dict()}]


def _trial_row(trial: int, report: Optional[RunReport], error: Optional[str] = None) -> Dict:
    if report is None:
        return {"trial": trial, "aborted": True, "failures": None, "bit": None, "rounds_executed": 0,
                "first_failure": None, "error": error}
    return {
        "trial": trial,
        "aborted": report.aborted,
        "failures": report.failures,
        "bit": report.bit,
        "rounds_executed": report.rounds_executed,
        "first_failure": report.first_failure,
        "error": None,
    }


def aggregate_rows(rows: Sequence[Dict]) -> Dict:
    """Агрегаты по строкам испытаний; счетчики совпадают с числом строк."""
    total = len(rows)
    errors = sum(1 for r in rows if r["error"])
    aborted = sum(1 for r in rows if r["aborted"])
    histogram: Dict[str, int] = {}
    for row in rows:
        if row["failures"] is not None:
            key = str(row["failures"])
            histogram[key] = histogram.get(key, 0) + 1
    bits = [r["bit"] for r in rows if r["bit"] is not None]
    aggregates = {
        "trials": total,
        "aborted": aborted,
        "errors": errors,
        "abort_rate": aborted / total,
        "non_abort_rate": (total - aborted) / total,
        "abort_sigma": bounds_stats.sigma_of_rate(aborted / total, total),
        "failure_histogram": dict(sorted(histogram.items(), key=lambda item: int(item[0]))),
        "bits": len(bits),
        "bias": None,
    }
    if bits:
        estimate = bounds_stats.estimate_bias(bits)
        aggregates["bias"] = estimate.bias
        aggregates["bias_interval"] = [estimate.lower, estimate.upper]
        aggregates["ones_fraction"] = estimate.mean
    return aggregates


def analytic_columns(protocol: ProtocolConfig, rounds: int, m: int) -> Dict:
    """Аналитические величины для сравнения с эмпирическими."""
    columns: Dict[str, Any] = {
        "rounds": rounds,
        "devices_per_round": m,
        "devices_total": bounds_stats.devices_required(m, rounds),
        "classical_escape": bounds_stats.classical_escape_probability(rounds),
    }
    if protocol.fcurve is None:
        return columns
    f = protocol.f
    columns["f"] = f
    columns["threshold"] = protocol.resolved_threshold(rounds)
    if f < 1:
        columns["f_power"] = f ** rounds
        columns["chernoff"] = bounds_stats.chernoff_abort_bound(f, rounds).bound
        columns["hoeffding"] = bounds_stats.hoeffding_false_abort_bound(f, m, rounds).bound
        columns["honest_mu"] = bounds_stats.honest_failure_budget(f, m)
    return columns


def build_protocol(config: ExperimentConfig):
    """
    Конфигурация протокола, базовый источник и распределение для one-shot.

    Returns:
        (ProtocolConfig, источник или None, распределение или None)
    """
    p = config.protocol
    curve = read_fcurve(p.fcurve_file) if p.fcurve_file is not None else None
    template = parse_device_spec(p.device)

    dist = read_distribution(p.source_file) if p.source_file is not None else None
    if p.mode == MODE_ONE_SHOT:
        if dist is None:
            dist = parse_source_spec(p.source, p.n).next_distribution()
        digits = one_shot_family(dist).m_count
        devices = [template.fresh() for _ in range(digits)]
        protocol = ProtocolConfig(p.epsilon, p.delta, devices, mode=p.mode, fcurve=curve)
        return protocol, None, dist

    oracle = oracle_from_distribution(dist) if dist is not None else parse_source_spec(p.source, p.n)
    family = resolve_family(oracle.spec.n, p.family_delta, config.seed, config.witness_limit, p.family_file)
    if family.n != oracle.spec.n:
        raise ConfigError(f"n семейства ({family.n}) не совпадает с длиной блока источника ({oracle.spec.n})")
    devices = [template.fresh() for _ in range(family.m_count)]
    protocol = ProtocolConfig(
        p.epsilon, p.delta, devices, family=family, mode=p.mode, rounds=p.rounds, fcurve=curve, threshold=p.threshold
    )
    return protocol, oracle, None


def run_trials(
    protocol: ProtocolConfig,
    oracle: Optional[BlockSourceOracle],
    dist: Optional[OutcomeDistribution],
    trials: int,
    seed: int,
    threads: int,
) -> List[Dict]:
    """
    Независимые испытания; порядок строк не зависит от числа потоков.

    Returns:
        Строки испытаний по возрастанию номера
    """

    def run_one(trial: int) -> Dict:
        rng = trial_stream(seed, trial)
        try:
            report = run_protocol(protocol, rng, oracle=oracle.fresh() if oracle else None, dist=dist, seed=seed)
        except SourceContractError as e:
            logging.LoggerAdapter(logger, {"trial": trial}).warning(f"Нарушение контракта источника: {e}")
            return _trial_row(trial, None, str(e))
        return _trial_row(trial, report)

    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(run_one, range(trials)))


def run_experiment(config: ExperimentConfig) -> SummaryReport:
    """
    Выполнение эксперимента.

    Args:
        config: Проверенная конфигурация

    Returns:
        Сводный отчет (запись файлов выполняет обработчик команды)
    """
    config.validate()
    protocol, oracle, dist = build_protocol(config)
    rounds = protocol.resolved_rounds()
    m = len(protocol.devices)
    logger.info(
        f"Эксперимент: режим {protocol.mode}, {config.trials} испытаний, раундов {rounds}, "
        f"устройств в раунде {m}, потоков {config.threads}"
    )
    rows = run_trials(protocol, oracle, dist, config.trials, config.seed, config.threads)
    aggregates = aggregate_rows(rows)
    settings = {
        "seed": config.seed,
        "rng": RNG_ALGORITHM,
        "trials": config.trials,
        "mode": protocol.mode,
        "epsilon": protocol.epsilon,
        "delta": protocol.delta,
        "device": config.protocol.device,
        "source": oracle.name if oracle is not None else "distribution",
        "family_size": protocol.family.m_count if protocol.family is not None else m,
    }
    logger.info(f"Эксперимент завершен: доля прерываний {aggregates['abort_rate']:.6g}")
    return SummaryReport(rows=rows, aggregates=aggregates, analytic=analytic_columns(protocol, rounds, m), settings=settings)


def bounds_table(curve: FCurve, delta: float, m: int, epsilons: Optional[Sequence[float]] = None) -> List[Dict]:
    """
    Таблица оценок по точкам eps.

    Args:
        curve: Кривая f(eps)
        delta: Допустимая вероятность неудачи
        m: Число устройств в раунде
        epsilons: Точки eps (по умолчанию - точки таблицы)

    Returns:
        Строки: eps, f, l, l_robust, ratio, s, mu, T, оценки Чернова и Хёфдинга, число устройств
    """
    rows = []
    for eps in epsilons if epsilons is not None else curve.epsilons:
        f = bounds_stats.f_of_eps(curve, eps)
        row: Dict[str, Any] = {"epsilon": eps, "f": f, "s": bounds_stats.scaling_factor(f),
                               "mu": bounds_stats.honest_failure_budget(f, m)}
        try:
            l_plain = bounds_stats.rounds_for_value(f, delta)
            l_robust = bounds_stats.robust_rounds_for_value(f, delta)
        except UndefinedRoundsError:
            logger.warning(f"eps={eps}: f = 1, число раундов не определено")
            rows.append(row)
            continue
        chernoff = bounds_stats.chernoff_abort_bound(f, l_robust)
        hoeffding = bounds_stats.hoeffding_false_abort_bound(f, m, l_robust)
        row.update({
            "l": l_plain,
            "l_robust": l_robust,
            "ratio": l_robust / l_plain,
            "T": bounds_stats.robust_threshold(f, l_robust),
            "chernoff": chernoff.bound,
            "chernoff_exact": chernoff.exact,
            "hoeffding": hoeffding.bound,
            "hoeffding_exact": hoeffding.exact,
            "devices": bounds_stats.devices_required(m, l_plain),
            "devices_robust": bounds_stats.devices_required(m, l_robust),
        })
        rows.append(row)
    return rows


def cheater_escape_rate(f: float, rounds: int, trials: int, seed: int, threads: int = 1) -> float:
    """
    Доля запусков устойчивого протокола, в которых классический обманщик не обнаружен.

    Один раунд - одно устройство с равномерной настройкой (тождественная
    хеш-функция на 2-битном равномерном источнике), порог T = floor(l (1 - f) / 2).
    """
    family = build_table_family(2, [[0, 1, 2, 3]])
    protocol = ProtocolConfig(
        epsilon=0.25, delta=0.5, devices=[DeterministicLHV(CHEATER_STRATEGY)], family=family,
        mode=MODE_ROBUST, rounds=rounds, threshold=bounds_stats.robust_threshold(f, rounds),
    )
    source = uniform_oracle(2)

    def run_one(trial: int) -> bool:
        rng = trial_stream(seed, trial)
        return not run_robust(source.fresh(), rounds, protocol, rng, seed).aborted

    with ThreadPoolExecutor(max_workers=threads) as executor:
        escaped = sum(executor.map(run_one, range(trials)))
    return escaped / trials


def sweep_table(
    f: float,
    max_rounds: int,
    m: int,
    empirical_trials: int = 0,
    seed: Optional[int] = None,
    threads: int = 1,
) -> List[Dict]:
    """
    Таблица для графиков: l = 1..L, оценки и (по желанию) эмпирическая доля.

    Args:
        f: Значение f(eps)
        max_rounds: L
        m: Устройств в раунде (для Хёфдинга)
        empirical_trials: Испытаний на точку для эмпирического столбца (0 - без него)
        seed: Seed эмпирических испытаний
        threads: Число потоков

    Returns:
        Строки по одной на l
    """
    if max_rounds < 1:
        raise InvalidInputError("Длина развертки должна быть >= 1")
    seed = Config.DEFAULT_SEED if seed is None else seed
    rows = []
    for rounds in range(1, max_rounds + 1):
        chernoff = bounds_stats.chernoff_abort_bound(f, rounds)
        hoeffding = bounds_stats.hoeffding_false_abort_bound(f, m, rounds)
        row: Dict[str, Any] = {
            "l": rounds,
            "T": bounds_stats.robust_threshold(f, rounds),
            "chernoff": chernoff.bound,
            "chernoff_exact": chernoff.exact,
            "hoeffding": hoeffding.bound,
            "hoeffding_exact": hoeffding.exact,
            "f_power": f ** rounds,
            "classical_escape": bounds_stats.classical_escape_probability(rounds),
        }
        if empirical_trials > 0:
            row["empirical_escape"] = cheater_escape_rate(f, rounds, empirical_trials, seed + rounds, threads)
        rows.append(row)
    return rows


@dataclass
class BoundsParams:
    curve: FCurve
    delta: float
    m: int
    epsilons: Optional[List[float]] = None
    sweep_f: Optional[float] = None
    sweep_rounds: int = 0
    empirical_trials: int = 0
    seed: Optional[int] = None
    threads: int = 1


def emit_bound_tables(params: BoundsParams) -> Dict[str, List[Dict]]:
    """
    Таблица оценок и (при sweep_rounds > 0) развертка по l.

    Returns:
        {"bounds": строки, "sweep": строки}
    """
    tables = {"bounds": bounds_table(params.curve, params.delta, params.m, params.epsilons)}
    if params.sweep_rounds > 0:
        f = params.sweep_f if params.sweep_f is not None else tables["bounds"][0]["f"]
        tables["sweep"] = sweep_table(
            f, params.sweep_rounds, params.m, params.empirical_trials, params.seed, params.threads
        )
    logger.info(f"Построены таблицы оценок: {', '.join(f'{k}={len(v)}' for k, v in tables.items())}")
    return tables


def load_curve(path: Optional[Path]) -> FCurve:
    """Кривая из файла или из Config.FCURVE_PATH."""
    path = Path(path) if path is not None else Config.FCURVE_PATH
    if not path.exists():
        raise ConfigError(f"Файл кривой f(eps) не найден: {path}")
    return read_fcurve(path)
