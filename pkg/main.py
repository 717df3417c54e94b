"""Главный модуль: командная строка симулятора извлечения случайности на устройствах Мермина."""

import argparse
import sys
from typing import List, Optional

from config import Config
from logger import set_level, setup_logger
from handlers.bounds_handler import handle_bounds
from handlers.decompose_handler import handle_decompose
from handlers.family_handler import handle_family_build, handle_family_verify
from handlers.run_handler import handle_run
from processors.covering import MODE_EXHAUSTIVE, MODE_SAMPLED
from processors.errors import exit_code_for
from processors.hash_families import COVERING_DELTA_LIMIT
from processors.protocol_engine import MODES
from processors.report_generator import FORMAT_CSV, FORMAT_JSON
from utils.cache import get_cache
from utils.cleanup import cleanup_partial_files

# Настройка логгера
logger = setup_logger()

EXIT_INTERRUPTED = 130


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="главный 64-битный seed")
    common.add_argument("--out", default=None, help="файл результата (по умолчанию stdout)")
    common.add_argument("--format", choices=(FORMAT_JSON, FORMAT_CSV), default=FORMAT_JSON, help="формат вывода")
    common.add_argument("--threads", type=int, default=None, help="число потоков испытаний")
    common.add_argument("--verbose", action="store_true", help="подробный лог (DEBUG)")
    return common


def _covering_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=int, default=None, help="длина входа в битах")
    parser.add_argument("--delta", type=float, default=1.0 / 16, help=f"параметр зависимости (< {COVERING_DELTA_LIMIT})")
    parser.add_argument("--full", action="store_true", help="полное семейство {0,1,2,3}^N (n <= 3)")
    parser.add_argument("--family-file", default=None, help="JSON файл семейства")
    parser.add_argument("--mode", choices=(MODE_EXHAUSTIVE, MODE_SAMPLED), default=MODE_EXHAUSTIVE)
    parser.add_argument("--budget", type=int, default=None, help="предел числа 4-подмножеств для полного перебора")
    parser.add_argument("--trials", type=int, default=10 ** 6, help="размер выборки в режиме sampled")
    parser.add_argument("--witness-limit", type=int, default=None, help="сколько членов семейства просматривать")


def build_parser() -> argparse.ArgumentParser:
    """Разбор аргументов: подкоманды run, bounds, family build|verify, decompose."""
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="ghz-extractor",
        description="Извлечение случайности из слабых источников на устройствах Мермина (GHZ)",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", parents=[common], help="эксперимент Monte Carlo")
    run.add_argument("--config", default=None, help="JSON конфигурация эксперимента")
    run.add_argument("--mode", choices=MODES, default=None)
    run.add_argument("--epsilon", type=float, default=None)
    run.add_argument("--delta", type=float, default=None)
    run.add_argument("--rounds", type=int, default=None)
    run.add_argument("--threshold", type=int, default=None)
    run.add_argument("--device", default=None, help="ghz | lhv:<i> | noisy:<mu> | adversary:<name>")
    run.add_argument("--source", default=None, help="uniform | flat | adaptive | sv:<eps>")
    run.add_argument("--n", type=int, default=None, help="длина блока источника")
    run.add_argument("--family-delta", type=float, default=None)
    run.add_argument("--family-file", default=None)
    run.add_argument("--source-file", default=None)
    run.add_argument("--fcurve", default=None, help="CSV кривой f(eps)")
    run.add_argument("--trials", type=int, default=None)
    run.add_argument("--xlsx", default=None, help="дополнительный Excel отчет")
    run.set_defaults(handler=handle_run)

    bounds = commands.add_parser("bounds", parents=[common], help="таблица аналитических оценок")
    bounds.add_argument("--fcurve", default=None, help=f"CSV кривой f(eps) (по умолчанию {Config.FCURVE_PATH.name})")
    bounds.add_argument("--delta", type=float, required=True)
    bounds.add_argument("--m", type=int, default=1, help="устройств в раунде")
    bounds.add_argument("--epsilon", type=float, nargs="*", default=None, help="точки eps (по умолчанию - точки таблицы)")
    bounds.add_argument("--sweep-rounds", type=int, default=0, help="развертка l = 1..L")
    bounds.add_argument("--sweep-f", type=float, default=None)
    bounds.add_argument("--sweep-out", default=None)
    bounds.add_argument("--empirical-trials", type=int, default=0)
    bounds.add_argument("--xlsx", default=None)
    bounds.set_defaults(handler=handle_bounds)

    family = commands.add_parser("family", help="семейства хеш-функций")
    family_commands = family.add_subparsers(dest="family_command", required=True)
    build = family_commands.add_parser("build", parents=[common], help="построение семейства")
    _covering_flags(build)
    build.add_argument("--prune", action="store_true", help="сузить до свидетелей покрытия")
    build.set_defaults(handler=handle_family_build)
    verify = family_commands.add_parser("verify", parents=[common], help="проверка покрытия")
    _covering_flags(verify)
    verify.set_defaults(handler=handle_family_verify)

    decompose = commands.add_parser("decompose", parents=[common], help="разложение на плоские компоненты")
    decompose.add_argument("--source-file", required=True, help='JSON {"n": int, "probs": {...}}')
    decompose.add_argument("--support-size", type=int, default=4)
    decompose.set_defaults(handler=handle_decompose)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Основная функция запуска."""
    args = build_parser().parse_args(argv)
    if args.verbose:
        set_level("DEBUG")
    try:
        Config.validate()
        Config.ensure_output_dir()
        cleanup_partial_files(Config.OUTPUT_PATH)
        get_cache().clear_old()
        return args.handler(args)
    except ValueError as e:
        logger.error(f"Ошибка: {e}")
        logger.debug("Подробности", exc_info=True)
        return exit_code_for(e)
    except KeyboardInterrupt:
        logger.info("Получен сигнал прерывания, остановка...")
        return EXIT_INTERRUPTED
    except Exception as e:
        logger.error(f"Критическая ошибка: {e}", exc_info=True)
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
