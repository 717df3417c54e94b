"""Обработчики команд family build и family verify."""

import argparse
import json
import sys
from pathlib import Path

from config import Config
from logger import get_logger
from processors.covering import prune_family, verify_covering
from processors.errors import ConfigError, EXIT_FAILURE, EXIT_OK
from processors.hash_families import (
    HashFamily,
    build_derandomized_family,
    build_full_family,
    family_from_json,
    family_to_json,
)
from processors.report_generator import to_json_line
from utils.cleanup import atomic_outputs

logger = get_logger("family_handler")


def _load_or_build(args: argparse.Namespace) -> HashFamily:
    if getattr(args, "family_file", None):
        path = Path(args.family_file)
        if not path.exists():
            raise ConfigError(f"Файл семейства не найден: {path}")
        try:
            return family_from_json(json.loads(path.read_text(encoding="utf-8")))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path.name}: строка {e.lineno}: {e.msg}")
    if args.n is None:
        raise ConfigError("Укажите --n или --family-file")
    if args.full:
        return build_full_family(args.n)
    return build_derandomized_family(args.n, args.delta)


def _seed(args: argparse.Namespace) -> int:
    return args.seed if args.seed is not None else Config.DEFAULT_SEED


def _write(payload: dict, out) -> None:
    if out is None:
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
        return
    target = Config.output_file(out)
    with atomic_outputs([target]) as temp:
        temp[target].write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    logger.info(f"Семейство записано: {target}")


def handle_family_build(args: argparse.Namespace) -> int:
    """
    Построение семейства; с --prune - проверка покрытия и сужение до свидетелей.

    Args:
        args: Разобранные аргументы командной строки

    Returns:
        Код завершения
    """
    family = _load_or_build(args)
    if args.prune:
        report = verify_covering(
            family, mode=args.mode, trials=args.trials, budget=args.budget,
            witness_limit=args.witness_limit, seed=_seed(args),
        )
        if not report.covering:
            logger.error(f"Семейство не покрывает {report.uncovered} подмножеств, сужение невозможно")
            return EXIT_FAILURE
        family = prune_family(family, report)
    _write(family_to_json(family), args.out)
    return EXIT_OK


def handle_family_verify(args: argparse.Namespace) -> int:
    """
    Проверка покрытия всех 4-подмножеств.

    Returns:
        0, если семейство покрывает все проверенные подмножества, иначе 1
    """
    family = _load_or_build(args)
    report = verify_covering(
        family, mode=args.mode, trials=args.trials, budget=args.budget,
        witness_limit=args.witness_limit, seed=_seed(args),
    )
    sys.stdout.write(to_json_line(report.to_json()) + "\n")
    if not report.covering:
        logger.warning(f"Непокрытых подмножеств: {report.uncovered}")
        return EXIT_FAILURE
    return EXIT_OK
