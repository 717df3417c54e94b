"""Обработчик команды run: эксперимент Monte Carlo по протоколу извлечения."""

import argparse
import json
import sys
from pathlib import Path

from config import Config
from logger import get_logger, set_level
from processors.errors import EXIT_OK
from processors.experiment import (
    TRIAL_COLUMNS,
    ExperimentConfig,
    load_experiment_config,
    run_experiment,
)
from processors.report_generator import FORMAT_CSV, to_json_line, write_csv, write_json_lines, write_workbook
from utils.cleanup import atomic_outputs

logger = get_logger("run_handler")

# Флаг CLI -> поле protocol
_PROTOCOL_FLAGS = {
    "mode": "mode",
    "epsilon": "epsilon",
    "delta": "delta",
    "rounds": "rounds",
    "threshold": "threshold",
    "device": "device",
    "source": "source",
    "n": "n",
    "family_delta": "family_delta",
}
_PATH_FLAGS = {"family_file": "family_file", "source_file": "source_file", "fcurve": "fcurve_file"}


def apply_overrides(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    """Флаги командной строки перекрывают значения файла конфигурации."""
    for flag, name in _PROTOCOL_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(config.protocol, name, value)
    for flag, name in _PATH_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(config.protocol, name, Path(value).resolve())
    for flag in ("seed", "trials", "threads"):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(config, flag, value)
    if getattr(args, "out", None):
        target = Config.output_file(args.out)
        if args.format == FORMAT_CSV:
            config.output.csv = target
        else:
            config.output.json = target
    if getattr(args, "xlsx", None):
        config.output.xlsx = Config.output_file(args.xlsx)
    if getattr(args, "verbose", False):
        config.verbosity = "DEBUG"
    return config


def handle_run(args: argparse.Namespace) -> int:
    """
    Выполнение команды run.

    Args:
        args: Разобранные аргументы командной строки

    Returns:
        Код завершения
    """
    config = load_experiment_config(Path(args.config)) if args.config else ExperimentConfig()
    config = apply_overrides(config, args)
    set_level(config.verbosity)
    # Проверка конфигурации до любых вычислений и записи файлов
    config.validate()

    outputs = config.output
    with atomic_outputs([outputs.json, outputs.csv, outputs.xlsx]) as temp:
        report = run_experiment(config)
        if outputs.json is not None:
            write_json_lines(temp[outputs.json], report.json_records())
        if outputs.csv is not None:
            write_csv(temp[outputs.csv], report.rows, TRIAL_COLUMNS)
        if outputs.xlsx is not None:
            summary_rows = [{"name": key, "value": value} for key, value in {**report.settings, **report.analytic}.items()]
            aggregate_rows = [
                {"name": key, "value": json.dumps(value) if isinstance(value, (dict, list)) else value}
                for key, value in report.aggregates.items()
            ]
            write_workbook(
                temp[outputs.xlsx],
                {"Параметры": summary_rows, "Итоги": aggregate_rows, "Испытания": report.rows},
                titles={"Параметры": "Параметры и аналитические оценки", "Итоги": "Эмпирические итоги"},
            )

    if outputs.json is None and outputs.csv is None:
        sys.stdout.write(to_json_line(report.to_dict()) + "\n")
    logger.info(
        f"Испытаний: {report.aggregates['trials']}, прерываний: {report.aggregates['aborted']}, "
        f"ошибок источника: {report.aggregates['errors']}"
    )
    return EXIT_OK
