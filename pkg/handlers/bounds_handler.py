"""Обработчик команды bounds: таблицы l, l_robust, s, mu и оценок Чернова/Хёфдинга."""

import argparse
import sys

from config import Config
from logger import get_logger
from processors.errors import EXIT_OK
from processors.experiment import BoundsParams, emit_bound_tables, load_curve
from processors.report_generator import render_rows, write_table, write_workbook
from utils.cleanup import atomic_outputs

logger = get_logger("bounds_handler")


def handle_bounds(args: argparse.Namespace) -> int:
    """
    Выполнение команды bounds.

    Args:
        args: Разобранные аргументы командной строки

    Returns:
        Код завершения
    """
    curve = load_curve(args.fcurve)
    params = BoundsParams(
        curve=curve,
        delta=args.delta,
        m=args.m,
        epsilons=args.epsilon,
        sweep_f=args.sweep_f,
        sweep_rounds=args.sweep_rounds,
        empirical_trials=args.empirical_trials,
        seed=args.seed if args.seed is not None else Config.DEFAULT_SEED,
        threads=args.threads or Config.THREADS,
    )
    sweep_out = Config.output_file(args.sweep_out) if args.sweep_out else None
    out = Config.output_file(args.out) if args.out else None
    xlsx = Config.output_file(args.xlsx) if args.xlsx else None

    with atomic_outputs([out, sweep_out, xlsx]) as temp:
        tables = emit_bound_tables(params)
        if out is not None:
            write_table(temp[out], tables["bounds"], args.format)
        if sweep_out is not None and "sweep" in tables:
            write_table(temp[sweep_out], tables["sweep"], args.format)
        if xlsx is not None:
            write_workbook(temp[xlsx], tables, titles={"bounds": f"Оценки при delta={args.delta}, m={args.m}"})

    if out is None:
        sys.stdout.write(render_rows(tables["bounds"], args.format))
    if sweep_out is None and "sweep" in tables:
        sys.stdout.write(render_rows(tables["sweep"], args.format))
    return EXIT_OK
