"""Обработчик команды decompose: разложение распределения на плоские компоненты."""

import argparse
import json
import sys
from pathlib import Path

from config import Config
from logger import get_logger
from processors.errors import EXIT_OK
from processors.experiment import read_distribution
from processors.source_models import caratheodory_decompose, min_entropy, reconstruction_error
from utils.cleanup import atomic_outputs

logger = get_logger("decompose_handler")


def handle_decompose(args: argparse.Namespace) -> int:
    """
    Выполнение команды decompose.

    Args:
        args: Разобранные аргументы командной строки

    Returns:
        Код завершения
    """
    dist = read_distribution(Path(args.source_file))
    logger.info(f"Распределение: n={dist.n}, исходов {len(dist.probs)}, min-энтропия {min_entropy(dist):.6g}")
    components = caratheodory_decompose(dist, support_size=args.support_size)
    logger.info(
        f"Компонент: {len(components)}, ошибка восстановления {reconstruction_error(dist, components):.3g}"
    )
    text = json.dumps([c.to_json() for c in components], indent=2) + "\n"
    if args.out:
        target = Config.output_file(args.out)
        with atomic_outputs([target]) as temp:
            temp[target].write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK
