"""Чтение таблицы f(eps) из CSV (заголовок "epsilon,v") или Excel."""

from pathlib import Path

import pandas as pd

from logger import get_logger
from processors.bounds_stats import FCurve
from processors.errors import ConfigError, InvalidInputError

logger = get_logger("fcurve_reader")

REQUIRED_COLUMNS = ("epsilon", "v")


def read_fcurve(file_path: Path) -> FCurve:
    """
    Загрузка кривой f(eps).

    Строки, начинающиеся с '#', считаются комментариями.

    Args:
        file_path: Путь к CSV или XLSX файлу

    Returns:
        Кривая f(eps)

    Raises:
        ConfigError: Если файл отсутствует или не читается
        InvalidInputError: Если таблица нарушает требования к кривой
    """
    file_path = Path(file_path)
    if not file_path.exists():
        raise ConfigError(f"Файл кривой f(eps) не найден: {file_path}")

    logger.debug(f"Чтение кривой f(eps): {file_path}")
    try:
        if file_path.suffix.lower() in (".xlsx", ".xlsm"):
            frame = pd.read_excel(file_path, engine="openpyxl")
        else:
            frame = pd.read_csv(file_path, comment="#", skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, ValueError) as e:
        raise ConfigError(f"Не удалось прочитать файл кривой {file_path.name}: {e}")

    frame.columns = [str(c).strip().lower() for c in frame.columns]
    missing = [c for c in REQUIRED_COLUMNS if c not in frame.columns]
    if missing:
        raise ConfigError(f"В файле {file_path.name} нет столбцов: {', '.join(missing)} (ожидается заголовок epsilon,v)")

    frame = frame[list(REQUIRED_COLUMNS)].dropna()
    try:
        frame = frame.astype(float)
    except ValueError as e:
        raise InvalidInputError(f"Нечисловое значение в кривой {file_path.name}: {e}")

    points = tuple((float(eps), float(v)) for eps, v in frame.itertuples(index=False))
    curve = FCurve(points=points)
    logger.info(f"Загружена кривая f(eps): {len(points)} точек, eps от {points[0][0]} до {points[-1][0]}")
    return curve
