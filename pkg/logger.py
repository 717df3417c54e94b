"""Настройка логгера для приложения."""

import logging
import sys
from datetime import datetime
from typing import Optional, Union

from config import Config

ROOT_LOGGER_NAME = "GHZExtractor"


class CustomFormatter(logging.Formatter):
    """Кастомный форматтер для логов."""

    def format(self, record: logging.LogRecord) -> str:
        """Форматирование записи лога."""
        # Номер испытания Monte Carlo из extra, если есть
        trial = getattr(record, "trial", None)
        trial_info = f" (Trial: {trial})" if trial is not None else ""

        timestamp = datetime.fromtimestamp(record.created).strftime("%Y-%m-%d %H:%M:%S")

        log_message = (
            f"[{timestamp}] "
            f"[{record.levelname}] "
            f"[{record.module}] - "
            f"{record.getMessage()}"
            f"{trial_info}"
        )
        return log_message


def _resolve_level(level: Optional[str]) -> int:
    return getattr(logging, (level or Config.LOG_LEVEL).upper(), logging.INFO)


def setup_logger(
    name: str = ROOT_LOGGER_NAME,
    trial: Optional[int] = None,
    level: Optional[str] = None,
) -> Union[logging.Logger, logging.LoggerAdapter]:
    """
    Настройка и возврат логгера.

    Args:
        name: Имя логгера
        trial: Номер испытания Monte Carlo (опционально)
        level: Уровень логирования (по умолчанию Config.LOG_LEVEL)

    Returns:
        Настроенный логгер
    """
    logger = logging.getLogger(name)
    logger.setLevel(_resolve_level(level))

    # Удаление существующих обработчиков
    logger.handlers.clear()

    # stdout занят JSON/CSV выводом, поэтому логи идут в stderr
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(logging.DEBUG)
    console_handler.setFormatter(CustomFormatter())

    logger.addHandler(console_handler)
    logger.propagate = False

    if trial is not None:
        return logging.LoggerAdapter(logger, {"trial": trial})

    return logger


def get_logger(module_name: str, trial: Optional[int] = None) -> Union[logging.Logger, logging.LoggerAdapter]:
    """
    Получение логгера для модуля.

    Обработчик и уровень задаются только при первом обращении, повторные
    вызовы (в том числе из рабочих потоков) их не сбрасывают.

    Args:
        module_name: Имя модуля
        trial: Номер испытания Monte Carlo (опционально)

    Returns:
        Логгер для модуля
    """
    name = f"{ROOT_LOGGER_NAME}.{module_name}"
    logger = logging.getLogger(name)
    if not logger.handlers:
        logger = setup_logger(name)
    if trial is not None:
        return logging.LoggerAdapter(logger, {"trial": trial})
    return logger


def set_level(level: str) -> None:
    """
    Изменение уровня всех логгеров приложения (флаг --verbose, поле verbosity).

    Args:
        level: Имя уровня (DEBUG, INFO, ...)
    """
    resolved = _resolve_level(level)
    for name, item in logging.Logger.manager.loggerDict.items():
        if isinstance(item, logging.Logger) and name.startswith(ROOT_LOGGER_NAME):
            item.setLevel(resolved)
