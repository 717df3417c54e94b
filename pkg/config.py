"""Загрузка конфигурации из переменных окружения."""

import os
from pathlib import Path
from dotenv import load_dotenv

from processors.errors import ConfigError

# Загрузка переменных окружения из .env файла
load_dotenv()

PROJECT_ROOT = Path(__file__).resolve().parent


class Config:
    """Класс для хранения конфигурации приложения."""

    # Logging Configuration
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")

    # Output / cache paths
    OUTPUT_PATH: Path = Path(os.getenv("OUTPUT_PATH", "./output"))
    CACHE_PATH: Path = Path(os.getenv("CACHE_PATH", "./cache"))

    # Бюджет полного перебора 4-подмножеств при проверке покрытия
    COVERING_BUDGET: int = int(os.getenv("COVERING_BUDGET", "100000000"))

    # Сколько членов семейства просматривается при поиске свидетелей покрытия
    WITNESS_LIMIT: int = int(os.getenv("WITNESS_LIMIT", "4096"))

    # Monte Carlo
    DEFAULT_SEED: int = int(os.getenv("DEFAULT_SEED", "20140101"))
    THREADS: int = int(os.getenv("THREADS", "4"))

    # Таблица f(eps); поставляемая кривая носит иллюстративный характер
    FCURVE_PATH: Path = Path(os.getenv("FCURVE_PATH", str(PROJECT_ROOT / "data" / "fcurve_sample.csv")))

    @classmethod
    def validate(cls) -> bool:
        """Проверка корректности параметров конфигурации."""
        if cls.COVERING_BUDGET <= 0:
            raise ConfigError("COVERING_BUDGET должен быть положительным")
        if cls.WITNESS_LIMIT <= 0:
            raise ConfigError("WITNESS_LIMIT должен быть положительным")
        if cls.THREADS <= 0:
            raise ConfigError("THREADS должен быть положительным")
        if not 0 <= cls.DEFAULT_SEED < 2 ** 64:
            raise ConfigError("DEFAULT_SEED должен быть 64-битным неотрицательным числом")
        return True

    @classmethod
    def ensure_output_dir(cls) -> None:
        """Создание директории для выходных файлов, если её нет."""
        cls.OUTPUT_PATH.mkdir(parents=True, exist_ok=True)

    @classmethod
    def output_file(cls, name: str) -> Path:
        """Относительные пути результатов отсчитываются от OUTPUT_PATH."""
        return (cls.OUTPUT_PATH / name).resolve()
