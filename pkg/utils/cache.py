"""Модуль для кэширования подсемейств свидетелей покрытия."""

import hashlib
import json
import time
from pathlib import Path
from typing import Dict, Optional

from config import Config
from logger import get_logger

logger = get_logger("cache")


class FamilyCache:
    """Кэш семейств в JSON: построение и проверка покрытия для n >= 6 занимают минуты."""

    def __init__(self, cache_dir: Optional[Path] = None, ttl_hours: int = 24 * 7):
        """
        Инициализация кэша.

        Args:
            cache_dir: Директория для хранения кэша (по умолчанию Config.CACHE_PATH)
            ttl_hours: Время жизни записи в часах
        """
        self.cache_dir = cache_dir or Config.CACHE_PATH
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.ttl_seconds = ttl_hours * 3600
        logger.debug(f"Кэш инициализирован: {self.cache_dir}, TTL: {ttl_hours} часов")

    def _generate_cache_key(self, n: int, delta: float, seed: int, witness_limit: int) -> str:
        """
        Ключ кэша по параметрам построения.

        Args:
            n: Длина входа
            delta: Параметр зависимости
            seed: Seed выбора свидетелей
            witness_limit: Число просматриваемых членов

        Returns:
            SHA-256 от нормализованных параметров
        """
        cache_data = {"n": int(n), "delta": repr(float(delta)), "seed": int(seed), "witness_limit": int(witness_limit)}
        json_str = json.dumps(cache_data, sort_keys=True)
        cache_key = hashlib.sha256(json_str.encode("utf-8")).hexdigest()
        logger.debug(f"Сгенерирован ключ кэша: {cache_key[:16]}...")
        return cache_key

    def _path(self, *params) -> Path:
        return self.cache_dir / f"{self._generate_cache_key(*params)}.json"

    def get(self, n: int, delta: float, seed: int, witness_limit: int) -> Optional[Dict]:
        """
        Получение сериализованного семейства из кэша.

        Returns:
            JSON семейства или None
        """
        cache_file = self._path(n, delta, seed, witness_limit)
        if not cache_file.exists():
            logger.debug("Кэш не найден")
            return None

        try:
            file_age = time.time() - cache_file.stat().st_mtime
            if file_age > self.ttl_seconds:
                logger.debug(f"Кэш устарел (возраст: {file_age / 3600:.1f} часов)")
                cache_file.unlink()
                return None

            with open(cache_file, "r", encoding="utf-8") as f:
                cached = json.load(f)
            logger.info(f"Семейство загружено из кэша: {cache_file.name[:16]}...")
            return cached

        except (OSError, json.JSONDecodeError) as e:
            logger.warning(f"Ошибка при чтении кэша: {e}")
            cache_file.unlink(missing_ok=True)
            return None

    def set(self, n: int, delta: float, seed: int, witness_limit: int, payload: Dict) -> None:
        """Сохранение сериализованного семейства."""
        cache_file = self._path(n, delta, seed, witness_limit)
        try:
            with open(cache_file, "w", encoding="utf-8") as f:
                json.dump(payload, f)
            logger.info(f"Семейство сохранено в кэш: {cache_file.name[:16]}...")
        except OSError as e:
            logger.error(f"Ошибка при сохранении в кэш: {e}", exc_info=True)

    def clear_old(self) -> int:
        """
        Очистка устаревших записей кэша.

        Returns:
            Количество удаленных файлов
        """
        deleted_count = 0
        current_time = time.time()
        for cache_file in self.cache_dir.glob("*.json"):
            if current_time - cache_file.stat().st_mtime > self.ttl_seconds:
                cache_file.unlink(missing_ok=True)
                deleted_count += 1
        if deleted_count > 0:
            logger.info(f"Очищено устаревших записей кэша: {deleted_count}")
        return deleted_count


_cache_instance: Optional[FamilyCache] = None


def get_cache() -> FamilyCache:
    """Получение глобального экземпляра кэша."""
    global _cache_instance
    if _cache_instance is None:
        _cache_instance = FamilyCache()
    return _cache_instance
