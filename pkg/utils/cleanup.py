"""Запись выходных файлов через временные копии и удаление частичных результатов."""

from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, Optional, Sequence

from logger import get_logger

logger = get_logger("cleanup")

TEMP_SUFFIX = ".partial"


def remove_file(file_path: Path) -> bool:
    """
    Удаление одного файла.

    Args:
        file_path: Путь к файлу для удаления

    Returns:
        True если файл удален, False если его не было или удаление не удалось
    """
    try:
        if file_path.exists():
            file_path.unlink()
            logger.debug(f"Файл удален: {file_path.name}")
            return True
        logger.debug(f"Файл не существует: {file_path.name}")
        return False
    except OSError as e:
        logger.error(f"Ошибка при удалении файла {file_path.name}: {e}", exc_info=True)
        return False


def temp_path_for(target: Path) -> Path:
    """Временный соседний файл для target."""
    # Расширение сохраняется: openpyxl проверяет его при чтении
    return target.with_name(f"{target.stem}{TEMP_SUFFIX}{target.suffix}")


@contextmanager
def atomic_outputs(targets: Sequence[Optional[Path]]) -> Iterator[Dict[Path, Path]]:
    """
    Контекст записи: выдает словарь цель -> временный путь.

    При успешном выходе временные файлы переименовываются в цели, при
    любом исключении удаляются, и частичные результаты не остаются.

    Args:
        targets: Итоговые пути (None пропускаются)

    Yields:
        Словарь {итоговый путь: временный путь}
    """
    mapping = {Path(t): temp_path_for(Path(t)) for t in targets if t is not None}
    for target in mapping:
        target.parent.mkdir(parents=True, exist_ok=True)
    try:
        yield mapping
    except BaseException:
        removed = sum(remove_file(temp) for temp in mapping.values())
        if removed:
            logger.info(f"Удалено частичных файлов: {removed}")
        raise
    for target, temp in mapping.items():
        if temp.exists():
            temp.replace(target)
            logger.debug(f"Записан файл: {target}")


def cleanup_partial_files(directory: Path) -> int:
    """
    Удаление оставшихся временных файлов в директории.

    Returns:
        Количество удаленных файлов
    """
    if not directory.exists():
        return 0
    deleted_count = sum(remove_file(path) for path in directory.glob(f"*{TEMP_SUFFIX}*"))
    if deleted_count > 0:
        logger.info(f"Очищено временных файлов: {deleted_count}")
    return deleted_count
