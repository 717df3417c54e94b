"""Модуль для записи отчетов: JSON lines, CSV и Excel со сводкой и таблицами оценок."""

import csv
import io
import json
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import pandas as pd
from openpyxl import Workbook, load_workbook
from openpyxl.styles import Alignment, Border, Font, PatternFill, Side
from openpyxl.utils import get_column_letter

from logger import get_logger

logger = get_logger("report_generator")

CSV_LINE_TERMINATOR = "\r\n"
FORMAT_JSON = "json"
FORMAT_CSV = "csv"


def _json_default(value):
    # numpy скаляры и прочие числа
    if hasattr(value, "item"):
        return value.item()
    raise TypeError(f"Тип {type(value).__name__} не сериализуется в JSON")


def to_json_line(record: Dict) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False, default=_json_default)


def write_json_lines(path: Path, records: Iterable[Dict]) -> int:
    """
    Запись записей по одной на строку.

    Args:
        path: Файл назначения
        records: Записи

    Returns:
        Количество записанных строк
    """
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(to_json_line(record) + "\n")
            count += 1
    logger.debug(f"Записано JSON строк: {count} в {path.name}")
    return count


def _frame(rows: Sequence[Dict], columns: Optional[Sequence[str]]) -> pd.DataFrame:
    # Целые рядом с None остаются целыми
    frame = pd.DataFrame(list(rows), dtype=object)
    if columns is not None:
        frame = frame.reindex(columns=list(columns))
    return frame


def write_csv(path: Path, rows: Sequence[Dict], columns: Optional[Sequence[str]] = None) -> None:
    """CSV с кавычками по RFC 4180 и окончанием строк CRLF."""
    _frame(rows, columns).to_csv(
        path, index=False, lineterminator=CSV_LINE_TERMINATOR, quoting=csv.QUOTE_MINIMAL, encoding="utf-8"
    )
    logger.debug(f"Записан CSV: {path.name} ({len(rows)} строк)")


def render_rows(rows: Sequence[Dict], fmt: str, columns: Optional[Sequence[str]] = None) -> str:
    """
    Таблица в виде текста для stdout.

    Args:
        rows: Строки таблицы
        fmt: json (JSON lines) или csv
        columns: Порядок столбцов

    Returns:
        Текст таблицы
    """
    if fmt == FORMAT_JSON:
        return "".join(to_json_line(row) + "\n" for row in rows)
    if fmt == FORMAT_CSV:
        buffer = io.StringIO()
        _frame(rows, columns).to_csv(buffer, index=False, lineterminator=CSV_LINE_TERMINATOR)
        return buffer.getvalue()
    raise ValueError(f"Неизвестный формат вывода: {fmt}")


def write_table(path: Path, rows: Sequence[Dict], fmt: str, columns: Optional[Sequence[str]] = None) -> None:
    if fmt == FORMAT_CSV:
        write_csv(path, rows, columns)
    else:
        write_json_lines(path, rows)


def _fill_sheet(sheet, title: str, rows: Sequence[Dict], columns: Sequence[str]) -> None:
    header_font = Font(bold=True, size=12, color="FFFFFF")
    header_fill = PatternFill(start_color="366092", end_color="366092", fill_type="solid")
    border = Border(
        left=Side(style="thin"),
        right=Side(style="thin"),
        top=Side(style="thin"),
        bottom=Side(style="thin"),
    )
    center_alignment = Alignment(horizontal="center", vertical="center")

    sheet.merge_cells(start_row=1, start_column=1, end_row=1, end_column=max(len(columns), 1))
    title_cell = sheet.cell(row=1, column=1, value=title)
    title_cell.font = Font(bold=True, size=14)
    title_cell.alignment = center_alignment

    for col, name in enumerate(columns, start=1):
        cell = sheet.cell(row=3, column=col, value=name)
        cell.font = header_font
        cell.fill = header_fill
        cell.border = border
        cell.alignment = center_alignment

    for offset, row in enumerate(rows):
        for col, name in enumerate(columns, start=1):
            value = row.get(name)
            if isinstance(value, (dict, list)):
                value = json.dumps(value, ensure_ascii=False)
            cell = sheet.cell(row=4 + offset, column=col, value=value)
            cell.border = border
            if isinstance(value, float):
                cell.number_format = "0.000000"

    # Автоподбор ширины столбцов
    for col, name in enumerate(columns, start=1):
        letter = get_column_letter(col)
        longest = max([len(str(name))] + [len(str(row.get(name, ""))) for row in rows[:200]])
        sheet.column_dimensions[letter].width = min(longest + 2, 40)


def write_workbook(path: Path, sheets: Dict[str, Sequence[Dict]], titles: Optional[Dict[str, str]] = None) -> Path:
    """
    Excel-книга: по листу на таблицу, оформление заголовков и границ.

    Args:
        path: Файл назначения (.xlsx)
        sheets: Имя листа -> строки таблицы
        titles: Имя листа -> заголовок над таблицей

    Returns:
        Путь к сохраненному файлу
    """
    titles = titles or {}
    workbook = Workbook()
    workbook.remove(workbook.active)
    for name, rows in sheets.items():
        rows = list(rows)
        columns: List[str] = []
        for row in rows:
            columns.extend(key for key in row if key not in columns)
        sheet = workbook.create_sheet(name[:31])
        _fill_sheet(sheet, titles.get(name, name), rows, columns)

    try:
        workbook.save(path)
    except OSError as save_error:
        logger.error(f"Ошибка при сохранении файла: {save_error}", exc_info=True)
        raise ValueError(f"Ошибка сохранения файла: {save_error}")
    finally:
        workbook.close()

    # Проверка, что файл открывается
    check = load_workbook(path, read_only=True)
    check.close()
    logger.info(f"Excel отчет создан: {path.name} (размер: {path.stat().st_size} байт)")
    return path
