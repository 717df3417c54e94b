"""Обработчики подкоманд командной строки."""
