"""Потоки случайности, кэш семейств и атомарная запись файлов."""
