"""Тесты симулятора."""
