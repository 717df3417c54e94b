"""Модели источников, семейства хеш-функций, устройства Мермина и протоколы."""
