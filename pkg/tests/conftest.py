"""Общие фикстуры тестов."""

import json

import pytest

from config import Config
from processors.hash_families import build_table_family, family_to_json
from utils import cache as cache_module
from utils.cache import FamilyCache


@pytest.fixture(autouse=True)
def isolated_cache(tmp_path_factory, monkeypatch):
    """Каждый тест работает с собственным кэшем семейств."""
    instance = FamilyCache(cache_dir=tmp_path_factory.mktemp("cache"))
    monkeypatch.setattr(cache_module, "_cache_instance", instance)
    return instance


@pytest.fixture(autouse=True)
def isolated_output(tmp_path_factory, monkeypatch):
    """Относительные пути результатов ведут во временную директорию."""
    output = tmp_path_factory.mktemp("output")
    monkeypatch.setattr(Config, "OUTPUT_PATH", output)
    return output


@pytest.fixture
def identity_family():
    """Одна функция на n = 2: настройка совпадает с входом."""
    return build_table_family(2, [[0, 1, 2, 3]])


@pytest.fixture
def three_member_family():
    return build_table_family(2, [[0, 1, 2, 3], [1, 2, 3, 0], [3, 2, 1, 0]])


@pytest.fixture
def family_file(tmp_path):
    path = tmp_path / "family.json"
    family = build_table_family(2, [[0, 1, 2, 3], [3, 2, 1, 0]])
    path.write_text(json.dumps(family_to_json(family)), encoding="utf-8")
    return path
