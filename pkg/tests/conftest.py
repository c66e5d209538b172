import json
from pathlib import Path

import pytest

from somekone.catalog import load_catalog
from somekone.config import EngineConfig

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "somekone" / "fixtures"


@pytest.fixture(scope="session")
def catalog_bytes() -> bytes:
    return (FIXTURES / "catalog_small.json").read_bytes()


@pytest.fixture(scope="session")
def catalog(catalog_bytes):
    return load_catalog(catalog_bytes)


@pytest.fixture(scope="session")
def catalog_doc(catalog_bytes):
    return json.loads(catalog_bytes)


@pytest.fixture()
def config() -> EngineConfig:
    return EngineConfig(seed=7)


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES
