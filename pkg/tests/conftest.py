from __future__ import annotations

import pytest

from app.data.models import EMPTY, BitConfiguration, MemoryState

# a = (1,0,1,0), b1 = (1,1,0,1), b2 = (0,0,1,1)
EXAMPLE_ROWS = ((1, 0, 1, 0), (1, 1, 0, 1), (0, 0, 1, 1))
EXAMPLE_AGES = (
    (0, EMPTY, 3, EMPTY),
    (1, 2, EMPTY, 5),
    (EMPTY, EMPTY, 0, 4),
)


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run long statistical reproductions")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte Carlo reproduction, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def example_config() -> BitConfiguration:
    return BitConfiguration.from_rows(EXAMPLE_ROWS)


@pytest.fixture
def example_ages() -> MemoryState:
    return MemoryState.from_lists(EXAMPLE_AGES)


@pytest.fixture
def quiet_env(monkeypatch, tmp_path):
    monkeypatch.setenv("LOG_LEVEL", "WARNING")
    monkeypatch.setenv("QROUTER_OUT_DIR", str(tmp_path / "out"))
    monkeypatch.delenv("QROUTER_THREADS", raising=False)
    monkeypatch.delenv("QROUTER_CHUNK_SAMPLES", raising=False)
    return tmp_path
