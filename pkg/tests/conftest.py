"""Shared fixtures and the per-criterion PASS/FAIL summary printed after the run."""

import time

import pytest

from qspectral import pipeline
from qspectral.config import parse_config_text

SWEEP_NS = tuple(range(300, 1001, 100))
REPETITIONS = 10
WORKERS = 4

_CRITERIA = {}


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    _CRITERIA[number] = (title, bool(ok), detail)


@pytest.fixture
def criterion():
    return record_criterion


def _sweep(mode: str):
    cfg = parse_config_text(
        f"noise.mode = {mode}\n"
        f"run.sweep = {', '.join(map(str, SWEEP_NS))}\n"
        f"run.repetitions = {REPETITIONS}\n"
    )
    start = time.perf_counter()
    result = pipeline.run_sweep(cfg, workers=WORKERS)
    return result, time.perf_counter() - start


@pytest.fixture(scope="session")
def classical_sweep():
    return _sweep("classical")


@pytest.fixture(scope="session")
def quantum_sweep():
    return _sweep("quantum")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title}  [{detail}]")
