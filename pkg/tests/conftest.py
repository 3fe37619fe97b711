from __future__ import annotations

import os

import pytest

from pacvd.frontend import parse_unit

HERE = os.path.dirname(os.path.abspath(__file__))
FIXTURES = os.path.join(HERE, "fixtures")
LISTING1 = os.path.join(FIXTURES, "listing1")
GOLDENS = os.path.join(FIXTURES, "goldens")
DATASET = os.path.join(FIXTURES, "dataset.jsonl")
MOCK_SCRIPT = os.path.join(FIXTURES, "mock_free_rule.json")
SNAPSHOTS = os.path.join(HERE, "snapshots")
LISTING1_FILES = [os.path.join(LISTING1, f) for f in ("sg.c", "blk-core.c", "mempool.c")]


def read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


@pytest.fixture(scope="session")
def listing1_units():
    return [parse_unit(p, read(p)) for p in LISTING1_FILES]


# acceptance criteria outcomes, reported once at the end of the session
CRITERIA: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[n])
