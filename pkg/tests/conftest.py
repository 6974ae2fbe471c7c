from pathlib import Path

import pytest

from iecache.datasets import TaskInstance
from iecache.gateway import Gateway, ScriptedBackend
from iecache.schema import ExtractionSchema, SchemaSlot

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def scripted(*responses):
    return Gateway(ScriptedBackend(list(responses)))


@pytest.fixture
def speaker_schema():
    return ExtractionSchema((SchemaSlot("speaker", "who spoke"),))


@pytest.fixture
def two_slot_schema():
    return ExtractionSchema((SchemaSlot("speaker", "who spoke"), SchemaSlot("time", "when", "datetime")))


@pytest.fixture
def task():
    return TaskInstance("t1", "Who spoke first?", "Alice: hello.\nBob: hi.", ("alice",))


# acceptance summary: one PASS/FAIL line per criterion, shown after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
