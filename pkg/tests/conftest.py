from __future__ import annotations

import os
from pathlib import Path

import pytest

ACCEPTANCE_LINES: list[str] = []

FIXTURE_ENV = "BSDIST_JW_FIXTURE"
FIXTURE_DEFAULT = Path(__file__).parent / "fixtures" / "johnson_wichern.csv"


def jw_fixture_path() -> Path | None:
    """Path of the optional 25 x 4 bone-mineral file, if present."""
    p = Path(os.environ.get(FIXTURE_ENV, FIXTURE_DEFAULT))
    return p if p.is_file() else None


@pytest.fixture
def report_line():
    def record(line: str):
        print(line)
        ACCEPTANCE_LINES.append(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
