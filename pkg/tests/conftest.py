import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

# exact arithmetic and brute-force oracles make per-example timing meaningless
settings.register_profile("exact", deadline=None)
settings.load_profile("exact")

_LINES: list[str] = []


@pytest.fixture
def report():
    """Record a one-line acceptance verdict; all lines are echoed in the terminal summary."""

    def emit(number: int, ok: bool, detail: str):
        line = f"ACCEPTANCE {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _LINES.append(line)
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES):
            terminalreporter.write_line(line)
