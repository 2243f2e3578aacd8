import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_VERDICTS: dict = {}


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(tag: str, ok: bool, detail: str = ""):
        _VERDICTS[tag] = (bool(ok), detail)
        print(f"{tag} {'PASS' if ok else 'FAIL'} {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for tag in sorted(_VERDICTS, key=lambda s: int(s[1:])):
        ok, detail = _VERDICTS[tag]
        terminalreporter.write_line(f"{tag} {'PASS' if ok else 'FAIL'} {detail}")
