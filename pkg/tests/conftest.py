import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE: dict[int, str] = {}


class AcceptanceLog:
    def __call__(self, number: int, title: str, checks: list[tuple[str, bool]], detail: str = "") -> bool:
        ok = all(passed for _, passed in checks)
        failed = [label for label, passed in checks if not passed]
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}"
        if detail:
            line += f" | {detail}"
        if failed:
            line += f" | failed: {'; '.join(failed)}"
        _ACCEPTANCE[number] = line
        print(line)
        return ok


@pytest.fixture
def acceptance_log():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
