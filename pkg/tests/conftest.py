import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import pytest  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion and print it."""

    def _report(number, title, checks):
        ok = all(passed for _, passed in checks)
        details = "; ".join(f"{'ok' if passed else 'FAILED'} {text}" for text, passed in checks)
        line = f"{'PASS' if ok else 'FAIL'} criterion {number} ({title}): {details}"
        ACCEPTANCE_LINES.append(line)
        print("\n" + line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
