"""Shared pytest wiring.

Collects the one-line verdicts emitted by the acceptance tests and
replays them in a dedicated terminal section so they stay visible even
when stdout capture swallows the in-test prints.
"""

import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record and print a '[PASS|FAIL] criterion N: ...' line."""

    def record(number, name, passed, detail=""):
        word = "PASS" if passed else "FAIL"
        line = f"[{word}] criterion {number}: {name}"
        if detail:
            line = f"{line} ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
