from __future__ import annotations

import pytest

_LINES = pytest.StashKey[list]()


@pytest.fixture
def acceptance_report(request):
    """Collects one summary line per acceptance criterion for the terminal summary."""
    return request.config.stash.setdefault(_LINES, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
