"""Every acceptance criterion at its configured tolerance, one line per criterion."""

from __future__ import annotations

import pytest

from epiconf import acceptance

SEED = 17


@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number, acceptance_report):
    result = acceptance.run([number], seed=SEED)[0]
    acceptance_report.append(result.line())
    print()
    print(result.line())
    for name, (ok, value) in result.checks.items():
        print(f"    {'ok  ' if ok else 'FAIL'} {name} = {value}")
    assert result.passed, result.line()
