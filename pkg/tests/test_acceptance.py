"""The ten acceptance criteria, each at its stated tolerance and time limit.

One PASS/FAIL line per criterion is printed in the terminal summary.
"""
import pytest

from conftest import ACCEPTANCE_LINES

from suspension_lab.acceptance import CRITERIA

SEED = 42


@pytest.mark.parametrize("check", CRITERIA, ids=[f"criterion_{c.number:02d}" for c in CRITERIA])
def test_criterion(check):
    result = check(SEED)
    ACCEPTANCE_LINES.append(result.line())
    assert result.passed, result.to_dict()["details"]
    assert result.within_time, f"took {result.seconds:.1f}s, limit {result.limit:.0f}s"
