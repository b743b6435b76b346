"""Acceptance gate: every criterion of the verification suite must pass.

Run with -v (or -s) to see one line per criterion with the measured values.
"""

import pytest

from axmaxwell import verification


@pytest.mark.parametrize(
    "criterion", verification.ALL_CRITERIA, ids=lambda fn: fn.__name__
)
def test_criterion(criterion):
    result = criterion()
    line = f"{'PASS' if result.passed else 'FAIL'} criterion {result.number}: {result.name} ({result.detail})"
    print(line)
    assert result.passed, line
