"""The seventeen acceptance criteria, one test each.

One pass/fail line per criterion is printed in the terminal summary.
"""

import pytest

from signet.acceptance import CRITERIA

RESULTS = []


@pytest.mark.slow
@pytest.mark.parametrize("cid", sorted(CRITERIA))
def test_criterion(cid):
    result = CRITERIA[cid]()
    RESULTS.append(result)
    print(result.line())
    assert result.passed, result.line()


def test_all_criteria_registered():
    assert sorted(CRITERIA) == list(range(1, 18))
