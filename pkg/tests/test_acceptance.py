"""Every acceptance criterion at its stated tolerance and sample size.

Each test prints a single PASS/FAIL line; the full table is repeated in the
terminal summary.
"""

import pytest

from marcsim.validation import CRITERIA, FULL


@pytest.mark.slow
@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, len(CRITERIA) + 1)])
def test_acceptance(criterion, acceptance_log):
    result = criterion(FULL)
    acceptance_log.append(result)
    print(result.line())
    assert result.passed, result.line()
