"""The sixteen acceptance criteria, each at its stated tolerance.

Every criterion prints one ``[PASS]``/``[FAIL]`` line; the lines are also
collected and repeated in the terminal summary.
"""

import pytest

from pwsbl.acceptance import CRITERIA, format_result, run_criterion


@pytest.mark.acceptance
@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion_{n:02d}")
def test_criterion(number, acceptance_lines):
    res = run_criterion(number)
    line = format_result(res)
    print(line)
    acceptance_lines.append(line)
    assert res.passed, line
