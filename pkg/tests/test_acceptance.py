"""Acceptance criteria 1-12, one pass/fail line each.

The full suite runs once per session (about a minute); each criterion is then
reported and asserted by its own test.
"""
import pytest

from toeplitz_pnt.acceptance import run

NUMBERS = list(range(1, 13))


@pytest.fixture(scope="module")
def results():
    res, _ = run(NUMBERS, seed=0)
    return {r.number: r for r in res}


@pytest.mark.parametrize("number", NUMBERS)
def test_criterion(results, number, capsys):
    res = results[number]
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.line()
