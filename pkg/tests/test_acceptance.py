"""The ten acceptance criteria, each at its stated tolerance.

Every test prints a one-line PASS/FAIL record (visible even with output
capture on) before asserting.
"""

import pytest

from degindex import acceptance

IDS = [cid for cid, _, _ in acceptance.CRITERIA]


@pytest.mark.parametrize("cid", IDS)
def test_criterion(cid, capsys):
    res = acceptance.run_criterion(cid)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.line()


def test_corrupted_tolerance_is_caught(capsys):
    res = acceptance.run_criterion("c2", corrupt=True)
    with capsys.disabled():
        print("\n(corrupted) " + res.line())
    assert not res.passed and res.failures
