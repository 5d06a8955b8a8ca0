"""The ten end-to-end acceptance criteria, one test (and one printed line) each."""

import pytest

from artifact import acceptance as AC


@pytest.fixture(autouse=True, scope="module")
def shipped_fixture():
    AC.set_fixture("fig8")


@pytest.mark.parametrize("check", AC.CHECKS, ids=[f"criterion_{i + 1:02d}" for i in range(len(AC.CHECKS))])
def test_criterion(check, capsys):
    result = check()
    with capsys.disabled():
        print("\n" + result.line())
        if not result.ok:
            print(f"      details: {result.details}")
    assert result.ok, result.details
