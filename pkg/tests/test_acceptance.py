"""Acceptance criteria 1-14; each test prints one PASS/FAIL line.

Run directly (``python tests/test_acceptance.py``) for the summary alone.
"""
import json

import pytest

from rosctl.io import to_jsonable
from rosctl.verify import CHECKS


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CHECKS))
def test_criterion(number, capsys):
    check = CHECKS[number]()
    with capsys.disabled():
        print(f"\n{check.line()}", flush=True)
    assert check.passed, json.dumps(to_jsonable(check.details), indent=2, sort_keys=True)


if __name__ == "__main__":
    import sys

    from rosctl.verify import run_checks

    results = run_checks(echo=True)
    sys.exit(0 if all(c.passed for c in results) else 1)
