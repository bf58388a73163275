"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines are
written straight to the terminal even when output capture is on. The same
criteria are available from the command line as ``ctinfo validate``.
"""

import json

import pytest

from ctinfo.acceptance import CRITERIA, DEFAULT_SEED


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion_{n:02d}")
def test_criterion(number, capsys):
    res = CRITERIA[number](DEFAULT_SEED, 1)
    with capsys.disabled():
        print("\n" + res.summary_line())
    failing = [c.as_dict() for c in res.checks if not c.passed()]
    detail = json.dumps({"failing_checks": failing, "runtime_s": round(res.runtime, 2),
                         "budget_s": res.budget}, default=str)
    assert res.passed(), detail


if __name__ == "__main__":
    from ctinfo.acceptance import run_criteria

    results = run_criteria(seed=DEFAULT_SEED, echo=print)
    raise SystemExit(0 if all(r.passed() for r in results) else 1)
