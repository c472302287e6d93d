"""Acceptance criteria: one printed pass/fail line per criterion.

The full ``core`` suite runs once per session; each test then reports the
checks belonging to its criterion at the default tolerances.  Run the file
directly (``python tests/test_acceptance.py``) for the same lines without
pytest.
"""

import sys

import pytest

from gcflab import report as R

TITLES = {
    1: "soliton speed identity",
    2: "grim-reaper oracle",
    3: "radial translator",
    4: "volume under the translator and log barrier",
    5: "volume law and extinction times",
    6: "closed-form shrinkers",
    7: "Harnack checks",
    8: "comparison principle",
    9: "ancient oval construction",
    10: "Angenent oval oracle",
    11: "oval asymptotics",
    12: "perturbed translator",
}


def criterion_line(k, results):
    mine = [r for r in results if r.criterion == k]
    ok = bool(mine) and all(r.passed for r in mine)
    parts = ", ".join(f"{r.check}={r.status}" for r in mine)
    return ok, f"criterion {k:2d} [{'PASS' if ok else 'FAIL'}] {TITLES[k]}: {parts}"


@pytest.fixture(scope="session")
def results():
    return R.run_suite("core")


@pytest.mark.parametrize("k", sorted(TITLES))
def test_criterion(k, results, capsys):
    ok, line = criterion_line(k, results)
    with capsys.disabled():
        print("\n" + line)
        for r in results:
            if r.criterion == k:
                print("    " + r.line())
    if not ok:
        bad = {r.check: r.detail for r in results if r.criterion == k and not r.passed}
        pytest.fail(f"{line}\n{bad}")


if __name__ == "__main__":
    res = R.run_suite("core")
    lines = [criterion_line(k, res) for k in sorted(TITLES)]
    for _, line in lines:
        print(line)
    sys.exit(0 if all(ok for ok, _ in lines) else 1)
