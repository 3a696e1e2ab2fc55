"""End-to-end acceptance suite.

Runs every acceptance criterion once (shared session-scoped results) and
asserts each separately, so `pytest -v` shows one pass/fail line per
criterion. The heavy ensembles dominate the runtime of the whole test run.
"""

import pytest

from clse import acceptance

CRITERION_IDS = list(acceptance.CRITERIA)


@pytest.fixture(scope="session")
def results():
    opts = acceptance.Options()
    return {rec["id"]: rec for rec in acceptance.run_criteria(opts)}


@pytest.mark.parametrize("cid", CRITERION_IDS)
def test_criterion(results, cid):
    rec = results[cid]
    status = "PASS" if rec["passed"] else "FAIL"
    print(f"[{status}] {rec['id']}: {rec['name']} "
          f"(measured {rec['measured']:.3g}, threshold {rec['threshold']:.3g})")
    note = f" ({rec['note']})" if "note" in rec else ""
    assert rec["passed"], (
        f"{rec['id']} failed: {rec['name']} — measured {rec['measured']:.6g} "
        f"vs threshold {rec['threshold']:.6g}{note}")
