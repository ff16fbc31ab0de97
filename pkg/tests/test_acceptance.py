"""Every acceptance criterion at its pinned tolerance, one verdict line each.

Criteria share one audit so the bound-state checks of the last criterion see
every state produced by the earlier ones; run the module as a whole.
"""

import pytest

from graphnls.verify import CRITERIA, Audit, criterion_10, ground_state_samples


@pytest.fixture(scope="module")
def audit():
    return Audit()


def record(log, n, checks):
    verdict = "PASS" if checks and all(c.passed for c in checks) else "FAIL"
    for c in checks:
        print(c.line())
    log.append(f"criterion {n}: {verdict} ({sum(c.passed for c in checks)}/{len(checks)} checks)")
    log.extend("    " + c.line() for c in checks)
    failed = [c.line() for c in checks if not c.passed]
    assert checks and not failed, "\n".join(failed)


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n, audit, acceptance_log):
    record(acceptance_log, n, CRITERIA[n](audit))


def test_criterion_10(audit, acceptance_log):
    ground_state_samples(audit)
    record(acceptance_log, 10, criterion_10(audit))
