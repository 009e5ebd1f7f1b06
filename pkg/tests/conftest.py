import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion id -> (description, passed, detail); filled by test_acceptance.py
ACCEPTANCE_RESULTS: dict = {}


@pytest.fixture
def record_criterion():
    def record(cid, description, passed, detail=""):
        ACCEPTANCE_RESULTS[cid] = (description, bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")

    def order(cid):
        digits = "".join(ch for ch in cid if ch.isdigit())
        return int(digits), cid

    for cid in sorted(ACCEPTANCE_RESULTS, key=order):
        description, passed, detail = ACCEPTANCE_RESULTS[cid]
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] criterion {cid}: {description}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
