import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from cbdc_pki.authority import materialize  # noqa: E402
from cbdc_pki.planner import plan_schedule  # noqa: E402

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def reference():
    return plan_schedule(12, 120, first_root_active=3)


@pytest.fixture(scope="session")
def reference_state(reference):
    return materialize(reference, manufacturers=("mfr-a", "mfr-b"))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
