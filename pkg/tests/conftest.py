import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("repo", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_criteria = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_A"):
        return
    crit = name[len("test_"):].split("_", 1)[0]
    failed = report.failed
    if report.when == "call" or failed:
        prev = _criteria.get(crit, (True, name))
        _criteria[crit] = (prev[0] and report.passed and not failed, name)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_criteria, key=lambda c: int(c[1:])):
        ok, name = _criteria[crit]
        terminalreporter.write_line(f"{crit:<4} {'PASS' if ok else 'FAIL'}  {name}")
