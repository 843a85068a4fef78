import os

import pytest
from hypothesis import HealthCheck, settings

from histmso.history import MetaParams
from histmso.traceio import load_fixture

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def fig1():
    return load_fixture("fig1")


@pytest.fixture
def meta2():
    return MetaParams(("p1", "p2"), ("x",), ("v1", "v2"))


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_LINES

    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
