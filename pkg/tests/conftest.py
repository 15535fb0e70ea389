import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))  # for the oracles module

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


@pytest.fixture
def criterion(request):
    """Record a one-line verdict for an acceptance criterion."""
    lines = request.config.__dict__.setdefault("acceptance_lines", {})

    def record(number, ok, text):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {text}"
        lines[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.__dict__.get("acceptance_lines")
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(lines):
        terminalreporter.write_line(lines[number])
