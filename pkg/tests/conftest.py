import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from pktembed import kernels  # noqa: E402


@pytest.fixture(params=kernels.available())
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance(request):
    """Record one result line per acceptance criterion."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def record(number, name, ok, detail):
        status = "INFO" if ok is None else ("PASS" if bool(ok) else "FAIL")
        line = f"[{status}] criterion {number:>2}: {name}: {detail}"
        lines.append(line)
        print(line)
        return None if ok is None else bool(ok)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
