import numpy as np
import pytest

from fockbench import build_operators

_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def ops16():
    return build_operators(16)


@pytest.fixture(scope="session")
def ops32():
    return build_operators(32)


@pytest.fixture(scope="session")
def ops48():
    return build_operators(48)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when not in ("setup", "call"):
        return
    name = marker.args[0]
    _ACCEPTANCE[name] = _ACCEPTANCE.get(name, True) and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if _ACCEPTANCE[name] else 'FAIL'}  {name}")
