import pytest

from mkmr import Rng, build_gaussian, degenerate_gaussian

_criteria = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when != "call":
        return
    number, title = mark.args
    _criteria.append((number, title, item.name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, name, outcome in sorted(_criteria):
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {verdict}  {title}  [{name}]")


@pytest.fixture
def rng():
    return Rng(0xC0FFEE)


@pytest.fixture(scope="session")
def gauss():
    return build_gaussian(3.2, 6)


@pytest.fixture(scope="session")
def zero_noise():
    return degenerate_gaussian()
