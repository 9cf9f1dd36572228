import pytest

from simentangle import Semiprime, make_params, validate_setup

# n -> its three cube roots modulo 77, for every unit n that is a cube
CUBE_ROOTS_77 = {
    1: (1, 23, 67), 6: (19, 41, 52), 8: (2, 46, 57), 13: (40, 62, 73),
    15: (16, 60, 71), 20: (26, 48, 59), 27: (3, 47, 69), 29: (39, 50, 72),
    34: (12, 34, 45), 36: (9, 53, 64), 41: (13, 24, 68), 43: (32, 43, 65),
    48: (5, 27, 38), 50: (8, 30, 74), 57: (18, 29, 51), 62: (6, 17, 61),
    64: (4, 15, 37), 69: (20, 31, 75), 71: (25, 36, 58), 76: (10, 54, 76),
}


@pytest.fixture
def s77():
    return Semiprime(77, 7, 11)


@pytest.fixture
def cubic77(s77):
    return validate_setup(3, s77)


@pytest.fixture
def square77(s77):
    return validate_setup(2, s77)


@pytest.fixture
def worked_params(cubic77):
    """Alice holds 5, Bob holds 38, both cube roots of 48; e=7, m=2."""
    return make_params(cubic77, 7, 2, 5, 38)


_criteria = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _criteria.append((marker.args[0], marker.args[1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    merged = {}
    for number, title, outcome in _criteria:
        merged.setdefault((number, title), []).append(outcome)
    terminalreporter.section("acceptance criteria")
    for (number, title), outcomes in sorted(merged.items()):
        verdict = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"AC{number:<3} {verdict}  {title}")
