"""Collects the outcome of every ``criterion``-marked test and prints one line per criterion."""
import pytest

CRITERIA = {
    1: "X-ray round trip",
    2: "reduction identities",
    3: "derivative identities",
    4: "inversion round trips",
    5: "symmetry annihilation",
    6: "boundary limits",
    7: "principal-value engine",
    8: "Taylor-remainder identities",
}

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n = mark.args[0]
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _outcomes.setdefault(n, []).append(rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in CRITERIA.items():
        runs = _outcomes.get(n)
        if runs is None:
            status = "NOT RUN"
        else:
            status = "PASS" if all(runs) else "FAIL"
        tr.write_line(f"criterion {n} ({title}): {status}")
