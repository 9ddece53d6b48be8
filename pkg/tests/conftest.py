import numpy as np
import pytest

from biasaudit import AttributeSchema, ScoreTable

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    failed = report.failed
    if report.when == "call" or failed:
        prev = _CRITERIA.get(marker, "PASS")
        _CRITERIA[marker] = "FAIL" if failed or prev == "FAIL" else ("SKIP" if report.skipped else "PASS")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    m = item.get_closest_marker("criterion")
    if m is not None:
        outcome.get_result().criterion = m.args


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), status in sorted(_CRITERIA.items()):
        terminalreporter.write_line(f"criterion {number:2d} {status}: {title}")


@pytest.fixture
def small_schema():
    return AttributeSchema([
        ("hair", ["blond", "black", "bald"]),
        ("gender", ["man", "woman"]),
        ("age", ["young", "old"]),
    ])


@pytest.fixture
def random_table(small_schema):
    """Two-class table with every combination populated."""
    rng = np.random.default_rng(11)
    combos = np.array(list(small_schema.combinations()))
    assignments = np.repeat(combos, 12, axis=0)
    n = len(assignments)
    scores = rng.uniform(size=n)
    classes = rng.uniform(size=n) < 0.6
    classes[::2] = True
    classes[1::4] = False
    return ScoreTable(small_schema, assignments, scores, classes)
