import os
import sys
from importlib import resources

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from sysgraph.dsl import load_model  # noqa: E402

FIXTURE_DIR = resources.files("sysgraph").joinpath("fixtures")
FIXTURES = sorted(p.name for p in FIXTURE_DIR.iterdir() if p.name.endswith(".sg"))


def fixture_path(name: str) -> str:
    if not name.endswith(".sg"):
        name += ".sg"
    return str(FIXTURE_DIR.joinpath(name))


def fixture_model(name: str):
    return load_model(fixture_path(name))


def fixture_graph(name: str):
    return fixture_model(name).graph()


@pytest.fixture
def txclient():
    return fixture_graph("txclient")


@pytest.fixture
def store(tmp_path):
    from sysgraph.versioning import VersionStore

    return VersionStore(tmp_path / ".sgv")


ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion with a PASS/FAIL line")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n, title = marker.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        verdict = "SKIP" if rep.skipped else ("PASS" if rep.passed else "FAIL")
        ACCEPTANCE[n] = (title, verdict)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, verdict = ACCEPTANCE[n]
        terminalreporter.write_line(f"{verdict} criterion {n}: {title}")
