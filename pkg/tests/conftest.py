import pytest

from reltune import fixtures
from reltune.analyzer import default_analyzer
from reltune.index import build_index, read_corpus
from reltune.metrics import read_judgments
from reltune.relevance import RelevanceConfig


@pytest.fixture(scope="session")
def analyzer():
    return default_analyzer()


@pytest.fixture(scope="session")
def corpus():
    return list(read_corpus(fixtures.CORPUS))


@pytest.fixture(scope="session")
def index(corpus, analyzer):
    return build_index(corpus, analyzer)


@pytest.fixture(scope="session")
def judgments():
    return read_judgments(fixtures.JUDGMENTS)


@pytest.fixture(scope="session")
def fixture_config():
    return RelevanceConfig.load(fixtures.CONFIG)


# -- acceptance summary -------------------------------------------------------

_criteria: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1].split("[")[0]
    if not name.startswith("test_criterion_"):
        return
    number = int(name.split("_")[2])
    failed = report.failed
    previous = _criteria.get(number, ("PASS", name))[0]
    if report.when == "call" or failed:
        _criteria[number] = ("FAIL" if failed or previous == "FAIL" else "PASS", name)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        status, name = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {status}  ({name})")
