import pytest

from captables.corpus import CORPUS_IDS, corpus_document
from captables.diagnose import CatHierarchy


@pytest.fixture(scope="session")
def corpus():
    return {eid: corpus_document(eid) for eid in CORPUS_IDS}


@pytest.fixture(scope="session")
def hierarchy(corpus):
    return CatHierarchy(corpus.values())


@pytest.fixture(scope="session")
def roomba(corpus):
    return corpus["roomba-core"]


def pytest_terminal_summary(terminalreporter):
    from criteria import summary_lines

    lines = list(summary_lines())
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
