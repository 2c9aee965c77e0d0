import pytest

from laxforge.hierarchy import LaxModel, broer_kaup_spec

from .helpers import bk_ring


@pytest.fixture
def ring():
    return bk_ring()


@pytest.fixture
def bk():
    return LaxModel(broer_kaup_spec())


@pytest.fixture
def bk0():
    return LaxModel(broer_kaup_spec("zero"))


def pytest_terminal_summary(terminalreporter):
    from .test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
