import os

import pytest

from dragphase.config import Environment, SatelliteParams, Scenario


def pytest_collection_modifyitems(config, items):
    if os.environ.get("DRAGPHASE_FULLSCALE") == "1":
        return
    skip = pytest.mark.skip(reason="set DRAGPHASE_FULLSCALE=1 to run the N=105 calibration")
    for item in items:
        if "fullscale" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def sat():
    return SatelliteParams()


@pytest.fixture(scope="session")
def env():
    return Environment()


@pytest.fixture
def scn2():
    return Scenario(n_sats=2)


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in RESULTS:
        terminalreporter.write_line(line)
