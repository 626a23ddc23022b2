import pytest
from hypothesis import HealthCheck, settings

from nptasmc.examples import gen_abt
from nptasmc.model import validate

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def pytest_configure(config):
    config.addinivalue_line("markers", "invariant: property-based invariant from the module contracts")
    config.addinivalue_line("markers", "slow: statistical test running many simulations")


@pytest.fixture(scope="session")
def abt():
    doc = gen_abt("ABT")
    return doc, validate(doc)


@pytest.fixture(scope="session")
def ab_t():
    doc = gen_abt("AB_T")
    return doc, validate(doc)


@pytest.fixture(scope="session")
def abrt():
    doc = gen_abt("ABrT")
    return doc, validate(doc)


ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
