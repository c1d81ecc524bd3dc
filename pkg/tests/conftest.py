import pytest

from vantrees import families, prior


@pytest.fixture(scope="session")
def gauss():
    return families.gaussian_location()


@pytest.fixture(scope="session")
def bump():
    return prior.quartic_bump()


@pytest.fixture(scope="session")
def gauss_prior():
    return prior.gaussian_prior(0.0, 1.0)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
