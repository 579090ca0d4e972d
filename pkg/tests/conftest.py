import pytest

from cavcool.params import paper_params

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one summary line per acceptance criterion for the terminal report."""
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture
def params():
    """Reference 85Rb parameters at Delta_c = -kappa with Omega = 21 gamma/2."""
    return paper_params(-1.0)


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(12345)
