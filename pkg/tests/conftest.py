import numpy as np
import pytest

from tsengvi.rng import make_rng


@pytest.fixture
def rng():
    return make_rng(2024)


def assert_close(a, b, atol):
    np.testing.assert_allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float),
                               rtol=0, atol=atol)


CRITERIA = []  # status lines appended by the acceptance suite


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
