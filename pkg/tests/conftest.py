from pathlib import Path

import numpy as np
import pytest

from minimal_class.core import RawTable, standardize

DATA_DIR = Path(__file__).parent / "data"


def make_data(n, p, rng, beta=None, noise=1.0):
    """Standardized random design; ``beta`` (padded with zeros) drives the response."""
    x = rng.standard_normal((n, p))
    b = np.zeros(p)
    if beta is not None:
        b[:len(beta)] = beta
    y = x @ b + noise * rng.standard_normal(n)
    return standardize(RawTable(x, [f"x{j}" for j in range(p)], y))


def spanned_data(n, p, model, rng):
    """Data whose response is an exact combination of the columns in ``model``."""
    x = rng.standard_normal((n, p))
    y = x[:, list(model)] @ rng.uniform(1.0, 2.0, len(model))
    return standardize(RawTable(x, [f"x{j}" for j in range(p)], y))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def toy_csv():
    return DATA_DIR / "toy.csv"


def pytest_terminal_summary(terminalreporter):
    import acceptance_log
    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
