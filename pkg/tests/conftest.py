import numpy as np
import pytest

from crcs.dataset import Dataset

# eight records over A, M, F, H, U, P and the response Z
COHORT_ROWS = [
    [1, 0, 1, 0, 0, 1, 1],
    [1, 0, 1, 0, 1, 0, 1],
    [1, 1, 0, 1, 0, 0, 0],
    [1, 1, 0, 0, 0, 1, 1],
    [0, 0, 1, 0, 0, 1, 0],
    [0, 0, 1, 0, 1, 0, 0],
    [0, 1, 0, 1, 0, 0, 0],
    [0, 1, 0, 1, 0, 0, 1],
]


@pytest.fixture
def cohort_data():
    return Dataset.from_matrix(np.array(COHORT_ROWS, dtype=bool), list("AMFHUPZ"), "Z")


def random_dataset(rng, n, m, density=None):
    """``m`` predictors plus a response column ``Z`` drawn independently."""
    density = rng.uniform(0.2, 0.6, size=m + 1) if density is None else np.full(m + 1, density)
    matrix = rng.random((n, m + 1)) < density
    names = [f"I{j}" for j in range(m)] + ["Z"]
    return Dataset.from_matrix(matrix, names, "Z")


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
