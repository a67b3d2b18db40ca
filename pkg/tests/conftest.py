import numpy as np
import pytest

from routeplan.workload import ScoreMatrix

PAIR = np.array([[0.9, 0.8], [0.4, 0.7]])


@pytest.fixture
def pair_scores():
    return ScoreMatrix(("p1", "p2"), ("A", "B"), PAIR)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
