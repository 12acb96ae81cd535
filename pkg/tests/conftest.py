import numpy as np
import pytest

from ampcs.model import ExperimentConfig, ProblemInstance, generate_instance


@pytest.fixture
def small_instance():
    return generate_instance(ExperimentConfig(N=40, n=20, k=3, seed=11), 0)


def hand_instance():
    A = np.array([[1.0, -1.0, 1.0, 1.0],
                  [1.0, 1.0, -1.0, 1.0]]) / np.sqrt(2.0)
    y = np.array([0.9, -0.3])
    return ProblemInstance(A=A, y=y)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
