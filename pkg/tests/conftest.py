import numpy as np
import pytest

from causal_combine.scm import ScmParams, table1_params

ACCEPTANCE_LINES: list[str] = []


def random_spd(rng, p, scale=1.0):
    A = rng.standard_normal((p, p))
    return scale * (A @ A.T / p + 0.1 * np.eye(p))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_scm():
    """p=3 treatments, d=2 confounders, correlated noise."""
    return ScmParams(
        B=np.array([[1.0, 0.5], [-0.7, 0.2], [0.3, -1.2]]),
        gamma=np.array([1.5, -0.8]),
        alpha=np.array([2.0, -1.0, 0.5]),
        sigma_nz=np.array([[1.0, 0.3], [0.3, 0.8]]),
        sigma_nx=np.array([[1.0, 0.2, 0.0], [0.2, 1.5, 0.1], [0.0, 0.1, 0.7]]),
        var_ny=0.5,
        intervention_cov=np.diag([1.2, 0.9, 1.1]),
    )


@pytest.fixture(scope="session")
def spread5():
    return table1_params("spread", 5.0, seed=7)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
