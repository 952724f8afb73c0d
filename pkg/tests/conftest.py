import numpy as np
import pytest

from optswitch.generators import (
    binomial_tree,
    chain_tree,
    signed_cost_chain,
    symmetric_instance,
)

TOL = 1e-9

_acceptance_lines: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Criterion outcomes, printed in the terminal summary."""
    return _acceptance_lines


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def chain():
    return signed_cost_chain()


@pytest.fixture(params=[chain_tree(3), binomial_tree(2, 0.3)], ids=["chain3", "binomial2"])
def symmetric(request):
    return symmetric_instance(request.param, c=1.5)
