import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from halfwalk import CoinOperator, DecoherenceModel, InitialState, evolve_channel  # noqa: E402

HADAMARD = CoinOperator(math.pi / 4)
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def exact_runs():
    """Memoized exact-channel runs keyed by (p, steps, chirality)."""
    cache = {}

    def get(p, steps, chirality=InitialState().chirality):
        key = (p, steps, chirality)
        if key not in cache:
            cache[key] = evolve_channel(
                InitialState(0, chirality), HADAMARD, DecoherenceModel(p), steps,
                {"coin": lambda t, rho: rho.coin_reduced(),
                 "P": lambda t, rho: (rho.sites, rho.position_probabilities())},
                memory_budget=2**30,
            )
        return cache[key]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
