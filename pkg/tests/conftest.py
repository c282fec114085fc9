from __future__ import annotations

import pytest
from hypothesis import settings

from prosvio.sim import GaitSpec, TerrainSpec, simulate

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


@pytest.fixture(scope="session")
def short_stair_run():
    """Three-level stair climb; small enough for unit tests."""
    return simulate(TerrainSpec("stair", n_steps=3), GaitSpec(rng_seed=0))


@pytest.fixture(scope="session")
def short_obstacle_run():
    return simulate(TerrainSpec("obstacle"), GaitSpec(rng_seed=0))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
