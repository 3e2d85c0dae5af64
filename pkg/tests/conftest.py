"""Session-scoped experiment runs shared by the acceptance tests.

Each shipped scenario is executed once per test session; fixtures hand out
the result together with the wall-clock runtime of the run.
"""

import time
from pathlib import Path

import pytest

from leonet.harness import run_experiment
from leonet.scenario import load_scenario

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def run_shipped(name: str, parallel: int = 1):
    scenario = load_scenario(SCENARIO_DIR / name)
    t0 = time.perf_counter()
    result = run_experiment(scenario, parallel=parallel)
    return result, time.perf_counter() - t0


@pytest.fixture(scope="session")
def exp1_small():
    """20x20 shell, three fixed city pairs. Serial keeps decision stats."""
    return run_shipped("experiment1_20x20.json")


@pytest.fixture(scope="session")
def exp1_large():
    """40x40 shell, same city pairs. Serial keeps decision stats."""
    return run_shipped("experiment1_40x40.json")


@pytest.fixture(scope="session")
def exp2():
    """Path diversity and stability run on the 40x40 shell."""
    return run_shipped("experiment2_40x40.json", parallel=2)


@pytest.fixture(scope="session")
def exp3():
    """Eleven moving stations converging on one fixed station."""
    return run_shipped("experiment3_moving.json")
