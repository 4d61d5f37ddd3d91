from dataclasses import replace

import pytest
import yaml

from models.geometry_env import LinkEnvironment
from scenarios import SCENARIO_DIR, load_scenario


@pytest.fixture(scope="session")
def default_scenario():
    return load_scenario("default")


@pytest.fixture(scope="session")
def weak_los_scenario():
    return load_scenario("weak_los")


@pytest.fixture(scope="session")
def crossover_scenario():
    return load_scenario("mode_crossover")


@pytest.fixture
def scenario_doc():
    """Parsed default scenario document, free to mutate."""
    with open(SCENARIO_DIR / "default.yaml", "r", encoding="utf-8") as f:
        return yaml.safe_load(f)


@pytest.fixture
def write_scenario(tmp_path):
    def write(doc, name="scenario.yaml"):
        path = tmp_path / name
        with open(path, "w", encoding="utf-8") as f:
            yaml.safe_dump(doc, f)
        return path

    return write


def with_rician_factor(scenario, K):
    env = scenario.environment
    return replace(
        scenario,
        environment=LinkEnvironment(replace(env.uplink, K=K), replace(env.downlink, K=K), angle_unit=env.angle_unit),
    )
