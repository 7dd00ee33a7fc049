import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from iac.design import run_design  # noqa: E402
from iac.system_model import SystemConfig  # noqa: E402

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FIG2 = SystemConfig.from_tuple(6, (3, 1, 3, 2, 2))
OPTIMAL = SystemConfig.from_tuple(6, (3, 3, 2, 2, 2))


@pytest.fixture(scope="session")
def fig2_config():
    return FIG2


@pytest.fixture(scope="session")
def optimal_config():
    return OPTIMAL


@pytest.fixture(scope="session")
def fig2_design():
    return run_design(FIG2, channel_seed=0, graph_seed=0)


@pytest.fixture(scope="session")
def optimal_design():
    return run_design(OPTIMAL, channel_seed=0, graph_seed=0, optimal=True)
