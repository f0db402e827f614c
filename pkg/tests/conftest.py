import pytest

from stsim.config import RunConfig, SparsityConfig
from stsim.kernel.sparsity import SparsityStats
from stsim.workload import build_training_graph


@pytest.fixture(scope="session")
def default_cfg():
    return RunConfig()


@pytest.fixture(scope="session")
def fixed_cfg():
    return RunConfig(sparsity=SparsityConfig(mode="fixed"))


@pytest.fixture(scope="session")
def default_graph(default_cfg):
    return build_training_graph(default_cfg.model)


@pytest.fixture(scope="session")
def stats():
    return SparsityStats(0.2, 0.2, 0.3)
