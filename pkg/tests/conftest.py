import numpy as np
import pytest

from bidder_selection import Extension
from bidder_selection.baselines import BaselineSettings
from bidder_selection.harness import ExperimentConfig
from bidder_selection.solver import SolverSettings

from tests import coin_flips, make_instance, three_bidders


@pytest.fixture
def settings():
    return Extension().load_config()


@pytest.fixture
def solver_settings():
    return SolverSettings()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def coin_instance():
    return make_instance(coin_flips, [1, 0], 2)


@pytest.fixture
def three_bidder_instance():
    return make_instance(three_bidders, [1, 0, 0], 2)


@pytest.fixture
def small_config():
    return ExperimentConfig(
        cells=((6, 2),),
        algorithms=("brute_force",),
        seeds=3,
        trials=2,
        timeout=60.0,
        grid_size=10,
        solver=SolverSettings(max_iters=200),
        baselines=BaselineSettings(),
    )


@pytest.fixture
def output_dir(tmp_path, monkeypatch):
    directory = tmp_path / "out"
    directory.mkdir()
    monkeypatch.setenv("BIDDER_SELECTION_OUTPUT_DIR", str(directory))
    return directory
