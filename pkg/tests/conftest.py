import logging

import pytest

from ohmscope.config import ExperimentConfig
from ohmscope.pipeline import synth_dataset


@pytest.fixture(autouse=True)
def _quiet_logs(caplog):
    caplog.set_level(logging.ERROR)


@pytest.fixture(scope="session")
def small_config():
    return ExperimentConfig(per_class=40, grid_points=201, dataset_seed=11)


@pytest.fixture(scope="session")
def small_dataset(small_config):
    return synth_dataset(small_config)
