import numpy as np
import pytest

from keygraph.classifier import train
from keygraph.config import PipelineConfig
from keygraph.synth import random_shapes_image

ACCEPTANCE_RESULTS = []


@pytest.fixture(scope="session")
def model_image():
    return random_shapes_image(240, 180, 30, np.random.default_rng(7))


@pytest.fixture(scope="session")
def small_config():
    # fewer model keypoints keeps the per-test index small
    return PipelineConfig(model_max_keypoints=40)


@pytest.fixture(scope="session")
def small_index(model_image, small_config):
    return train(model_image, small_config)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(line)
