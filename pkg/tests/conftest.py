import numpy as np
import pytest

from tada2go.toolkit.imagery.synthesis import generate_synthetic_raw
from tada2go.toolkit.jpegcodec.compression import compress_hard
from tada2go.toolkit.jpegcodec.quantization import QuantTable


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help="run slow end-to-end tests")


def pytest_configure(config):
    config.addinivalue_line('markers', "slow: end-to-end run, skipped without --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def qf85():
    return QuantTable.from_quality(85)


@pytest.fixture
def raw_pool():
    return generate_synthetic_raw(count=4, size=64, noise_alpha=0.5, noise_beta=4.0, smoothness=1.5, seed=0)


@pytest.fixture
def covers(raw_pool, qf85):
    return [compress_hard(image, qf85) for image in raw_pool]


@pytest.fixture
def separable_features():
    rng = np.random.default_rng(7)
    covers = rng.normal(0.0, 1.0, size=(40, 5))
    stegos = rng.normal(0.0, 1.0, size=(40, 5))
    covers[:, 0] -= 6.0
    stegos[:, 0] += 6.0
    return covers, stegos
