"""
Shared fixtures for the nuv-binning test-suite
"""

import logging
import os
import sys

import numpy as np
import pytest

# Allow running the tests from a source checkout without installing
sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "src"))

from nuv_binning.models import ExperimentConfig  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow Monte-Carlo tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte-Carlo acceptance run")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def worked_example():
    """Template, window and the {0, 2} | {5} cuts of the three-element example"""
    return np.array([2.0, 0.0, 5.0]), np.array([8.0, 2.0, 2.0]), [0, 2, 3]


@pytest.fixture
def small_config():
    return ExperimentConfig(
        trials=6,
        master_seed=7,
        d_range=(40, 80),
        bin_specs=("2", "5", "sturges"),
    )


@pytest.fixture
def random_psd():
    """Factory for well-conditioned random PSD matrices"""
    def make(rng, k):
        g = rng.standard_normal((k, k))
        return g @ g.T / k + 0.1 * np.eye(k)
    return make


@pytest.fixture(autouse=True)
def reset_package_logger():
    """Undo the logger setup done by cli.main"""
    yield
    package_logger = logging.getLogger("nuv_binning")
    package_logger.handlers.clear()
    package_logger.propagate = True
    package_logger.setLevel(logging.NOTSET)
