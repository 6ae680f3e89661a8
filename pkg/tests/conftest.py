"""Pytest configuration: tiny architectures and datasets shared by the tests."""
import logging

import pytest

from entropy_osr.data import SynthConfig, gen_synthetic
from entropy_osr.meta import TrainConfig
from entropy_osr.network import Arch

logging.basicConfig(
    level=logging.ERROR,
    format="%(asctime)s %(levelname)s [%(threadName)s] %(name)s %(message)s",
)


@pytest.fixture(scope="session")
def tiny_arch():
    return Arch(input_size=16, conv_channels=(4, 8), kernel_size=3, n_closed=2)


@pytest.fixture(scope="session")
def tiny_data():
    return gen_synthetic(
        SynthConfig(n_classes=4, per_class=12, test_per_class=6, image_size=16, seed=3)
    )


@pytest.fixture(scope="session")
def tiny_train(tiny_data):
    return tiny_data[0]


@pytest.fixture(scope="session")
def tiny_test(tiny_data):
    return tiny_data[1]


@pytest.fixture
def tiny_cfg():
    return TrainConfig(episodes=3, n_closed=2, n_support=2, n_query=2, n_open=2, seed=1)


@pytest.fixture
def tiny_options(tmp_path):
    """Command-line overrides for a fast end-to-end run inside ``tmp_path``."""
    return [
        "--n_classes", "4",
        "--per_class", "12",
        "--test_per_class", "6",
        "--image_size", "16",
        "--conv_channels", "4,8",
        "--n_closed", "2",
        "--n_support", "2",
        "--n_query", "2",
        "--n_open", "2",
        "--episodes", "3",
        "--eval_rounds", "2",
        "--gradcheck_entries", "5",
        "--checkpoint", str(tmp_path / "model.ckpt"),
        "--report_dir", str(tmp_path / "reports"),
    ]
