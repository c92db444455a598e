import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from ptstab.controller import ControllerConfig  # noqa: E402
from ptstab.lyapunov import LyapunovCertificate, example_certificate  # noqa: E402
from ptstab.plant import ChainPlant, ExamplePlant, SecondOrderPlant  # noqa: E402
from ptstab.timewarp import ForcingConfig, TimeWarp  # noqa: E402

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"


@pytest.fixture
def ex_warp():
    return TimeWarp(0.2, 0.205, 0.05)


@pytest.fixture
def ex_forcing():
    return ForcingConfig(0.01, 0.5, 1e-4, 1e-4)


@pytest.fixture
def ex_plant():
    return ExamplePlant()


@pytest.fixture
def ex_controller(ex_warp, ex_forcing, ex_plant):
    return ControllerConfig(example_certificate(0.05), ex_warp, ex_forcing, ex_plant.bounds,
                            zeta0=0.25, zeta_floor=0.1, c_theta=1e-4, c_theta1=0.01, epsilon_r=1.0)


def second_order_setup(plant=None, sign_smoothing=0.0, T_bar=1.5):
    plant = plant or SecondOrderPlant(theta_b=1.0, theta_d=0.5, c_beta=0.1)
    cert = LyapunovCertificate(2, [[1e-3]], [1000.0], 2.0, 1e-3, 1e-3)
    cc = ControllerConfig(cert, TimeWarp(1.0, T_bar, 1.0), ForcingConfig(0.01, 0.5, 1e-4, 1e-4), plant.bounds,
                          zeta0=0.25, zeta_floor=0.1, c_theta=1e-3, c_theta1=1e-2, epsilon_r=1.0,
                          sign_smoothing=sign_smoothing)
    return plant, cc


def chain_setup():
    return second_order_setup(ChainPlant(c_beta=0.1))


@pytest.fixture
def demo():
    return second_order_setup()
