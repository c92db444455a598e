"""Prescribed-time adaptive stabilization with dynamic high-gain scaling.

Modules: ``timewarp`` (time-scale transformation and forcing functions),
``lyapunov`` (certificates and their verifier), ``controller`` (the control
law), ``plant`` (plants and assumption checks), ``sim`` (integration and
monitors) and ``cli``.
"""

from .controller import Controller, ControllerConfig, ControllerState
from .lyapunov import LyapunovCertificate, example_certificate, kappa, verify_certificate
from .plant import ChainPlant, ExamplePlant, SecondOrderPlant, check_assumptions
from .sim import SimConfig, SimulationError, Trajectory, lyapunov_monitors, run
from .timewarp import ForcingConfig, TimeWarp

__version__ = "0.1.0"

__all__ = [
    "ChainPlant", "Controller", "ControllerConfig", "ControllerState", "ExamplePlant",
    "ForcingConfig", "LyapunovCertificate", "SecondOrderPlant", "SimConfig", "SimulationError",
    "TimeWarp", "Trajectory", "check_assumptions", "example_certificate", "kappa",
    "lyapunov_monitors", "run", "verify_certificate",
]
