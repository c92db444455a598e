"""Ground-truth constants of the shipped plants, for monitors and tests only.

The controller never imports this module; the check lives in the test suite.
"""

from __future__ import annotations

from .plant import ChainPlant, ExamplePlant, SecondOrderPlant


def true_disturbance_constants(plant):
    """Return ``(theta, phi_n0, h_lower)`` for a shipped plant."""
    if isinstance(plant, ExamplePlant):
        cb = plant.bounds.c_beta
        theta = max(plant.theta_a, 2.0 * plant.theta_b, plant.theta_c) / cb
        return theta, plant.theta_d / cb, 0.5
    if isinstance(plant, SecondOrderPlant):
        # |tb x1 cos z1| <= Gamma theta |x1|, |td (1 + sin/2)| <= Gamma phi_n0
        cb = plant.bounds.c_beta
        return abs(plant.theta_b) / cb, 1.5 * abs(plant.theta_d) / cb, 0.5
    if isinstance(plant, ChainPlant):
        return 0.0, 0.0, 1.0
    raise TypeError(f"no ground truth for {type(plant).__name__}")


def theta_star(theta):
    return 1.0 + theta + theta * theta


def theta1_star(phi_n0, h_lower):
    return max(1.0 / h_lower, phi_n0 / h_lower)
