"""Jitted right-hand sides of the built-in plants.

Kept apart from :mod:`ptstab.kernels` so that nothing on the controller side
imports true plant dynamics.  Signatures are ``(x, z, u, t, params, dx, dz)``.
"""

import math

from ._jit import maybe_njit


@maybe_njit
def example_input_gain(x, z, t):
    return 1.0 + 0.5 * math.sin(t) * math.cos(z[1]) + x[0] ** 4 * (1.0 + math.exp(-abs(z[0])))


@maybe_njit
def example_rhs(x, z, u, t, pp, dx, dz):
    """Right-hand side of the fifth-order example; pp = [ta, tb, tc, td]."""
    ta = pp[0]
    tb = pp[1]
    tc = pp[2]
    td = pp[3]
    x1 = x[0]
    x2 = x[1]
    x3 = x[2]
    z1 = z[0]
    z2 = z[1]
    dx[0] = (1.0 + x1 * x1) * x2
    dx[1] = ((1.0 + x1 ** 4) * x3 + ta * math.cos(x2 * z1) * x2
             + tb * (1.0 + math.cos(t * u)) * math.exp(x1) * x1 * x1 * math.sin(z2))
    dx[2] = (example_input_gain(x, z, t) * u
             + tc * x1 * x1 * math.cos(x3 * z1) * x2 + td * (1.0 + x1 * x1))
    dz[0] = -100.0 * z1 + z2
    dz[1] = -100.0 * z2 + x3 * x3 + u


@maybe_njit
def second_order_input_gain(x, z, t):
    return 1.0 + 0.5 * math.sin(t + z[0])


@maybe_njit
def second_order_rhs(x, z, u, t, pp, dx, dz):
    """Second-order demo plant; pp = [tb, td]."""
    tb = pp[0]
    td = pp[1]
    dx[0] = x[1]
    dx[1] = (tb * x[0] * math.cos(z[0]) + td * (1.0 + 0.5 * math.sin(z[0]))
             + second_order_input_gain(x, z, t) * u)
    dz[0] = -z[0] + x[0]


@maybe_njit
def chain_rhs(x, z, u, t, pp, dx, dz):
    """Double integrator with unit input gain and frozen appended state."""
    dx[0] = x[1]
    dx[1] = u
    for i in range(z.shape[0]):
        dz[i] = 0.0
