"""Known bound functions of a plant, i.e. everything the controller may use.

A plant of the lower-triangular form

    x_i' = phi_i(z, x, u, t) + phi_(i,i+1)(x, t) x_(i+1),   i < n
    x_n' = phi_n(z, x, u, t) + h(z, x, u, t) u
    z'   = q(z, x, u, t)

exposes its *known* structure through a :class:`PlantBounds` object: the
upper-diagonal functions, the bound function Gamma(x1), the phi_(i,j)
functions bounding the uncertain terms, the epsilon constants, and the
phi_(1,2)/phi_(2,3) sandwich functions.  Unknown constants (theta, phi_n0,
the input-gain lower bound) are deliberately absent; they live in
:mod:`ptstab.truth`.

For ``n == 2`` there is no phi_(2,3); by convention it is taken as 1.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels


def _exp(v):
    # overflow goes to inf so callers see a non-finite value, as on the jitted path
    try:
        return math.exp(v)
    except OverflowError:
        return math.inf


class PlantBounds:
    """Interface for the known bounds of a plant of order ``n``.

    Subclasses set ``n``, ``sigma``, ``eps`` (an ``n x n`` lower-triangular
    array with ``eps[i-1, j-1]`` the epsilon_(i,j) constant), ``eps_tilde``
    (length ``n``, ``eps_tilde[i-1]`` the epsilon~_(i,2) constant) and
    ``rho_upper`` (length ``n``, entries for i = 3..n-1 used) and implement
    the function methods.
    """

    n: int
    sigma: float
    eps: np.ndarray
    eps_tilde: np.ndarray
    rho_upper: np.ndarray

    def phi_upper(self, i, x, t):
        """phi_(i,i+1)(x, t) for i = 1..n-1 (and phi_(2,3) = 1 when n = 2)."""
        raise NotImplementedError

    def phi_bound(self, i, j, x, t):
        """phi_(i,j)(x, t), j <= i, bounding the uncertain terms."""
        raise NotImplementedError

    def Gamma(self, x1):
        raise NotImplementedError

    def dGamma(self, x1):
        h = 1e-6 * max(1.0, abs(x1))
        return (self.Gamma(x1 + h) - self.Gamma(x1 - h)) / (2.0 * h)

    def phibar12(self, x1):
        raise NotImplementedError

    def dphibar12(self, x1):
        h = 1e-6 * max(1.0, abs(x1))
        return (self.phibar12(x1 + h) - self.phibar12(x1 - h)) / (2.0 * h)

    def phitilde12(self, x1):
        raise NotImplementedError

    def phi23(self, x, t):
        return 1.0 if self.n == 2 else self.phi_upper(2, x, t)

    # -- aggregate constants used by w2 -------------------------------------
    @property
    def eps11(self):
        return float(self.eps[0, 0])

    @property
    def eps_col1_norm(self):
        """sqrt(sum_{i=2..n} eps_(i,1)^2)."""
        return math.sqrt(float(np.sum(self.eps[1:, 0] ** 2)))

    @property
    def eps_tilde_norm(self):
        """sqrt(sum_{i=2..n} eps~_(i,2)^2)."""
        return math.sqrt(float(np.sum(self.eps_tilde[1:] ** 2)))

    @property
    def eps_inner_norm(self):
        """sqrt(sum_{i=2..n-1} sum_{j=2..i} eps_(i,j)^2)."""
        total = 0.0
        for i in range(2, self.n):
            for j in range(2, i + 1):
                total += float(self.eps[i - 1, j - 1]) ** 2
        return math.sqrt(total)

    def values(self, x, t, out=None):
        """Packed bound values [phi12, phi23, Gamma, Gamma', phibar12, phibar12']."""
        if out is None:
            out = np.empty(kernels.NBOUND)
        x1 = float(x[0])
        out[kernels.PHI12] = self.phi_upper(1, x, t)
        out[kernels.PHI23] = self.phi23(x, t)
        out[kernels.GAM] = self.Gamma(x1)
        out[kernels.DGAM] = self.dGamma(x1)
        out[kernels.PBAR] = self.phibar12(x1)
        out[kernels.DPBAR] = self.dphibar12(x1)
        return out

    def kernel(self):
        """``(jitted bounds function, params)`` for the fast path, or None."""
        return None


class ExampleBounds(PlantBounds):
    """Known bounds of the fifth-order example (n = 3, two appended states).

    phi_(1,2) = 1 + x1^2, phi_(2,3) = 1 + x1^4, sigma = 1,
    Gamma(x1) = c_beta max(exp(x1)|x1|, 1 + x1^2),
    phi_(2,1) = phi_(2,2) = phi_(3,2) = 1 and the other phi_(i,j) zero,
    phibar12 = 3/2 and phitilde12 = (1 + x1^2)/(1 + x1^4).
    """

    n = 3

    def __init__(self, c_beta=1e-4, sigma=1.0):
        if not c_beta > 0:
            raise ValueError("c_beta must be > 0")
        self.c_beta = float(c_beta)
        self.sigma = float(sigma)
        # eps_(i,1): phi_(2,1)/phi_(1,2) <= 1; the others vanish
        self.eps = np.array([[0.0, 0.0, 0.0],
                             [1.0, 1.0, 0.0],
                             [0.0, 0.0, 0.0]])
        # eps~_(i,2): phi_(i,2)/sqrt(phi_(1,2) phi_(2,3)) <= 1 for i = 2, 3
        self.eps_tilde = np.array([0.0, 1.0, 1.0])
        self.rho_upper = np.zeros(3)
        self._phi = np.array([[0.0, 0.0, 0.0],
                              [1.0, 1.0, 0.0],
                              [0.0, 1.0, 0.0]])

    def phi_upper(self, i, x, t):
        x1 = float(x[0])
        if i == 1:
            return 1.0 + x1 * x1
        if i == 2:
            return 1.0 + x1 ** 4
        raise IndexError(f"phi_({i},{i + 1}) undefined for n=3")

    def phi_bound(self, i, j, x, t):
        return float(self._phi[i - 1, j - 1])

    def Gamma(self, x1):
        return self.c_beta * max(_exp(x1) * abs(x1), 1.0 + x1 * x1)

    def dGamma(self, x1):
        if _exp(x1) * abs(x1) >= 1.0 + x1 * x1:
            return self.c_beta * _exp(x1) * (abs(x1) + (1.0 if x1 >= 0.0 else -1.0))
        return self.c_beta * 2.0 * x1

    def phibar12(self, x1):
        return 1.5

    def dphibar12(self, x1):
        return 0.0

    def phitilde12(self, x1):
        return (1.0 + x1 * x1) / (1.0 + x1 ** 4)

    def _params(self):
        return np.array([self.c_beta])

    def kernel(self):
        return kernels.example_bounds, self._params()


class SecondOrderBounds(PlantBounds):
    """Known bounds of the second-order demonstration plant.

    phi_(1,2) = 1, Gamma = c_beta, phi_(2,1) = 1 and all other phi_(i,j)
    zero; phibar12 = phitilde12 = 1.
    """

    n = 2

    def __init__(self, c_beta=1.0, sigma=1.0):
        if not c_beta > 0:
            raise ValueError("c_beta must be > 0")
        self.c_beta = float(c_beta)
        self.sigma = float(sigma)
        self.eps = np.array([[0.0, 0.0],
                             [1.0, 0.0]])
        self.eps_tilde = np.zeros(2)
        self.rho_upper = np.zeros(2)
        self._phi = np.array([[0.0, 0.0],
                              [1.0, 0.0]])

    def phi_upper(self, i, x, t):
        if i in (1, 2):
            return 1.0
        raise IndexError(f"phi_({i},{i + 1}) undefined for n=2")

    def phi_bound(self, i, j, x, t):
        return float(self._phi[i - 1, j - 1])

    def Gamma(self, x1):
        return self.c_beta

    def dGamma(self, x1):
        return 0.0

    def phibar12(self, x1):
        return 1.0

    def dphibar12(self, x1):
        return 0.0

    def phitilde12(self, x1):
        return 1.0

    def _params(self):
        return np.array([self.c_beta])

    def kernel(self):
        return kernels.second_order_bounds, self._params()
